#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace secreflect {

// Exit codes shared by every subcommand.
enum ExitCode : int {
    kExitOk = 0,
    kExitUsage = 1,
    kExitExternal = 2,
    kExitNotAccepted = 3,
};

inline constexpr const char* kVersion = "0.1.0";

// Directory holding templates/, rules/ and providers/. SECREFLECT_DATA_DIR
// overrides the build-time location.
std::filesystem::path data_dir();

// Entry point behind the secreflect binary. args excludes the program name.
int run_cli(const std::vector<std::string>& args, std::istream& in, std::ostream& out,
            std::ostream& err);

} // namespace secreflect

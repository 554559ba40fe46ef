#pragma once

// Small OS and encoding helpers shared by the modules.

#include <chrono>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace secreflect {

// Lowercase hex SHA-256 of the bytes of text.
std::string sha256_hex(std::string_view text);

// "2026-10-19T08:15:00Z"
std::string format_rfc3339(std::chrono::system_clock::time_point tp);

std::string read_file(const std::filesystem::path& path);
// Writes to a sibling temporary file and renames it over path.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

// Scoped temporary directory, removed recursively on destruction.
class TempDir {
public:
    explicit TempDir(std::string_view prefix = "secreflect");
    ~TempDir();
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const noexcept { return path_; }

private:
    std::filesystem::path path_;
};

struct ProcessResult {
    int exit_code = -1;
    std::string out;
    std::string err;
};

// Resolves program against PATH (or returns it when it contains a slash and
// is executable). Empty when not found.
std::filesystem::path find_executable(std::string_view program);

// Runs argv[0] with the given arguments, capturing stdout and stderr. Throws
// ToolMissingError when the program cannot be found.
ProcessResult run_process(const std::vector<std::string>& argv,
                          const std::filesystem::path& working_dir = {});

// Single-quotes text for /bin/sh.
std::string shell_quote(std::string_view text);

// Splits a command line on whitespace, honouring single and double quotes.
std::vector<std::string> split_command(std::string_view command);

std::string trim(std::string_view text);

// splitmix64 finalizer; used to derive per-trial seeds.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t value);

} // namespace secreflect

#include <doctest.h>

#include <fstream>
#include <sstream>

#include "secreflect/errors.hpp"
#include "secreflect/util.hpp"
#include "secreflect/validators.hpp"

using namespace secreflect;
namespace fs = std::filesystem;

namespace {

const fs::path kScanner = fs::path(SECREFLECT_TEST_FIXTURES) / "scanner";

struct Label {
    std::string name;
    Language language;
    std::string cwe;
    std::string rule;
};

std::vector<Label> labels() {
    std::vector<Label> out;
    std::istringstream in(read_file(kScanner / "labels.tsv"));
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#')
            continue;
        std::istringstream row(line);
        Label l;
        std::string lang;
        row >> l.name >> lang >> l.cwe >> l.rule;
        l.language = parse_language(lang);
        out.push_back(l);
    }
    return out;
}

std::string fixture(const Label& l, const char* kind) {
    const auto ext = l.language == Language::python ? ".py" : ".c";
    return read_file(kScanner / (l.name + "." + kind + ext));
}

std::size_t temp_entries() {
    std::size_t n = 0;
    for (const auto& e : fs::directory_iterator(fs::temp_directory_path()))
        n += e.path().filename().string().rfind("secreflect", 0) == 0 ? 1 : 0;
    return n;
}

} // namespace

TEST_CASE("python syntax is decided by a full parse") {
    CHECK(check_syntax(Language::python, "def f():\n    return 1"));
    CHECK_FALSE(check_syntax(Language::python, "def f(:"));
    CHECK_FALSE(check_syntax(Language::python, "def f():\nreturn 1\n"));
}

TEST_CASE("C translation unit with a missing semicolon does not compile") {
    CHECK(check_syntax(Language::c_cpp, "int f(void) {\n    return 1;\n}\n"));
    CHECK_FALSE(check_syntax(Language::c_cpp, "int f(void) {\n    return 1\n}\n"));
}

TEST_CASE("syntax checking leaves no temporary files behind") {
    const auto before = temp_entries();
    check_syntax(Language::c_cpp, "int x;\n");
    check_syntax(Language::python, "x = 1\n");
    CHECK(temp_entries() == before);
}

TEST_CASE("a missing checker binary is a tool error, not a failed compile") {
    SyntaxCheckerConfig cfg;
    cfg.python = "definitely-not-a-python-binary";
    cfg.c_cpp = {"definitely-not-a-compiler -fsyntax-only"};
    CHECK_THROWS_AS(check_syntax(Language::python, "x = 1", cfg), ToolMissingError);
    CHECK_THROWS_AS(check_syntax(Language::c_cpp, "int x;", cfg), ToolMissingError);
}

TEST_CASE("shell command built by concatenation is one CWE-078 finding") {
    const auto f = heuristic_scan(Language::python,
                                  "import os\n\ndef run(name):\n    os.system(\"ls \" + name)\n");
    REQUIRE(f.size() == 1);
    CHECK(f[0].cwe == std::optional<std::string>("CWE-078"));
    CHECK(f[0].severity == Severity::warning);
    CHECK(f[0].span.start_line == 4);
}

TEST_CASE("argument-vector process call has no CWE-078 finding") {
    const auto f = heuristic_scan(Language::python,
                                  "import subprocess\n\ndef run(name):\n"
                                  "    subprocess.run([\"ls\", name], check=True)\n");
    CHECK(f.empty());
}

TEST_CASE("gets(buf) is reported by unsafe-call-gets") {
    const auto f = heuristic_scan(Language::c_cpp, "#include <stdio.h>\nvoid r(void) {\n"
                                                   "    char buf[8];\n    gets(buf);\n}\n");
    REQUIRE(f.size() == 1);
    CHECK(f[0].rule_id == "unsafe-call-gets");
    CHECK(f[0].cwe == std::optional<std::string>("CWE-787"));
}

TEST_CASE("comment lines are not scanned") {
    CHECK(heuristic_scan(Language::c_cpp, "// gets(buf) is banned\n").empty());
    CHECK(heuristic_scan(Language::python, "# os.system('x' + y)\n").empty());
}

TEST_CASE("every seeded vulnerable fixture is flagged; every fixed one is clean") {
    const auto all = labels();
    REQUIRE(all.size() >= 10);
    for (const auto& l : all) {
        CAPTURE(l.name);
        const auto vuln = heuristic_scan(l.language, fixture(l, "vuln"));
        bool labeled = false;
        for (const auto& f : vuln)
            labeled = labeled || (f.cwe == l.cwe && f.rule_id == l.rule);
        CHECK(labeled);
        CHECK(heuristic_scan(l.language, fixture(l, "fixed")).empty());
    }
}

TEST_CASE("fixtures compile, so scanner verdicts are not unresolved") {
    for (const auto& l : labels()) {
        CAPTURE(l.name);
        CHECK(check_syntax(l.language, fixture(l, "vuln")));
        CHECK(check_syntax(l.language, fixture(l, "fixed")));
    }
}

TEST_CASE("rules file parsing") {
    const auto pack = RulePack::parse(
        "# comment\n"
        "r1 python CWE-78 error regex \\beval\\(\n"
        "r2 any CWE-798 warning iregex token\\s*=\\s*\"\n"
        "r3 c_cpp CWE-022 note regex-unless fopen\\( !! realpath\\(\n");
    REQUIRE(pack.rules().size() == 3);
    CHECK(pack.rules()[0].cwe == "CWE-078");
    CHECK(pack.rules()[0].severity == Severity::error);
    CHECK_FALSE(pack.rules()[1].language.has_value());
    CHECK(pack.scan(Language::python, "x = eval(s)\n").size() == 1);
    CHECK(pack.scan(Language::c_cpp, "TOKEN = \"abc\"\n").size() == 1);
    CHECK(pack.scan(Language::c_cpp, "fopen(p);\n").size() == 1);
    CHECK(pack.scan(Language::c_cpp, "realpath(p, r);\nfopen(r);\n").empty());
    CHECK_THROWS_AS(RulePack::parse("r1 python CWE-78 warning regex\n"), UsageError);
    CHECK_THROWS_AS(RulePack::parse("r1 python CWE-78 warning regex (\n"), UsageError);
    CHECK_THROWS_AS(RulePack::parse("r1 cobol CWE-78 warning regex x\n"), UsageError);
}

TEST_CASE("verdict blocking respects the severity threshold") {
    ValidationVerdict v{true, {{"a", std::nullopt, "m", {1, 1}, Severity::note},
                               {"b", std::nullopt, "m", {2, 2}, Severity::warning}}};
    CHECK(v.blocking(Severity::warning).size() == 1);
    CHECK(v.blocking(Severity::error).empty());
    CHECK(v.clean(Severity::error));
    CHECK_FALSE(v.clean(Severity::warning));
    ValidationVerdict broken{false, {}};
    CHECK_FALSE(broken.clean(Severity::warning));
}

TEST_CASE("standard validator combines syntax and rules") {
    StandardValidator v({}, RulePack::builtin());
    const auto ok = v.validate(Language::python, "import subprocess\nsubprocess.run(['ls'])\n");
    CHECK(ok.compiled);
    CHECK(ok.findings.empty());
    const auto bad = v.validate(Language::python, "import os\nos.system('ls ' + d)\n");
    CHECK(bad.compiled);
    CHECK(bad.findings.size() == 1);
    CHECK_FALSE(v.validate(Language::python, "def (").compiled);
}

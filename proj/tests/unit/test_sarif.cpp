#include <doctest.h>

#include "secreflect/errors.hpp"
#include "secreflect/util.hpp"
#include "secreflect/validators.hpp"

using namespace secreflect;
namespace fs = std::filesystem;

namespace {
const fs::path kSarif = fs::path(SECREFLECT_TEST_FIXTURES) / "sarif";
}

TEST_CASE("two-result fixture parses to two findings") {
    const auto r = parse_sarif_text(read_file(kSarif / "two_results.sarif"));
    REQUIRE(r.findings.size() == 2);
    CHECK(r.warnings.empty());
    CHECK(r.findings[0].rule_id == "py/command-line-injection");
    CHECK(r.findings[0].severity == Severity::warning);
    CHECK(r.findings[0].cwe == std::optional<std::string>("CWE-078"));
    CHECK(r.findings[0].span == Span{5, 5});
    CHECK(r.findings[1].rule_id == "py/sql-injection");
    CHECK(r.findings[1].severity == Severity::error);
    CHECK(r.findings[1].cwe == std::optional<std::string>("CWE-089"));
    CHECK(r.findings[1].span == Span{9, 11});
    CHECK(r.findings[1].message == "This SQL query depends on a user-provided value.");
}

TEST_CASE("empty results parse to no findings") {
    CHECK(parse_sarif_text(read_file(kSarif / "empty_results.sarif")).findings.empty());
}

TEST_CASE("missing ruleId becomes unknown with a warning") {
    const auto r = parse_sarif_text(read_file(kSarif / "missing_rule_id.sarif"));
    REQUIRE(r.findings.size() == 1);
    CHECK(r.findings[0].rule_id == "unknown");
    CHECK(r.findings[0].severity == Severity::note);
    CHECK(r.warnings.size() == 1);
}

TEST_CASE("malformed SARIF cites the violating path") {
    try {
        parse_sarif_text(read_file(kSarif / "malformed.sarif"));
        FAIL("expected a SARIF error");
    } catch (const SarifError& e) {
        CHECK(std::string(e.what()).find("$.runs[0].results[1].level") != std::string::npos);
    }
    CHECK_THROWS_AS(parse_sarif_text("not json"), SarifError);
    CHECK_THROWS_AS(parse_sarif_text(R"({"runs": {}})"), SarifError);
}

TEST_CASE("findings survive a SARIF round trip") {
    const auto r = parse_sarif_text(read_file(kSarif / "two_results.sarif"));
    const auto again = parse_sarif(findings_to_sarif(r.findings));
    CHECK(again.findings == r.findings);
    const std::vector<Finding> mixed = {
        {"r-note", std::nullopt, "n", {1, 2}, Severity::note},
        {"r-err", std::string("CWE-1004"), "e", {3, 3}, Severity::error}};
    CHECK(parse_sarif(findings_to_sarif(mixed)).findings == mixed);
}

TEST_CASE("external analyzer materializes the candidate and reads its SARIF") {
    const auto fixture = (kSarif / "two_results.sarif").string();
    const ExternalAnalyzerConfig cfg{"test -f {workspace}/candidate.py && cp " + shell_quote(fixture) +
                                     " {output}"};
    const auto r = run_external_analyzer(cfg, Language::python, "print(1)\n");
    CHECK(r.findings.size() == 2);

    StandardValidator v({}, cfg);
    const auto verdict = v.validate(Language::python, "print(1)\n");
    CHECK(verdict.compiled);
    CHECK(verdict.findings.size() == 2);
}

TEST_CASE("external analyzer failures are distinct errors") {
    CHECK_THROWS_AS(run_external_analyzer({"definitely-not-an-analyzer {workspace} {output}"},
                                          Language::python, "x = 1\n"),
                    ToolMissingError);
    CHECK_THROWS_WITH_AS(run_external_analyzer({"echo bad >&2; exit 4"}, Language::python, "x = 1\n"),
                         doctest::Contains("bad"), ToolFailedError);
    CHECK_THROWS_AS(run_external_analyzer({"echo '{' > {output}"}, Language::python, "x = 1\n"),
                    SarifError);
}

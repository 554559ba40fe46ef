#pragma once

// Objective verdicts on candidates: syntax checking, the built-in rule pack,
// and the external SARIF analyzer adapter.

#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <regex>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "secreflect/domain.hpp"

namespace secreflect {

struct Span {
    int start_line = 1;
    int end_line = 1;

    friend bool operator==(const Span&, const Span&) = default;
};

struct Finding {
    std::string rule_id;
    std::optional<std::string> cwe;
    std::string message;
    Span span;
    Severity severity = Severity::warning;

    friend bool operator==(const Finding&, const Finding&) = default;
};

// An uncompilable candidate is unresolved: its findings never count.
struct ValidationVerdict {
    bool compiled = false;
    std::vector<Finding> findings;

    // Findings at or above the threshold.
    std::vector<Finding> blocking(Severity threshold) const;
    bool clean(Severity threshold) const { return compiled && blocking(threshold).empty(); }
};

struct SyntaxCheckerConfig {
    std::string python = "python3";
    // Tried in order for c_cpp; the first success decides.
    std::vector<std::string> c_cpp = {"cc -fsyntax-only -w -std=gnu99 -x c",
                                      "c++ -fsyntax-only -w -std=gnu++17 -x c++"};
};

// python: full parse with the interpreter's ast module. c_cpp: compiler in
// syntax-only mode. Throws ToolMissingError if no checker binary exists.
bool check_syntax(Language language, std::string_view code, const SyntaxCheckerConfig& config = {});

enum class PatternKind {
    regex,        // ECMAScript regex matched per line
    iregex,       // same, case-insensitive
    regex_unless, // "A !! B": line matches A and no line of the file matches B
};

struct Rule {
    std::string rule_id;
    std::optional<Language> language; // nullopt: applies to every language
    std::string cwe;
    Severity severity = Severity::warning;
    PatternKind kind = PatternKind::regex;
    std::string pattern;
};

// Compiled, immutable rule set.
class RulePack {
public:
    RulePack() = default;
    explicit RulePack(std::vector<Rule> rules);

    // Rules file: one rule per line,
    //   rule_id language cwe severity kind pattern...
    // with the pattern taking the rest of the line. language is python, c_cpp
    // or any; kind is regex, iregex or regex-unless. '#' starts a comment line.
    static RulePack parse(std::string_view text);
    static RulePack load(const std::filesystem::path& path);
    // The rule pack shipped in data/rules/default.rules.
    static const RulePack& builtin();

    const std::vector<Rule>& rules() const noexcept { return rules_; }

    std::vector<Finding> scan(Language language, std::string_view code) const;

private:
    struct Compiled {
        std::regex primary;
        std::optional<std::regex> unless;
    };
    std::vector<Rule> rules_;
    std::vector<Compiled> compiled_;
};

std::vector<Finding> heuristic_scan(Language language, std::string_view code,
                                    const RulePack& rules = RulePack::builtin());

// SARIF 2.1.0 subset: runs[].results[] with ruleId, level, message.text,
// locations[0].physicalLocation.region. Missing ruleId becomes "unknown"
// with a warning appended. CWE comes from result or rule tags such as
// "external/cwe/cwe-078" or a "cwe" property.
struct SarifParseResult {
    std::vector<Finding> findings;
    std::vector<std::string> warnings;
};

// Throws SarifError citing the JSON path of the first violation.
SarifParseResult parse_sarif(const nlohmann::json& sarif);
SarifParseResult parse_sarif_text(std::string_view text);
nlohmann::json findings_to_sarif(const std::vector<Finding>& findings,
                                 std::string_view tool_name = "secreflect");

struct ExternalAnalyzerConfig {
    // Shell command with {workspace} and {output} placeholders.
    std::string command;
};

// Materializes the code as candidate.<ext> in a temporary workspace, runs the
// command, and parses the SARIF it writes to {output}.
SarifParseResult run_external_analyzer(const ExternalAnalyzerConfig& config, Language language,
                                       std::string_view code);

class Validator {
public:
    virtual ~Validator() = default;
    virtual ValidationVerdict validate(Language language, std::string_view code) = 0;
    virtual std::string describe() const = 0;
};

// Syntax check plus either the rule pack or an external analyzer.
class StandardValidator final : public Validator {
public:
    StandardValidator(SyntaxCheckerConfig syntax, const RulePack& rules);
    StandardValidator(SyntaxCheckerConfig syntax, ExternalAnalyzerConfig external);

    ValidationVerdict validate(Language language, std::string_view code) override;
    std::string describe() const override;

private:
    SyntaxCheckerConfig syntax_;
    const RulePack* rules_ = nullptr;
    std::optional<ExternalAnalyzerConfig> external_;
};

// Adapts a plain function; used by tests and custom pipelines.
class FunctionValidator final : public Validator {
public:
    using Fn = std::function<ValidationVerdict(Language, std::string_view)>;
    explicit FunctionValidator(Fn fn, std::string name = "function")
        : fn_(std::move(fn)), name_(std::move(name)) {}

    ValidationVerdict validate(Language language, std::string_view code) override {
        return fn_(language, code);
    }
    std::string describe() const override { return name_; }

private:
    Fn fn_;
    std::string name_;
};

} // namespace secreflect

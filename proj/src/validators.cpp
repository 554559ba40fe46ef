#include "secreflect/validators.hpp"

#include <algorithm>
#include <fstream>

#include "embedded_data.hpp"
#include "secreflect/errors.hpp"
#include "secreflect/util.hpp"

namespace secreflect {

std::vector<Finding> ValidationVerdict::blocking(Severity threshold) const {
    std::vector<Finding> out;
    for (const auto& f : findings)
        if (static_cast<int>(f.severity) >= static_cast<int>(threshold))
            out.push_back(f);
    return out;
}

namespace {

void write_source(const std::filesystem::path& path, std::string_view code) {
    std::ofstream out(path, std::ios::binary);
    out.write(code.data(), static_cast<std::streamsize>(code.size()));
    if (!out)
        throw ToolFailedError("cannot write candidate to " + path.string());
}

} // namespace

bool check_syntax(Language language, std::string_view code, const SyntaxCheckerConfig& config) {
    TempDir dir("secreflect-syntax");
    const auto source = dir.path() / ("candidate" + std::string(file_extension(language)));
    write_source(source, code);

    if (language == Language::python) {
        auto argv = split_command(config.python);
        if (argv.empty())
            throw UsageError("python checker command is empty");
        argv.insert(argv.end(),
                    {"-c", "import ast,sys; ast.parse(open(sys.argv[1],'rb').read(), sys.argv[1])",
                     source.string()});
        const auto result = run_process(argv, dir.path());
        return result.exit_code == 0;
    }

    bool any_tool = false;
    for (const auto& command : config.c_cpp) {
        auto argv = split_command(command);
        if (argv.empty())
            continue;
        argv.push_back(source.string());
        // Keep compiler outputs such as .gch inside the temp dir.
        argv.insert(argv.end(), {"-o", (dir.path() / "out").string()});
        try {
            const auto result = run_process(argv, dir.path());
            any_tool = true;
            if (result.exit_code == 0)
                return true;
        } catch (const ToolMissingError&) {
        }
    }
    if (!any_tool)
        throw ToolMissingError("no C/C++ compiler found for syntax checking");
    return false;
}

namespace {

PatternKind parse_kind(std::string_view text) {
    if (text == "regex")
        return PatternKind::regex;
    if (text == "iregex")
        return PatternKind::iregex;
    if (text == "regex-unless")
        return PatternKind::regex_unless;
    throw UsageError("unknown rule pattern kind '" + std::string(text) + "'");
}

bool is_comment_line(Language language, std::string_view line) {
    const auto t = trim(line);
    if (t.empty())
        return true;
    if (language == Language::python)
        return t.front() == '#';
    return t.rfind("//", 0) == 0 || t.rfind("/*", 0) == 0 || t.front() == '*';
}

std::vector<std::string> lines_of(std::string_view code) {
    std::vector<std::string> lines;
    std::size_t pos = 0;
    while (pos < code.size()) {
        auto nl = code.find('\n', pos);
        if (nl == std::string_view::npos)
            nl = code.size();
        std::string line(code.substr(pos, nl - pos));
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        lines.push_back(std::move(line));
        pos = nl + 1;
    }
    return lines;
}

std::string substitute_command(std::string_view command, const std::filesystem::path& workspace,
                               const std::filesystem::path& output) {
    std::string out;
    std::size_t i = 0;
    while (i < command.size()) {
        if (command.compare(i, 11, "{workspace}") == 0) {
            out += shell_quote(workspace.string());
            i += 11;
        } else if (command.compare(i, 8, "{output}") == 0) {
            out += shell_quote(output.string());
            i += 8;
        } else {
            out.push_back(command[i++]);
        }
    }
    return out;
}

} // namespace

RulePack::RulePack(std::vector<Rule> rules) : rules_(std::move(rules)) {
    compiled_.reserve(rules_.size());
    for (const auto& rule : rules_) {
        auto flags = std::regex::ECMAScript | std::regex::optimize;
        if (rule.kind == PatternKind::iregex)
            flags |= std::regex::icase;
        try {
            if (rule.kind == PatternKind::regex_unless) {
                const auto sep = rule.pattern.find(" !! ");
                if (sep == std::string::npos)
                    throw UsageError("rule " + rule.rule_id + ": regex-unless needs 'A !! B'");
                compiled_.push_back({std::regex(trim(rule.pattern.substr(0, sep)), flags),
                                     std::regex(trim(rule.pattern.substr(sep + 4)), flags)});
            } else {
                compiled_.push_back({std::regex(rule.pattern, flags), std::nullopt});
            }
        } catch (const std::regex_error& e) {
            throw UsageError("rule " + rule.rule_id + ": invalid pattern: " + e.what());
        }
    }
}

RulePack RulePack::parse(std::string_view text) {
    std::vector<Rule> rules;
    std::size_t line_no = 0;
    for (const auto& raw : lines_of(text)) {
        ++line_no;
        const auto line = trim(raw);
        if (line.empty() || line.front() == '#')
            continue;
        std::vector<std::string> fields;
        std::size_t pos = 0;
        while (fields.size() < 5) {
            while (pos < line.size() && std::isspace(static_cast<unsigned char>(line[pos])))
                ++pos;
            const auto start = pos;
            while (pos < line.size() && !std::isspace(static_cast<unsigned char>(line[pos])))
                ++pos;
            if (start == pos)
                break;
            fields.push_back(line.substr(start, pos - start));
        }
        const auto pattern = trim(std::string_view(line).substr(std::min(pos, line.size())));
        if (fields.size() < 5 || pattern.empty())
            throw UsageError("rules line " + std::to_string(line_no) +
                             ": expected rule_id language cwe severity kind pattern");
        Rule rule;
        rule.rule_id = fields[0];
        if (fields[1] != "any")
            rule.language = parse_language(fields[1]);
        rule.cwe = normalize_cwe(fields[2]);
        rule.severity = parse_severity(fields[3]);
        rule.kind = parse_kind(fields[4]);
        rule.pattern = pattern;
        rules.push_back(std::move(rule));
    }
    return RulePack(std::move(rules));
}

RulePack RulePack::load(const std::filesystem::path& path) { return parse(read_file(path)); }

const RulePack& RulePack::builtin() {
    static const RulePack pack = parse(embedded::default_rules);
    return pack;
}

std::vector<Finding> RulePack::scan(Language language, std::string_view code) const {
    const auto lines = lines_of(code);
    std::vector<Finding> findings;
    for (std::size_t r = 0; r < rules_.size(); ++r) {
        const auto& rule = rules_[r];
        if (rule.language && *rule.language != language)
            continue;
        const auto& compiled = compiled_[r];
        if (compiled.unless) {
            const bool suppressed = std::any_of(lines.begin(), lines.end(), [&](const auto& l) {
                return !is_comment_line(language, l) && std::regex_search(l, *compiled.unless);
            });
            if (suppressed)
                continue;
        }
        for (std::size_t i = 0; i < lines.size(); ++i) {
            if (is_comment_line(language, lines[i]))
                continue;
            if (!std::regex_search(lines[i], compiled.primary))
                continue;
            const int line = static_cast<int>(i + 1);
            findings.push_back({rule.rule_id, rule.cwe,
                                rule.rule_id + ": " + trim(lines[i]), {line, line}, rule.severity});
        }
    }
    std::stable_sort(findings.begin(), findings.end(), [](const Finding& a, const Finding& b) {
        return a.span.start_line < b.span.start_line;
    });
    return findings;
}

std::vector<Finding> heuristic_scan(Language language, std::string_view code,
                                    const RulePack& rules) {
    return rules.scan(language, code);
}

SarifParseResult run_external_analyzer(const ExternalAnalyzerConfig& config, Language language,
                                       std::string_view code) {
    if (trim(config.command).empty())
        throw UsageError("external analyzer command is not configured");
    TempDir dir("secreflect-analyze");
    const auto workspace = dir.path() / "workspace";
    std::filesystem::create_directories(workspace);
    write_source(workspace / ("candidate" + std::string(file_extension(language))), code);
    const auto output = dir.path() / "results.sarif";

    const auto command = substitute_command(config.command, workspace, output);
    const auto result = run_process({"/bin/sh", "-c", command}, dir.path());
    if (result.exit_code == 127)
        throw ToolMissingError("external analyzer not found: " + trim(result.err));
    if (result.exit_code != 0)
        throw ToolFailedError("external analyzer exited with " + std::to_string(result.exit_code) +
                              ": " + trim(result.err).substr(0, 500));
    if (!std::filesystem::exists(output))
        throw ToolFailedError("external analyzer wrote no SARIF output");
    return parse_sarif_text(read_file(output));
}

StandardValidator::StandardValidator(SyntaxCheckerConfig syntax, const RulePack& rules)
    : syntax_(std::move(syntax)), rules_(&rules) {}

StandardValidator::StandardValidator(SyntaxCheckerConfig syntax, ExternalAnalyzerConfig external)
    : syntax_(std::move(syntax)), external_(std::move(external)) {}

ValidationVerdict StandardValidator::validate(Language language, std::string_view code) {
    ValidationVerdict verdict;
    verdict.compiled = check_syntax(language, code, syntax_);
    if (!verdict.compiled)
        return verdict;
    if (external_)
        verdict.findings = run_external_analyzer(*external_, language, code).findings;
    else
        verdict.findings = rules_->scan(language, code);
    return verdict;
}

std::string StandardValidator::describe() const {
    return external_ ? "syntax+external(" + external_->command + ")" : "syntax+heuristic";
}

} // namespace secreflect

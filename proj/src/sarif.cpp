#include <algorithm>
#include <cctype>

#include "secreflect/errors.hpp"
#include "secreflect/validators.hpp"

namespace secreflect {

namespace {

using json = nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& what) {
    throw SarifError("malformed SARIF at " + path + ": " + what);
}

// "external/cwe/cwe-078", "CWE-78", "cwe-078" -> "CWE-078".
std::optional<std::string> cwe_from_tag(std::string tag) {
    std::transform(tag.begin(), tag.end(), tag.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    const auto pos = tag.rfind("cwe-");
    if (pos == std::string::npos)
        return std::nullopt;
    const auto digits = tag.substr(pos + 4);
    if (digits.empty() || !std::all_of(digits.begin(), digits.end(),
                                       [](unsigned char c) { return std::isdigit(c); }))
        return std::nullopt;
    return normalize_cwe("CWE-" + digits);
}

std::optional<std::string> cwe_from_properties(const json& holder) {
    if (!holder.is_object() || !holder.contains("properties"))
        return std::nullopt;
    const auto& props = holder.at("properties");
    if (!props.is_object())
        return std::nullopt;
    if (props.contains("cwe") && props.at("cwe").is_string())
        if (auto c = cwe_from_tag(props.at("cwe").get<std::string>()))
            return c;
    if (props.contains("tags") && props.at("tags").is_array())
        for (const auto& tag : props.at("tags"))
            if (tag.is_string())
                if (auto c = cwe_from_tag(tag.get<std::string>()))
                    return c;
    return std::nullopt;
}

int line_field(const json& region, const char* key, const std::string& path, int fallback) {
    if (!region.contains(key))
        return fallback;
    const auto& v = region.at(key);
    if (!v.is_number_integer() || v.get<long long>() < 1)
        fail(path + "." + key, "expected a positive integer");
    return v.get<int>();
}

} // namespace

SarifParseResult parse_sarif(const json& sarif) {
    SarifParseResult out;
    if (!sarif.is_object())
        fail("$", "expected an object");
    if (!sarif.contains("runs") || !sarif.at("runs").is_array())
        fail("$.runs", "expected an array");

    const auto& runs = sarif.at("runs");
    for (std::size_t r = 0; r < runs.size(); ++r) {
        const auto run_path = "$.runs[" + std::to_string(r) + "]";
        const auto& run = runs[r];
        if (!run.is_object())
            fail(run_path, "expected an object");

        // Rule metadata for CWE lookup by id.
        std::vector<std::pair<std::string, std::optional<std::string>>> rule_cwes;
        if (run.contains("tool") && run.at("tool").is_object()) {
            const auto& tool = run.at("tool");
            if (tool.contains("driver") && tool.at("driver").is_object() &&
                tool.at("driver").contains("rules") && tool.at("driver").at("rules").is_array())
                for (const auto& rule : tool.at("driver").at("rules"))
                    if (rule.is_object() && rule.contains("id") && rule.at("id").is_string())
                        rule_cwes.emplace_back(rule.at("id").get<std::string>(),
                                               cwe_from_properties(rule));
        }

        if (!run.contains("results") || run.at("results").is_null())
            continue;
        const auto& results = run.at("results");
        if (!results.is_array())
            fail(run_path + ".results", "expected an array");

        for (std::size_t i = 0; i < results.size(); ++i) {
            const auto path = run_path + ".results[" + std::to_string(i) + "]";
            const auto& res = results[i];
            if (!res.is_object())
                fail(path, "expected an object");

            Finding f;
            if (res.contains("ruleId")) {
                if (!res.at("ruleId").is_string() || res.at("ruleId").get<std::string>().empty())
                    fail(path + ".ruleId", "expected a nonempty string");
                f.rule_id = res.at("ruleId").get<std::string>();
            } else if (res.contains("rule") && res.at("rule").is_object() &&
                       res.at("rule").contains("id") && res.at("rule").at("id").is_string()) {
                f.rule_id = res.at("rule").at("id").get<std::string>();
            } else {
                f.rule_id = "unknown";
                out.warnings.push_back(path + ": result has no ruleId; recorded as 'unknown'");
            }

            if (res.contains("level")) {
                const auto& level = res.at("level");
                if (!level.is_string())
                    fail(path + ".level", "expected a string");
                const auto text = level.get<std::string>();
                if (text == "none" || text == "note")
                    f.severity = Severity::note;
                else if (text == "warning")
                    f.severity = Severity::warning;
                else if (text == "error")
                    f.severity = Severity::error;
                else
                    fail(path + ".level", "expected one of none, note, warning, error");
            }

            if (!res.contains("message") || !res.at("message").is_object() ||
                !res.at("message").contains("text") || !res.at("message").at("text").is_string())
                fail(path + ".message.text", "expected a string");
            f.message = res.at("message").at("text").get<std::string>();

            if (res.contains("locations")) {
                const auto& locations = res.at("locations");
                if (!locations.is_array())
                    fail(path + ".locations", "expected an array");
                if (!locations.empty()) {
                    const auto loc_path = path + ".locations[0].physicalLocation.region";
                    const auto& loc = locations[0];
                    if (loc.is_object() && loc.contains("physicalLocation")) {
                        const auto& phys = loc.at("physicalLocation");
                        if (!phys.is_object())
                            fail(path + ".locations[0].physicalLocation", "expected an object");
                        if (phys.contains("region")) {
                            const auto& region = phys.at("region");
                            if (!region.is_object())
                                fail(loc_path, "expected an object");
                            f.span.start_line = line_field(region, "startLine", loc_path, 1);
                            f.span.end_line =
                                line_field(region, "endLine", loc_path, f.span.start_line);
                            if (f.span.end_line < f.span.start_line)
                                fail(loc_path, "endLine precedes startLine");
                        }
                    }
                }
            }

            f.cwe = cwe_from_properties(res);
            if (!f.cwe)
                for (const auto& [id, cwe] : rule_cwes)
                    if (id == f.rule_id && cwe) {
                        f.cwe = cwe;
                        break;
                    }
            out.findings.push_back(std::move(f));
        }
    }
    return out;
}

SarifParseResult parse_sarif_text(std::string_view text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw SarifError(std::string("malformed SARIF at $: not valid JSON (") + e.what() + ")");
    }
    return parse_sarif(j);
}

json findings_to_sarif(const std::vector<Finding>& findings, std::string_view tool_name) {
    json results = json::array();
    for (const auto& f : findings) {
        json r = {{"ruleId", f.rule_id},
                  {"level", std::string(to_string(f.severity))},
                  {"message", {{"text", f.message}}},
                  {"locations",
                   json::array({{{"physicalLocation",
                                  {{"artifactLocation", {{"uri", "candidate"}}},
                                   {"region",
                                    {{"startLine", f.span.start_line},
                                     {"endLine", f.span.end_line}}}}}}})}};
        if (f.cwe) {
            std::string digits = f.cwe->substr(4);
            r["properties"] = {{"tags", json::array({"external/cwe/cwe-" + digits})}};
        }
        results.push_back(std::move(r));
    }
    return {{"$schema", "https://json.schemastore.org/sarif-2.1.0.json"},
            {"version", "2.1.0"},
            {"runs", json::array({{{"tool", {{"driver", {{"name", std::string(tool_name)}}}}},
                                   {"results", results}}})}};
}

} // namespace secreflect

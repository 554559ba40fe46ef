#include "secreflect/prompt.hpp"

#include <algorithm>
#include <sstream>

#include "embedded_data.hpp"
#include "secreflect/errors.hpp"
#include "secreflect/util.hpp"

namespace secreflect {

std::string_view to_string(TemplateRole role) {
    switch (role) {
    case TemplateRole::generation:
        return "generation";
    case TemplateRole::refine:
        return "refine";
    case TemplateRole::assessment:
        return "assessment";
    case TemplateRole::distill:
        return "distill";
    }
    return "generation";
}

std::vector<std::string> required_placeholders(TemplateRole role) {
    switch (role) {
    case TemplateRole::generation:
        return {"task"};
    case TemplateRole::refine:
        return {"task", "prior_code", "history", "retrieved"};
    case TemplateRole::assessment:
        return {"task", "prior_code"};
    case TemplateRole::distill:
        return {"task", "prior_code", "history"};
    }
    return {};
}

namespace {

std::size_t marker_pos(std::string_view body, std::string_view name) {
    return body.find("{" + std::string(name) + "}");
}

std::string ensure_newline(std::string_view text) {
    std::string out(text);
    if (out.empty() || out.back() != '\n')
        out.push_back('\n');
    return out;
}

} // namespace

void PromptTemplate::validate() const {
    std::size_t last = 0;
    std::string last_name;
    for (const auto& name : required_placeholders(role)) {
        const auto pos = marker_pos(body, name);
        if (pos == std::string::npos)
            throw AssemblyError("template '" + this->name + "' (" + std::string(to_string(role)) +
                                ") is missing required placeholder {" + name + "}");
        if (!last_name.empty() && pos < last)
            throw AssemblyError("template '" + this->name + "': placeholder {" + name +
                                "} must come after {" + last_name + "}");
        last = pos;
        last_name = name;
    }
    if (role == TemplateRole::generation) {
        const auto task = marker_pos(body, "task");
        const auto retrieved = marker_pos(body, "retrieved");
        const auto prior = marker_pos(body, "prior_code");
        if (retrieved != std::string::npos && retrieved > task)
            throw AssemblyError("template '" + name + "': {retrieved} must precede {task}");
        if (prior != std::string::npos && prior < task)
            throw AssemblyError("template '" + name + "': {prior_code} must follow {task}");
    }
}

TemplateSet TemplateSet::load(const std::filesystem::path& dir) {
    auto read = [&](const char* file, TemplateRole role) {
        const auto path = dir / file;
        if (!std::filesystem::exists(path))
            throw UsageError("template file missing: " + path.string());
        PromptTemplate t{std::filesystem::path(file).stem().string(), role, read_file(path)};
        t.validate();
        return t;
    };
    return {read("generation.txt", TemplateRole::generation),
            read("refine.txt", TemplateRole::refine),
            read("assessment.txt", TemplateRole::assessment),
            read("distill.txt", TemplateRole::distill)};
}

std::string render_section(std::string_view label, std::string_view body) {
    std::string out = "### ";
    out.append(label).append("\n");
    out += ensure_newline(body);
    out.append("### END ").append(label).append("\n");
    return out;
}

std::string render_task_section(const CodeTask& task) {
    std::string body = "language: " + std::string(to_string(task.language)) + "\n";
    if (!task.description.empty())
        body += "description: " + task.description + "\n";
    body += "code:\n" + task.prompt_code;
    return render_section("TASK", body);
}

std::string render_candidate_section(const Candidate& candidate) {
    return render_section("CANDIDATE " + candidate.phase.label(), candidate.code);
}

std::string render_feedback_section(const Feedback& feedback) {
    return render_section("FEEDBACK", format_self_assessment(feedback));
}

std::string render_retrieved_section(const std::vector<KnowledgeEntry>& retrieved) {
    if (retrieved.empty())
        return {};
    std::string body;
    for (std::size_t i = 0; i < retrieved.size(); ++i) {
        const auto& e = retrieved[i];
        if (i > 0)
            body += "\n";
        body += "[" + std::to_string(i + 1) + "]";
        if (!e.cwe_tags.empty()) {
            body += " cwe:";
            for (const auto& tag : e.cwe_tags)
                body += " " + tag;
        }
        body += "\ninsight: " + ensure_newline(e.insight);
        body += "code:\n" + ensure_newline(e.code);
    }
    return render_section("RETRIEVED", body);
}

std::string substitute(std::string_view body,
                       const std::vector<std::pair<std::string, std::string>>& bindings) {
    std::string out;
    out.reserve(body.size());
    std::size_t i = 0;
    while (i < body.size()) {
        if (body[i] == '{') {
            const auto close = body.find('}', i + 1);
            if (close != std::string_view::npos) {
                const auto name = body.substr(i + 1, close - i - 1);
                auto it = std::find_if(bindings.begin(), bindings.end(),
                                       [&](const auto& b) { return b.first == name; });
                if (it != bindings.end()) {
                    out += it->second;
                    i = close + 1;
                    continue;
                }
            }
        }
        out.push_back(body[i]);
        ++i;
    }
    return out;
}

namespace {

void require_role(const PromptTemplate& tmpl, TemplateRole role) {
    if (tmpl.role != role)
        throw AssemblyError("template '" + tmpl.name + "' has role " +
                            std::string(to_string(tmpl.role)) + ", expected " +
                            std::string(to_string(role)));
    tmpl.validate();
}

bool has_marker(const PromptTemplate& tmpl, std::string_view name) {
    return marker_pos(tmpl.body, name) != std::string::npos;
}

std::string render_history(const std::vector<std::pair<Candidate, Feedback>>& history,
                           const std::vector<std::size_t>& keep) {
    std::string out;
    for (auto i : keep) {
        // Pair 0 is (y0, fb0); y0's code already sits in the prior section.
        if (i != 0)
            out += render_candidate_section(history[i].first);
        out += render_feedback_section(history[i].second);
    }
    return out;
}

} // namespace

std::string render_generation_prompt(const PromptTemplate& tmpl, const CodeTask& task,
                                     const std::vector<KnowledgeEntry>& retrieved,
                                     const Candidate* prior) {
    require_role(tmpl, TemplateRole::generation);
    std::string retrieved_text = render_retrieved_section(retrieved);
    std::string task_text = render_task_section(task);
    std::string prior_text = prior ? render_section("PRIOR", prior->code) : std::string{};

    if (!has_marker(tmpl, "retrieved"))
        task_text = retrieved_text + task_text;
    if (!has_marker(tmpl, "prior_code"))
        task_text += prior_text;
    return substitute(tmpl.body,
                      {{"retrieved", retrieved_text}, {"task", task_text}, {"prior_code", prior_text}});
}

std::string render_refine_prompt(const PromptTemplate& tmpl, const CodeTask& task,
                                 const Candidate& y0,
                                 const std::vector<std::pair<Candidate, Feedback>>& history,
                                 const std::vector<KnowledgeEntry>& retrieved,
                                 std::size_t budget) {
    require_role(tmpl, TemplateRole::refine);
    if (history.empty())
        throw AssemblyError("refine prompt needs at least the (y0, fb0) pair");
    if (history.front().first.phase.kind() != Phase::Kind::initial)
        throw AssemblyError("refine history must start with the initial candidate");

    const std::string task_text = render_task_section(task);
    const std::string prior_text = render_candidate_section(y0);
    const std::string retrieved_text = render_retrieved_section(retrieved);

    std::vector<std::size_t> keep(history.size());
    for (std::size_t i = 0; i < keep.size(); ++i)
        keep[i] = i;

    auto render = [&] {
        return substitute(tmpl.body, {{"task", task_text},
                                      {"prior_code", prior_text},
                                      {"history", render_history(history, keep)},
                                      {"retrieved", retrieved_text}});
    };

    std::string prompt = render();
    // keep[0] is pair 0 and keep.back() the newest pair; both are mandatory.
    while (prompt.size() > budget && keep.size() > 2) {
        keep.erase(keep.begin() + 1);
        prompt = render();
    }
    if (prompt.size() > budget)
        throw AssemblyError("refine prompt needs " + std::to_string(prompt.size()) +
                            " characters for its mandatory sections; budget is " +
                            std::to_string(budget));
    return prompt;
}

std::string render_assessment_prompt(const PromptTemplate& tmpl, const CodeTask& task,
                                     const Candidate& candidate) {
    require_role(tmpl, TemplateRole::assessment);
    return substitute(tmpl.body, {{"task", render_task_section(task)},
                                  {"prior_code", render_candidate_section(candidate)}});
}

std::string render_distill_prompt(const PromptTemplate& tmpl, const CodeTask& task,
                                  const Candidate& final_candidate,
                                  const std::vector<std::pair<Candidate, Feedback>>& history) {
    require_role(tmpl, TemplateRole::distill);
    std::string history_text;
    for (const auto& [candidate, feedback] : history)
        history_text += render_candidate_section(candidate) + render_feedback_section(feedback);
    return substitute(tmpl.body, {{"task", render_task_section(task)},
                                  {"prior_code", render_candidate_section(final_candidate)},
                                  {"history", history_text}});
}

namespace {

std::vector<std::string> split_lines(std::string_view text) {
    std::vector<std::string> lines;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        auto nl = text.find('\n', pos);
        if (nl == std::string_view::npos) {
            lines.emplace_back(text.substr(pos));
            break;
        }
        lines.emplace_back(text.substr(pos, nl - pos));
        pos = nl + 1;
    }
    return lines;
}

Feedback malformed() {
    return Feedback::unparseable(
        {{"self-assessment reply did not follow the VERDICT grammar", std::nullopt}});
}

} // namespace

Feedback parse_self_assessment(std::string_view response_text) {
    std::vector<std::string> lines;
    for (auto& line : split_lines(response_text)) {
        auto t = trim(line);
        if (!t.empty())
            lines.push_back(std::move(t));
    }
    if (lines.empty())
        return malformed();

    bool secure = false;
    if (lines.front() == "VERDICT: SECURE")
        secure = true;
    else if (lines.front() != "VERDICT: DEFECTS")
        return malformed();

    std::vector<Concern> concerns;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const auto& line = lines[i];
        if (line.size() < 2 || line[0] != '-' || line[1] != ' ')
            return malformed();
        std::string rest = trim(std::string_view(line).substr(2));
        Concern c;
        if (!rest.empty() && rest.front() == '[') {
            const auto close = rest.find(']');
            if (close != std::string::npos) {
                const auto tag = std::string_view(rest).substr(1, close - 1);
                try {
                    c.cwe = normalize_cwe(tag);
                    rest = trim(std::string_view(rest).substr(close + 1));
                } catch (const UsageError&) {
                    c.cwe.reset();
                }
            }
        }
        if (rest.empty())
            return malformed();
        c.text = std::move(rest);
        concerns.push_back(std::move(c));
    }
    if (secure) {
        if (!concerns.empty())
            return malformed();
        return Feedback::secure(FeedbackSource::self_assessment);
    }
    return Feedback::defects(FeedbackSource::self_assessment, std::move(concerns));
}

std::string format_self_assessment(const Feedback& feedback) {
    std::string out = feedback.defect_free() ? "VERDICT: SECURE\n" : "VERDICT: DEFECTS\n";
    for (const auto& c : feedback.concerns()) {
        std::string text = c.text;
        std::replace(text.begin(), text.end(), '\n', ' ');
        out += "- ";
        if (c.cwe)
            out += "[" + *c.cwe + "] ";
        out += text + "\n";
    }
    return out;
}

std::string extract_code(std::string_view reply) {
    const auto open = reply.find("```");
    if (open == std::string_view::npos) {
        auto t = trim(reply);
        return t.empty() ? t : t + "\n";
    }
    auto start = reply.find('\n', open);
    if (start == std::string_view::npos)
        return {};
    ++start;
    const auto close = reply.find("```", start);
    return std::string(reply.substr(start, close == std::string_view::npos ? std::string_view::npos
                                                                           : close - start));
}

} // namespace secreflect

namespace secreflect {

TemplateSet TemplateSet::defaults() {
    return {{"generation", TemplateRole::generation, embedded::generation_template},
            {"refine", TemplateRole::refine, embedded::refine_template},
            {"assessment", TemplateRole::assessment, embedded::assessment_template},
            {"distill", TemplateRole::distill, embedded::distill_template}};
}

} // namespace secreflect

#include "secreflect/domain.hpp"

#include <cctype>

#include "secreflect/errors.hpp"

namespace secreflect {

std::string_view to_string(Language language) {
    switch (language) {
    case Language::c_cpp:
        return "c_cpp";
    case Language::python:
        return "python";
    }
    return "python";
}

Language parse_language(std::string_view text) {
    if (text == "python" || text == "py")
        return Language::python;
    if (text == "c_cpp" || text == "c" || text == "cpp" || text == "c++")
        return Language::c_cpp;
    throw UsageError("unknown language '" + std::string(text) + "' (expected python or c_cpp)");
}

std::string_view file_extension(Language language) {
    return language == Language::python ? ".py" : ".c";
}

bool is_canonical_cwe(std::string_view text) {
    if (text.size() < 7 || text.substr(0, 4) != "CWE-")
        return false;
    for (char c : text.substr(4))
        if (!std::isdigit(static_cast<unsigned char>(c)))
            return false;
    return true;
}

std::string normalize_cwe(std::string_view text) {
    if (text.size() < 5)
        throw UsageError("not a CWE identifier: '" + std::string(text) + "'");
    std::string prefix(text.substr(0, 4));
    for (auto& c : prefix)
        c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    if (prefix != "CWE-")
        throw UsageError("not a CWE identifier: '" + std::string(text) + "'");
    std::string digits(text.substr(4));
    if (digits.empty())
        throw UsageError("not a CWE identifier: '" + std::string(text) + "'");
    for (char c : digits)
        if (!std::isdigit(static_cast<unsigned char>(c)))
            throw UsageError("not a CWE identifier: '" + std::string(text) + "'");
    while (digits.size() < 3)
        digits.insert(digits.begin(), '0');
    return "CWE-" + digits;
}

void CodeTask::validate() const {
    if (prompt_code.empty())
        throw UsageError("task '" + id + "' has an empty prompt");
}

Phase Phase::refined(int iteration) {
    if (iteration < 1)
        throw std::invalid_argument("refined phase requires iteration >= 1");
    return Phase(Kind::refined, iteration);
}

std::string Phase::label() const {
    switch (kind_) {
    case Kind::initial:
        return "initial";
    case Kind::retrieval_regen:
        return "retrieval_regen";
    case Kind::refined:
        return "refined(" + std::to_string(iteration_) + ")";
    }
    return "initial";
}

nlohmann::json to_json(const Candidate& candidate) {
    nlohmann::json phase;
    switch (candidate.phase.kind()) {
    case Phase::Kind::initial:
        phase = {{"kind", "initial"}};
        break;
    case Phase::Kind::retrieval_regen:
        phase = {{"kind", "retrieval_regen"}};
        break;
    case Phase::Kind::refined:
        phase = {{"kind", "refined"}, {"t", candidate.phase.iteration()}};
        break;
    }
    return {{"code", candidate.code}, {"phase", phase}, {"task_id", candidate.task_id}};
}

Candidate candidate_from_json(const nlohmann::json& j) {
    Candidate c;
    c.code = j.at("code").get<std::string>();
    c.task_id = j.at("task_id").get<std::string>();
    const auto kind = j.at("phase").at("kind").get<std::string>();
    if (kind == "initial")
        c.phase = Phase::initial();
    else if (kind == "retrieval_regen")
        c.phase = Phase::retrieval_regen();
    else if (kind == "refined")
        c.phase = Phase::refined(j.at("phase").at("t").get<int>());
    else
        throw UsageError("unknown candidate phase '" + kind + "'");
    return c;
}

std::string_view to_string(FeedbackSource source) {
    switch (source) {
    case FeedbackSource::self_assessment:
        return "self_assessment";
    case FeedbackSource::analyzer:
        return "analyzer";
    case FeedbackSource::combined:
        return "combined";
    }
    return "combined";
}

Feedback::Feedback(FeedbackSource source, bool defect_free, std::vector<Concern> concerns,
                   bool parse_error)
    : source_(source), defect_free_(defect_free), concerns_(std::move(concerns)),
      parse_error_(parse_error) {
    if (defect_free_ && !concerns_.empty())
        throw std::invalid_argument("defect-free feedback cannot carry concerns");
    if (parse_error_ && defect_free_)
        throw std::invalid_argument("feedback with a parse error cannot be defect-free");
}

Feedback Feedback::secure(FeedbackSource source) { return Feedback(source, true, {}, false); }

Feedback Feedback::defects(FeedbackSource source, std::vector<Concern> concerns) {
    return Feedback(source, false, std::move(concerns), false);
}

Feedback Feedback::unparseable(std::vector<Concern> concerns) {
    return Feedback(FeedbackSource::self_assessment, false, std::move(concerns), true);
}

std::string_view to_string(Severity severity) {
    switch (severity) {
    case Severity::note:
        return "note";
    case Severity::warning:
        return "warning";
    case Severity::error:
        return "error";
    }
    return "warning";
}

Severity parse_severity(std::string_view text) {
    if (text == "note" || text == "none")
        return Severity::note;
    if (text == "warning")
        return Severity::warning;
    if (text == "error")
        return Severity::error;
    throw UsageError("unknown severity '" + std::string(text) + "'");
}

void LoopConfig::validate() const {
    if (max_refine_iters < 0)
        throw UsageError("max_refine_iters must be >= 0");
    if (retrieval_k < 1)
        throw UsageError("retrieval_k must be >= 1");
    if (retrieval_threshold < 0.0 || retrieval_threshold > 1.0)
        throw UsageError("retrieval_threshold must lie in [0, 1]");
    if (dedup_threshold < 0.0 || dedup_threshold > 1.0)
        throw UsageError("dedup_threshold must lie in [0, 1]");
    if (retrieval_threshold > dedup_threshold)
        throw UsageError("retrieval_threshold must not exceed dedup_threshold");
    if (context_budget == 0)
        throw UsageError("context_budget must be positive");
}

namespace {

nlohmann::json decoding_json(const DecodingParams& d) {
    return {{"temperature", d.temperature},
            {"max_output_len", d.max_output_len},
            {"stop_sequences", d.stop_sequences}};
}

DecodingParams decoding_from(const nlohmann::json& j, DecodingParams d) {
    d.temperature = j.value("temperature", d.temperature);
    d.max_output_len = j.value("max_output_len", d.max_output_len);
    d.stop_sequences = j.value("stop_sequences", d.stop_sequences);
    return d;
}

} // namespace

nlohmann::json to_json(const LoopConfig& config) {
    return {{"max_refine_iters", config.max_refine_iters},
            {"retrieval_k", config.retrieval_k},
            {"retrieval_threshold", config.retrieval_threshold},
            {"dedup_threshold", config.dedup_threshold},
            {"context_budget", config.context_budget},
            {"blocking_severity", std::string(to_string(config.blocking_severity))},
            {"decoding",
             {{"generation", decoding_json(config.decoding.generation)},
              {"refine", decoding_json(config.decoding.refine)},
              {"assessment", decoding_json(config.decoding.assessment)},
              {"distill", decoding_json(config.decoding.distill)}}},
            {"seed", config.seed}};
}

LoopConfig loop_config_from_json(const nlohmann::json& j, LoopConfig c) {
    try {
        c.max_refine_iters = j.value("max_refine_iters", c.max_refine_iters);
        c.retrieval_k = j.value("retrieval_k", c.retrieval_k);
        c.retrieval_threshold = j.value("retrieval_threshold", c.retrieval_threshold);
        c.dedup_threshold = j.value("dedup_threshold", c.dedup_threshold);
        c.context_budget = j.value("context_budget", c.context_budget);
        if (j.contains("blocking_severity"))
            c.blocking_severity = parse_severity(j.at("blocking_severity").get<std::string>());
        if (j.contains("decoding")) {
            const auto& d = j.at("decoding");
            if (d.contains("generation"))
                c.decoding.generation = decoding_from(d.at("generation"), c.decoding.generation);
            if (d.contains("refine"))
                c.decoding.refine = decoding_from(d.at("refine"), c.decoding.refine);
            if (d.contains("assessment"))
                c.decoding.assessment = decoding_from(d.at("assessment"), c.decoding.assessment);
            if (d.contains("distill"))
                c.decoding.distill = decoding_from(d.at("distill"), c.decoding.distill);
        }
        c.seed = j.value("seed", c.seed);
    } catch (const nlohmann::json::exception& e) {
        throw UsageError(std::string("invalid loop config: ") + e.what());
    }
    c.validate();
    return c;
}

} // namespace secreflect

#include "secreflect/reflection_loop.hpp"

#include <set>

#include <nlohmann/json.hpp>

#include "secreflect/util.hpp"

namespace secreflect {

std::string_view event_name(const LoopEvent& e) {
    static constexpr std::string_view names[] = {"Generated", "Assessed",        "Retrieved",
                                                 "Regenerated", "Refined",       "Validated",
                                                 "KnowledgeStored", "Accepted", "Exhausted"};
    return names[e.index()];
}

Feedback combine_feedback(const Feedback& self, const ValidationVerdict& verdict,
                          Severity blocking) {
    const auto blockers = verdict.blocking(blocking);
    if (self.defect_free() && verdict.compiled && blockers.empty())
        return Feedback::secure(FeedbackSource::combined);
    std::vector<Concern> concerns = self.concerns();
    if (!verdict.compiled)
        concerns.push_back({"the code does not compile or parse", std::nullopt});
    else
        for (const auto& f : blockers)
            concerns.push_back({f.rule_id + " (line " + std::to_string(f.span.start_line) +
                                    "): " + f.message,
                                f.cwe});
    if (concerns.empty())
        concerns.push_back({"the code was not confirmed secure", std::nullopt});
    return Feedback::defects(FeedbackSource::combined, std::move(concerns));
}

namespace {

class Runner {
public:
    Runner(const CodeTask& task, Model& model, KnowledgeBase& kb, Validator& validator,
           const LoopConfig& config, const TemplateSet& templates)
        : task_(task), model_(model), kb_(kb), validator_(validator), config_(config),
          templates_(templates) {}

    LoopOutcome run() {
        task_.validate();
        config_.validate();

        Candidate y0{generate(render_generation_prompt(templates_.generation, task_, {})),
                     Phase::initial(), task_.id};
        emit(event::Generated{y0});

        auto self = assess(y0);
        auto verdict = validate(y0);
        if (acceptable(self, verdict)) {
            emit(event::Validated{summary(verdict)});
            return accept(y0, verdict);
        }
        std::vector<std::pair<Candidate, Feedback>> history{
            {y0, combine_feedback(self, verdict, config_.blocking_severity)}};
        Candidate current = y0;

        auto r0 = kb_.retrieve(task_, y0, config_.retrieval_k, config_.retrieval_threshold);
        emit(event::Retrieved{r0.hits.size(), r0.top_score()});
        if (!r0.empty()) {
            Candidate y1{generate(render_generation_prompt(templates_.generation, task_,
                                                           entries_of(r0), &y0)),
                         Phase::retrieval_regen(), task_.id};
            emit(event::Regenerated{y1});
            self = assess(y1);
            verdict = validate(y1);
            if (acceptable(self, verdict)) {
                emit(event::Validated{summary(verdict)});
                return accept(y1, verdict);
            }
            history.emplace_back(y1, combine_feedback(self, verdict, config_.blocking_severity));
            current = y1;
        }

        for (int t = 1; t <= config_.max_refine_iters; ++t) {
            auto rt = kb_.retrieve(task_, current, config_.retrieval_k, config_.retrieval_threshold);
            Candidate yt{generate(render_refine_prompt(templates_.refine, task_, y0, history,
                                                       entries_of(rt), config_.context_budget),
                                  config_.decoding.refine),
                         Phase::refined(t), task_.id};
            ++outcome_.refinements_used;
            emit(event::Refined{t, yt});
            self = assess(yt);
            verdict = validate(yt);
            emit(event::Validated{summary(verdict)});
            if (acceptable(self, verdict))
                return store_and_verify(yt, history);
            history.emplace_back(yt, combine_feedback(self, verdict, config_.blocking_severity));
            current = yt;
        }

        outcome_.final_verdict = verdict;
        emit(event::Exhausted{current});
        outcome_.final = current;
        outcome_.accepted = false;
        return std::move(outcome_);
    }

    const std::vector<LoopEvent>& trace() const { return outcome_.trace; }

private:
    void emit(LoopEvent e) { outcome_.trace.push_back(std::move(e)); }

    DecodingParams seeded(DecodingParams d) {
        d.seed = mix_seed(config_.seed, static_cast<std::uint64_t>(outcome_.model_calls));
        return d;
    }

    std::string call(const std::string& prompt, const DecodingParams& decoding) {
        auto response = model_.complete({prompt, seeded(decoding)});
        ++outcome_.model_calls;
        if (response.finish_reason == FinishReason::error || !response.text)
            throw TransportError("model call failed: " + response.error_message);
        return *response.text;
    }

    std::string generate(const std::string& prompt) {
        return generate(prompt, config_.decoding.generation);
    }

    std::string generate(const std::string& prompt, const DecodingParams& decoding) {
        ++outcome_.generation_calls;
        return extract_code(call(prompt, decoding));
    }

    Feedback assess(const Candidate& c) {
        ++outcome_.assessment_calls;
        auto fb = parse_self_assessment(
            call(render_assessment_prompt(templates_.assessment, task_, c),
                 config_.decoding.assessment));
        emit(event::Assessed{fb});
        return fb;
    }

    ValidationVerdict validate(const Candidate& c) {
        return validator_.validate(task_.language, c.code);
    }

    bool acceptable(const Feedback& self, const ValidationVerdict& v) const {
        return self.defect_free() && v.clean(config_.blocking_severity);
    }

    event::Validated summary(const ValidationVerdict& v) const {
        return {v.compiled, v.findings.size(), v.blocking(config_.blocking_severity).size(),
                v.clean(config_.blocking_severity)};
    }

    static std::vector<KnowledgeEntry> entries_of(const RetrievalResult& r) {
        std::vector<KnowledgeEntry> out;
        out.reserve(r.hits.size());
        for (const auto& h : r.hits)
            out.push_back(h.entry);
        return out;
    }

    LoopOutcome accept(const Candidate& c, const ValidationVerdict& v) {
        emit(event::Accepted{c});
        outcome_.final = c;
        outcome_.accepted = true;
        outcome_.final_verdict = v;
        return std::move(outcome_);
    }

    std::string distill(const Candidate& final_candidate,
                        const std::vector<std::pair<Candidate, Feedback>>& history) {
        auto insight = trim(call(render_distill_prompt(templates_.distill, task_, final_candidate,
                                                       history),
                                 config_.decoding.distill));
        if (!insight.empty())
            return insight;
        // Model gave nothing usable: keep the concerns that were fixed.
        std::string fallback;
        for (const auto& [c, fb] : history)
            for (const auto& concern : fb.concerns())
                fallback += (fallback.empty() ? "" : "; ") + concern.text;
        return fallback.empty() ? "Repaired code passed self-assessment and analysis." :
                                  "Fixed: " + fallback;
    }

    std::vector<std::string> cwe_tags(const std::vector<std::pair<Candidate, Feedback>>& history) const {
        std::set<std::string> tags;
        if (task_.cwe_hint)
            tags.insert(*task_.cwe_hint);
        for (const auto& [c, fb] : history)
            for (const auto& concern : fb.concerns())
                if (concern.cwe)
                    tags.insert(*concern.cwe);
        return {tags.begin(), tags.end()};
    }

    LoopOutcome store_and_verify(const Candidate& yt,
                                 const std::vector<std::pair<Candidate, Feedback>>& history) {
        const auto insight = distill(yt, history);
        const auto result = kb_.update(task_, yt, insight, cwe_tags(history));
        if (const auto* ins = std::get_if<Inserted>(&result))
            emit(event::KnowledgeStored{ins->id, true});
        else
            emit(event::KnowledgeStored{std::get<Merged>(result).id, false});

        // Re-verify the stored candidate; a failure keeps the entry but
        // demotes the outcome.
        const auto verdict = validate(yt);
        emit(event::Validated{summary(verdict)});
        if (verdict.clean(config_.blocking_severity))
            return accept(yt, verdict);
        outcome_.final_verdict = verdict;
        emit(event::Exhausted{yt});
        outcome_.final = yt;
        outcome_.accepted = false;
        return std::move(outcome_);
    }

    const CodeTask& task_;
    Model& model_;
    KnowledgeBase& kb_;
    Validator& validator_;
    const LoopConfig& config_;
    const TemplateSet& templates_;
    LoopOutcome outcome_;
};

} // namespace

LoopOutcome run_task(const CodeTask& task, Model& model, KnowledgeBase& kb, Validator& validator,
                     const LoopConfig& config, const TemplateSet& templates) {
    Runner runner(task, model, kb, validator, config, templates);
    try {
        return runner.run();
    } catch (const LoopAborted&) {
        throw;
    } catch (const ExternalError& e) {
        throw LoopAborted(std::string("task ") + task.id + " aborted: " + e.what(),
                          runner.trace());
    }
}

LoopOutcome run_task(const CodeTask& task, Model& model, KnowledgeBase& kb, Validator& validator,
                     const LoopConfig& config) {
    static const TemplateSet defaults = TemplateSet::defaults();
    return run_task(task, model, kb, validator, config, defaults);
}

namespace {

nlohmann::ordered_json event_record(const LoopEvent& e) {
    nlohmann::ordered_json j;
    j["event"] = std::string(event_name(e));
    j["t"] = nullptr;
    j["candidate_digest"] = nullptr;
    j["score"] = nullptr;
    j["timestamp"] = nullptr;
    auto with_candidate = [&](const Candidate& c) {
        j["candidate_digest"] = sha256_hex(c.code);
        j["phase"] = c.phase.label();
        if (c.phase.kind() == Phase::Kind::refined)
            j["t"] = c.phase.iteration();
    };
    std::visit(
        [&](const auto& ev) {
            using T = std::decay_t<decltype(ev)>;
            if constexpr (std::is_same_v<T, event::Generated> ||
                          std::is_same_v<T, event::Regenerated> ||
                          std::is_same_v<T, event::Refined> || std::is_same_v<T, event::Accepted> ||
                          std::is_same_v<T, event::Exhausted>) {
                with_candidate(ev.candidate);
            } else if constexpr (std::is_same_v<T, event::Assessed>) {
                j["defect_free"] = ev.feedback.defect_free();
                j["parse_error"] = ev.feedback.parse_error();
                j["concerns"] = ev.feedback.concerns().size();
            } else if constexpr (std::is_same_v<T, event::Retrieved>) {
                j["score"] = ev.top_score;
                j["count"] = ev.count;
            } else if constexpr (std::is_same_v<T, event::Validated>) {
                j["compiled"] = ev.compiled;
                j["findings"] = ev.findings;
                j["blocking"] = ev.blocking;
                j["clean"] = ev.clean;
            } else if constexpr (std::is_same_v<T, event::KnowledgeStored>) {
                j["entry_id"] = ev.entry_id;
                j["inserted"] = ev.inserted;
            }
        },
        e);
    return j;
}

} // namespace

void write_trace_jsonl(const std::vector<LoopEvent>& trace, std::ostream& out,
                       std::chrono::system_clock::time_point timestamp) {
    const auto ts = format_rfc3339(timestamp);
    for (const auto& e : trace) {
        auto j = event_record(e);
        j["timestamp"] = ts;
        out << j.dump() << '\n';
    }
}

} // namespace secreflect

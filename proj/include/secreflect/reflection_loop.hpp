#pragma once

// The generate / self-assess / retrieve / refine / store loop for one task.

#include <chrono>
#include <functional>
#include <ostream>
#include <string>
#include <variant>
#include <vector>

#include "secreflect/domain.hpp"
#include "secreflect/errors.hpp"
#include "secreflect/knowledge_base.hpp"
#include "secreflect/model.hpp"
#include "secreflect/prompt.hpp"
#include "secreflect/validators.hpp"

namespace secreflect {

namespace event {

struct Generated {
    Candidate candidate;
    friend bool operator==(const Generated&, const Generated&) = default;
};
struct Assessed {
    Feedback feedback;
    friend bool operator==(const Assessed&, const Assessed&) = default;
};
struct Retrieved {
    std::size_t count = 0;
    double top_score = 0.0;
    friend bool operator==(const Retrieved&, const Retrieved&) = default;
};
struct Regenerated {
    Candidate candidate;
    friend bool operator==(const Regenerated&, const Regenerated&) = default;
};
struct Refined {
    int t = 1;
    Candidate candidate;
    friend bool operator==(const Refined&, const Refined&) = default;
};
struct Validated {
    bool compiled = false;
    std::size_t findings = 0;
    std::size_t blocking = 0;
    bool clean = false;
    friend bool operator==(const Validated&, const Validated&) = default;
};
struct KnowledgeStored {
    std::string entry_id;
    bool inserted = true; // false: merged into a near-duplicate
    friend bool operator==(const KnowledgeStored&, const KnowledgeStored&) = default;
};
struct Accepted {
    Candidate candidate;
    friend bool operator==(const Accepted&, const Accepted&) = default;
};
struct Exhausted {
    Candidate candidate;
    friend bool operator==(const Exhausted&, const Exhausted&) = default;
};

} // namespace event

using LoopEvent =
    std::variant<event::Generated, event::Assessed, event::Retrieved, event::Regenerated,
                 event::Refined, event::Validated, event::KnowledgeStored, event::Accepted,
                 event::Exhausted>;

std::string_view event_name(const LoopEvent& e);

struct LoopOutcome {
    Candidate final;
    bool accepted = false;
    int refinements_used = 0;
    std::vector<LoopEvent> trace;
    int model_calls = 0;
    int generation_calls = 0; // Eq. 1, 3 and 4 calls
    int assessment_calls = 0;
    ValidationVerdict final_verdict;
};

// A model or tool failed mid-run. trace() holds the events up to the failure.
class LoopAborted : public ExternalError {
public:
    LoopAborted(const std::string& message, std::vector<LoopEvent> trace)
        : ExternalError(message), trace_(std::move(trace)) {}
    const std::vector<LoopEvent>& trace() const noexcept { return trace_; }

private:
    std::vector<LoopEvent> trace_;
};

// fb_t: self-assessment concerns plus blocking analyzer findings (and a
// concern when the candidate does not compile).
Feedback combine_feedback(const Feedback& self, const ValidationVerdict& verdict,
                          Severity blocking);

LoopOutcome run_task(const CodeTask& task, Model& model, KnowledgeBase& kb, Validator& validator,
                     const LoopConfig& config, const TemplateSet& templates);
LoopOutcome run_task(const CodeTask& task, Model& model, KnowledgeBase& kb, Validator& validator,
                     const LoopConfig& config);

// One JSON object per event with fields event, t, candidate_digest, score,
// timestamp and event-specific extras.
void write_trace_jsonl(const std::vector<LoopEvent>& trace, std::ostream& out,
                       std::chrono::system_clock::time_point timestamp);

} // namespace secreflect

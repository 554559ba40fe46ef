#include "trace_grammar.hpp"

#include <regex>

namespace secreflect::testing {

std::string trace_word(const std::vector<LoopEvent>& trace) {
    std::string word;
    for (const auto& e : trace) {
        const auto name = event_name(e);
        if (name == "Generated") word += 'G';
        else if (name == "Assessed") word += 'A';
        else if (name == "Retrieved") word += 'R';
        else if (name == "Regenerated") word += 'E';
        else if (name == "Refined") word += 'F';
        else if (name == "Validated") word += 'V';
        else if (name == "KnowledgeStored") word += 'K';
        else if (name == "Accepted") word += 'C';
        else if (name == "Exhausted") word += 'X';
        else word += '?';
    }
    return word;
}

std::string trace_violation(const std::vector<LoopEvent>& trace) {
    // Accept after the first check, accept after regeneration, or run the
    // refinement rounds to a store-and-verify or exhaustion.
    static const std::regex grammar("GA(VC|R(EAVC|(EA)?(FAV)*(KV[CX]|X)))");
    const auto word = trace_word(trace);
    if (!std::regex_match(word, grammar))
        return "trace '" + word + "' does not match the grammar";

    int expected_t = 1;
    for (std::size_t i = 0; i < trace.size(); ++i) {
        const auto& e = trace[i];
        if (const auto* g = std::get_if<event::Generated>(&e)) {
            if (g->candidate.phase.kind() != Phase::Kind::initial)
                return "Generated carries phase " + g->candidate.phase.label();
        } else if (const auto* r = std::get_if<event::Regenerated>(&e)) {
            if (r->candidate.phase.kind() != Phase::Kind::retrieval_regen)
                return "Regenerated carries phase " + r->candidate.phase.label();
        } else if (const auto* f = std::get_if<event::Refined>(&e)) {
            if (f->t != expected_t)
                return "Refined(" + std::to_string(f->t) + ") where t=" +
                       std::to_string(expected_t) + " was due";
            if (f->candidate.phase.kind() != Phase::Kind::refined ||
                f->candidate.phase.iteration() != f->t)
                return "Refined(" + std::to_string(f->t) + ") carries phase " +
                       f->candidate.phase.label();
            ++expected_t;
        } else if (const auto* rt = std::get_if<event::Retrieved>(&e)) {
            if (rt->count == 0 && rt->top_score != 0.0)
                return "Retrieved(0) reports a nonzero score";
            if (rt->top_score < 0.0 || rt->top_score > 1.0)
                return "Retrieved score outside [0, 1]";
            const bool regenerates = i + 1 < trace.size() &&
                                     std::holds_alternative<event::Regenerated>(trace[i + 1]);
            if (regenerates != (rt->count > 0))
                return "regeneration must follow exactly the nonempty retrievals";
        } else if (const auto* k = std::get_if<event::KnowledgeStored>(&e)) {
            if (k->entry_id.size() != 64)
                return "KnowledgeStored without a sha256 id";
        }
    }
    // The accepted candidate must be the one last produced.
    if (const auto* c = std::get_if<event::Accepted>(&trace.back())) {
        for (auto it = trace.rbegin(); it != trace.rend(); ++it) {
            const Candidate* last = nullptr;
            if (const auto* g = std::get_if<event::Generated>(&*it)) last = &g->candidate;
            if (const auto* r = std::get_if<event::Regenerated>(&*it)) last = &r->candidate;
            if (const auto* f = std::get_if<event::Refined>(&*it)) last = &f->candidate;
            if (last) {
                if (!(*last == c->candidate))
                    return "Accepted candidate is not the latest one";
                break;
            }
        }
    }
    return {};
}

} // namespace secreflect::testing

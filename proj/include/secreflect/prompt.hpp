#pragma once

// Prompt assembly for generation, refinement, self-assessment and insight
// distillation, plus the strict self-assessment reply grammar.
//
// Every bound value is framed as a labeled section:
//
//     ### LABEL
//     <body, newline-terminated>
//     ### END LABEL
//
// Labels used: RETRIEVED, TASK, PRIOR, CANDIDATE <phase>, FEEDBACK.

#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "secreflect/domain.hpp"
#include "secreflect/knowledge_base.hpp"

namespace secreflect {

enum class TemplateRole { generation, refine, assessment, distill };

std::string_view to_string(TemplateRole role);

// Placeholders a template of the given role must contain, in the order they
// must appear in the body.
std::vector<std::string> required_placeholders(TemplateRole role);

struct PromptTemplate {
    std::string name;
    TemplateRole role = TemplateRole::generation;
    std::string body;

    // Throws AssemblyError naming the first missing or misplaced placeholder.
    void validate() const;
};

struct TemplateSet {
    PromptTemplate generation;
    PromptTemplate refine;
    PromptTemplate assessment;
    PromptTemplate distill;

    // Reads generation.txt, refine.txt, assessment.txt and distill.txt.
    static TemplateSet load(const std::filesystem::path& dir);
    // Built-in defaults, identical to data/templates.
    static TemplateSet defaults();
};

std::string render_section(std::string_view label, std::string_view body);
std::string render_task_section(const CodeTask& task);
std::string render_candidate_section(const Candidate& candidate);
std::string render_feedback_section(const Feedback& feedback);
// Empty string when there is nothing retrieved.
std::string render_retrieved_section(const std::vector<KnowledgeEntry>& retrieved);

// Substitutes {name} markers in body. Markers not named in bindings are left
// as they are.
std::string substitute(std::string_view body,
                       const std::vector<std::pair<std::string, std::string>>& bindings);

// Eq. 1 (y0) and, with a prior candidate and retrieved context, Eq. 3 (y1).
// Order: preamble, retrieved (if any), task, prior candidate (if any).
std::string render_generation_prompt(const PromptTemplate& tmpl, const CodeTask& task,
                                     const std::vector<KnowledgeEntry>& retrieved,
                                     const Candidate* prior = nullptr);

// Eq. 4: p_refine | x | y0 | fb0 | y1 | fb1 ... | yt | fbt | r_t.
// history.front() must be (y0, fb0). When the full prompt exceeds budget,
// middle pairs are dropped oldest-first; y0, fb0 and the newest pair always
// stay. Throws AssemblyError if even the mandatory sections do not fit.
std::string render_refine_prompt(const PromptTemplate& tmpl, const CodeTask& task,
                                 const Candidate& y0,
                                 const std::vector<std::pair<Candidate, Feedback>>& history,
                                 const std::vector<KnowledgeEntry>& retrieved,
                                 std::size_t budget);

std::string render_assessment_prompt(const PromptTemplate& tmpl, const CodeTask& task,
                                     const Candidate& candidate);

std::string render_distill_prompt(const PromptTemplate& tmpl, const CodeTask& task,
                                  const Candidate& final_candidate,
                                  const std::vector<std::pair<Candidate, Feedback>>& history);

// Grammar:
//   VERDICT: SECURE | VERDICT: DEFECTS
//   followed by bullet lines "- [CWE-nnn] text" or "- text".
// SECURE takes no bullets. Anything else is a parse error, reported as
// defect_free=false.
Feedback parse_self_assessment(std::string_view response_text);
// Inverse of parse_self_assessment on verdict, concern texts and CWE tags.
std::string format_self_assessment(const Feedback& feedback);

// Code inside the first ``` fence of a model reply, or the whole reply when
// it has no fence.
std::string extract_code(std::string_view reply);

} // namespace secreflect

#pragma once

// Shared vocabulary: tasks, candidates, feedback and loop configuration.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace secreflect {

// Corpus languages. Adding a language means extending parse/to_string,
// the syntax checker and the rule pack's language column.
enum class Language { c_cpp, python };

std::string_view to_string(Language language);
Language parse_language(std::string_view text);
// Source file extension used when a candidate is materialized on disk.
std::string_view file_extension(Language language);

// Normalizes "CWE-78" / "cwe-078" to "CWE-078". Throws UsageError when the
// text is not a CWE identifier.
std::string normalize_cwe(std::string_view text);
// Strict form: "CWE-" followed by at least three digits.
bool is_canonical_cwe(std::string_view text);

struct CodeTask {
    std::string id;
    Language language = Language::python;
    std::string prompt_code;
    std::string description;
    std::optional<std::string> cwe_hint;

    void validate() const;
};

// Where a candidate came from in the loop: y0, the retrieval-assisted y1, or
// the t-th refinement.
class Phase {
public:
    enum class Kind { initial, retrieval_regen, refined };

    static Phase initial() { return Phase(Kind::initial, 0); }
    static Phase retrieval_regen() { return Phase(Kind::retrieval_regen, 0); }
    static Phase refined(int iteration);

    Kind kind() const noexcept { return kind_; }
    // Refinement index t (>= 1) for refined candidates, 0 otherwise.
    int iteration() const noexcept { return iteration_; }

    std::string label() const;

    friend bool operator==(const Phase&, const Phase&) = default;

private:
    Phase(Kind kind, int iteration) : kind_(kind), iteration_(iteration) {}
    Kind kind_;
    int iteration_;
};

struct Candidate {
    std::string code;
    Phase phase = Phase::initial();
    std::string task_id;

    friend bool operator==(const Candidate&, const Candidate&) = default;
};

nlohmann::json to_json(const Candidate& candidate);
Candidate candidate_from_json(const nlohmann::json& j);

enum class FeedbackSource { self_assessment, analyzer, combined };

std::string_view to_string(FeedbackSource source);

struct Concern {
    std::string text;
    std::optional<std::string> cwe;

    friend bool operator==(const Concern&, const Concern&) = default;
};

// fb_t. Construction enforces: defect_free implies no concerns, and a parse
// error never reports defect_free.
class Feedback {
public:
    Feedback(FeedbackSource source, bool defect_free, std::vector<Concern> concerns,
             bool parse_error);

    static Feedback secure(FeedbackSource source);
    static Feedback defects(FeedbackSource source, std::vector<Concern> concerns);
    static Feedback unparseable(std::vector<Concern> concerns = {});

    FeedbackSource source() const noexcept { return source_; }
    bool defect_free() const noexcept { return defect_free_; }
    const std::vector<Concern>& concerns() const noexcept { return concerns_; }
    bool parse_error() const noexcept { return parse_error_; }

    friend bool operator==(const Feedback&, const Feedback&) = default;

private:
    FeedbackSource source_;
    bool defect_free_;
    std::vector<Concern> concerns_;
    bool parse_error_;
};

enum class Severity { note, warning, error };

std::string_view to_string(Severity severity);
Severity parse_severity(std::string_view text);

struct DecodingParams {
    double temperature = 0.2;
    int max_output_len = 2048;
    std::vector<std::string> stop_sequences;
    std::uint64_t seed = 0;

    friend bool operator==(const DecodingParams&, const DecodingParams&) = default;
};

// Decoding parameters per model-call role.
struct PhaseDecoding {
    DecodingParams generation;
    DecodingParams refine{0.2, 2048, {}, 0};
    DecodingParams assessment{0.0, 512, {}, 0};
    DecodingParams distill{0.0, 512, {}, 0};

    friend bool operator==(const PhaseDecoding&, const PhaseDecoding&) = default;
};

struct LoopConfig {
    int max_refine_iters = 3;
    int retrieval_k = 3;
    double retrieval_threshold = 0.25;
    double dedup_threshold = 0.90;
    std::size_t context_budget = 32000;
    // Findings at or above this severity block acceptance.
    Severity blocking_severity = Severity::warning;
    PhaseDecoding decoding;
    std::uint64_t seed = 0;

    // Throws UsageError describing the first violated constraint.
    void validate() const;

    friend bool operator==(const LoopConfig&, const LoopConfig&) = default;
};

nlohmann::json to_json(const LoopConfig& config);
// Missing keys keep their defaults.
LoopConfig loop_config_from_json(const nlohmann::json& j, LoopConfig base = {});

} // namespace secreflect

#pragma once

// Benchmark protocol: corpus loading, base vs. reflex sweeps, metrics and
// reports.

#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "secreflect/domain.hpp"
#include "secreflect/knowledge_base.hpp"
#include "secreflect/model.hpp"
#include "secreflect/prompt.hpp"
#include "secreflect/validators.hpp"

namespace secreflect {

struct Scenario {
    std::string id;
    std::string cwe; // canonical "CWE-078"
    Language language = Language::python;
    std::string prompt_code;
    std::string description;

    CodeTask to_task() const;
};

// One scenario folder: manifest plus prompt.<ext>.
Scenario load_scenario(const std::filesystem::path& folder);

// <dir>/<folder>/manifest ("key: value" lines: id, cwe, language,
// description) and <dir>/<folder>/prompt.<ext>. Sorted by id.
std::vector<Scenario> load_corpus(const std::filesystem::path& dir);

enum class Mode { base, reflex };

std::string_view to_string(Mode mode);
Mode parse_mode(std::string_view text);
std::vector<Mode> parse_modes(std::string_view comma_separated);

struct TrialRecord {
    std::string scenario_id;
    std::string cwe;
    int repeat_index = 1; // 1..R
    int gen_index = 1;    // 1..N
    Mode mode = Mode::base;
    bool compiled = false;
    bool secure = false; // implies compiled
    int refinements_used = 0;
    double wall_time = 0.0; // seconds
    std::string error;      // empty unless a provider/tool failure was recorded

    friend bool operator==(const TrialRecord&, const TrialRecord&) = default;
};

// Equality on everything except wall_time.
bool same_outcome(const TrialRecord& a, const TrialRecord& b);
bool same_outcomes(const std::vector<TrialRecord>& a, const std::vector<TrialRecord>& b);

nlohmann::json to_json(const TrialRecord& record);
TrialRecord trial_record_from_json(const nlohmann::json& j);
void write_records_jsonl(const std::vector<TrialRecord>& records, std::ostream& out);
std::vector<TrialRecord> read_records_jsonl(std::string_view text);

struct BenchmarkConfig {
    std::vector<Mode> modes{Mode::base, Mode::reflex};
    int gens = 25;
    int repeats = 5;
    std::uint64_t seed = 0;
    LoopConfig loop;
    bool fail_fast = false;
    bool kb_persist_across_repeats = false;
    // Written after every reflex repeat when set.
    std::optional<std::filesystem::path> kb_path;
    // Base-mode scenarios run in parallel when > 1 and the model allows it.
    int jobs = 1;

    void validate() const;
};

struct BenchmarkResult {
    std::vector<TrialRecord> records;
    // KB size at the end of each reflex repeat, in repeat order.
    std::vector<std::size_t> kb_size_after_repeat;
};

// Per-trial seed derived from (seed, repeat, scenario position, gen).
std::uint64_t trial_seed(std::uint64_t seed, int repeat, std::size_t scenario, int gen);

// Modes run in the given order; within a mode, repeats, then scenarios in
// corpus order, then generations. Reflex mode clears the KB at the start of
// each repeat unless kb_persist_across_repeats. kb may be null for base-only
// sweeps.
BenchmarkResult run_benchmark(const std::vector<Scenario>& corpus, const BenchmarkConfig& config,
                              Model& model, Validator& validator, KnowledgeBase* kb,
                              const TemplateSet& templates = TemplateSet::defaults());

struct MetricsRow {
    double sec_rate_macro = 0.0;
    double sec_rate_micro = 0.0;
    double pass_rate = 0.0;
    double eff_total = 0.0;
    double sec_count = 0.0;
    double unres_count = 0.0;
    std::size_t cells = 0;          // (scenario, repeat) pairs
    std::size_t excluded_cells = 0; // cells with eff = 0, left out of the macro mean
    int gens = 0;                   // N

    friend bool operator==(const MetricsRow&, const MetricsRow&) = default;
};

// Throws MetricsError on empty input or when cells disagree on N.
std::map<Mode, MetricsRow> compute_metrics(const std::vector<TrialRecord>& records);
std::map<std::string, std::map<Mode, MetricsRow>>
compute_metrics_by_cwe(const std::vector<TrialRecord>& records);

struct CweDelta {
    std::string cwe;
    double base = 0.0;   // sec_rate_macro
    double reflex = 0.0; // sec_rate_macro
    double difference() const { return reflex - base; }
};

// CWEs that have both modes, sorted by CWE.
std::vector<CweDelta> per_cwe_deltas(const std::vector<TrialRecord>& records);

enum class ReportFormat { csv, markdown, structured };

ReportFormat parse_report_format(std::string_view text);

// One decimal place.
std::string format_number(double value);
// "↑13.6", "↓1.8" or "±0.0".
std::string format_delta(double from, double to);

std::string render_markdown_report(const std::map<Mode, MetricsRow>& rows,
                                   const std::vector<CweDelta>& deltas);
std::string render_metrics_csv(const std::map<Mode, MetricsRow>& rows);
std::string render_cwe_csv(const std::vector<CweDelta>& deltas);
nlohmann::json render_structured_report(const std::map<Mode, MetricsRow>& rows,
                                        const std::vector<CweDelta>& deltas);

// Writes report.md, metrics.csv + per_cwe.csv, or metrics.json into
// out_dir. Returns the written paths.
std::vector<std::filesystem::path> emit_report(const std::map<Mode, MetricsRow>& rows,
                                               const std::vector<CweDelta>& deltas,
                                               ReportFormat format,
                                               const std::filesystem::path& out_dir);

} // namespace secreflect

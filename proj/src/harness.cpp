#include "secreflect/harness.hpp"

#include <algorithm>
#include <chrono>
#include <future>
#include <set>
#include <sstream>

#include "secreflect/errors.hpp"
#include "secreflect/reflection_loop.hpp"
#include "secreflect/util.hpp"

namespace secreflect {

CodeTask Scenario::to_task() const {
    return {id, language, prompt_code, description, cwe};
}

namespace {

std::map<std::string, std::string> parse_manifest(const std::filesystem::path& path) {
    std::map<std::string, std::string> fields;
    std::istringstream in(read_file(path));
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto t = trim(line);
        if (t.empty() || t.front() == '#')
            continue;
        const auto colon = t.find(':');
        if (colon == std::string::npos)
            throw CorpusError(path.string() + ":" + std::to_string(line_no) +
                              ": expected 'key: value'");
        const auto key = trim(std::string_view(t).substr(0, colon));
        const auto value = trim(std::string_view(t).substr(colon + 1));
        if (key.empty())
            throw CorpusError(path.string() + ":" + std::to_string(line_no) + ": empty key");
        if (!fields.emplace(key, value).second)
            throw CorpusError(path.string() + ":" + std::to_string(line_no) + ": duplicate key '" +
                              key + "'");
    }
    return fields;
}

} // namespace

Scenario load_scenario(const std::filesystem::path& folder) {
    namespace fs = std::filesystem;
    const auto manifest_path = folder / "manifest";
    if (!fs::exists(manifest_path))
        throw CorpusError("missing manifest: " + manifest_path.string());
    auto fields = parse_manifest(manifest_path);
    for (const char* key : {"id", "cwe", "language"})
        if (!fields.count(key) || fields[key].empty())
            throw CorpusError(manifest_path.string() + ": missing field '" + key + "'");

    Scenario s;
    s.id = fields["id"];
    if (!is_canonical_cwe(fields["cwe"]))
        throw CorpusError(manifest_path.string() + ": cwe '" + fields["cwe"] +
                          "' must look like CWE-078");
    s.cwe = fields["cwe"];
    try {
        s.language = parse_language(fields["language"]);
    } catch (const UsageError& e) {
        throw CorpusError(manifest_path.string() + ": " + e.what());
    }
    s.description = fields.count("description") ? fields["description"] : "";

    std::vector<fs::path> prompts;
    for (const auto& entry : fs::directory_iterator(folder))
        if (entry.is_regular_file() && entry.path().stem() == "prompt")
            prompts.push_back(entry.path());
    if (prompts.empty())
        throw CorpusError("missing prompt file in " + folder.string());
    if (prompts.size() > 1)
        throw CorpusError("more than one prompt file in " + folder.string());
    s.prompt_code = read_file(prompts.front());
    if (s.prompt_code.empty())
        throw CorpusError("empty prompt file: " + prompts.front().string());
    return s;
}

std::vector<Scenario> load_corpus(const std::filesystem::path& dir) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(dir))
        throw CorpusError("corpus directory not found: " + dir.string());

    std::vector<fs::path> folders;
    for (const auto& entry : fs::directory_iterator(dir))
        if (entry.is_directory())
            folders.push_back(entry.path());
    std::sort(folders.begin(), folders.end());

    std::vector<Scenario> corpus;
    std::map<std::string, fs::path> seen;
    for (const auto& folder : folders) {
        auto s = load_scenario(folder);
        if (auto [it, inserted] = seen.emplace(s.id, folder); !inserted)
            throw CorpusError("duplicate scenario id '" + s.id + "' in " + folder.string() +
                              " and " + it->second.string());
        corpus.push_back(std::move(s));
    }
    if (corpus.empty())
        throw CorpusError("corpus directory has no scenarios: " + dir.string());
    std::sort(corpus.begin(), corpus.end(),
              [](const Scenario& a, const Scenario& b) { return a.id < b.id; });
    return corpus;
}

std::string_view to_string(Mode mode) { return mode == Mode::base ? "base" : "reflex"; }

Mode parse_mode(std::string_view text) {
    if (text == "base")
        return Mode::base;
    if (text == "reflex" || text == "reflexgen")
        return Mode::reflex;
    throw UsageError("unknown mode '" + std::string(text) + "' (expected base or reflex)");
}

std::vector<Mode> parse_modes(std::string_view text) {
    std::vector<Mode> modes;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        auto comma = text.find(',', pos);
        if (comma == std::string_view::npos)
            comma = text.size();
        const auto mode = parse_mode(trim(text.substr(pos, comma - pos)));
        if (std::find(modes.begin(), modes.end(), mode) != modes.end())
            throw UsageError("mode listed twice: " + std::string(to_string(mode)));
        modes.push_back(mode);
        pos = comma + 1;
    }
    return modes;
}

bool same_outcome(const TrialRecord& a, const TrialRecord& b) {
    auto x = a;
    x.wall_time = b.wall_time;
    return x == b;
}

bool same_outcomes(const std::vector<TrialRecord>& a, const std::vector<TrialRecord>& b) {
    return a.size() == b.size() && std::equal(a.begin(), a.end(), b.begin(), same_outcome);
}

namespace {

nlohmann::ordered_json record_json(const TrialRecord& r) {
    nlohmann::ordered_json j;
    j["scenario_id"] = r.scenario_id;
    j["cwe"] = r.cwe;
    j["repeat_index"] = r.repeat_index;
    j["gen_index"] = r.gen_index;
    j["mode"] = std::string(to_string(r.mode));
    j["compiled"] = r.compiled;
    j["secure"] = r.secure;
    j["refinements_used"] = r.refinements_used;
    j["wall_time"] = r.wall_time;
    j["error"] = r.error;
    return j;
}

} // namespace

nlohmann::json to_json(const TrialRecord& r) { return nlohmann::json::parse(record_json(r).dump()); }

TrialRecord trial_record_from_json(const nlohmann::json& j) {
    TrialRecord r;
    r.scenario_id = j.at("scenario_id").get<std::string>();
    r.cwe = j.at("cwe").get<std::string>();
    r.repeat_index = j.at("repeat_index").get<int>();
    r.gen_index = j.at("gen_index").get<int>();
    r.mode = parse_mode(j.at("mode").get<std::string>());
    r.compiled = j.at("compiled").get<bool>();
    r.secure = j.at("secure").get<bool>();
    r.refinements_used = j.at("refinements_used").get<int>();
    r.wall_time = j.at("wall_time").get<double>();
    r.error = j.value("error", "");
    return r;
}

void write_records_jsonl(const std::vector<TrialRecord>& records, std::ostream& out) {
    for (const auto& r : records)
        out << record_json(r).dump() << '\n';
}

std::vector<TrialRecord> read_records_jsonl(std::string_view text) {
    std::vector<TrialRecord> out;
    std::istringstream in{std::string(text)};
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty())
            continue;
        try {
            out.push_back(trial_record_from_json(nlohmann::json::parse(line)));
        } catch (const nlohmann::json::exception& e) {
            throw UsageError("records line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return out;
}

void BenchmarkConfig::validate() const {
    if (modes.empty())
        throw UsageError("at least one mode is required");
    if (gens < 1)
        throw UsageError("gens must be >= 1");
    if (repeats < 1)
        throw UsageError("repeats must be >= 1");
    if (jobs < 1)
        throw UsageError("jobs must be >= 1");
    loop.validate();
}

std::uint64_t trial_seed(std::uint64_t seed, int repeat, std::size_t scenario, int gen) {
    auto s = mix_seed(seed, static_cast<std::uint64_t>(repeat));
    s = mix_seed(s, scenario);
    return mix_seed(s, static_cast<std::uint64_t>(gen));
}

namespace {

using SteadyClock = std::chrono::steady_clock;

double seconds_since(SteadyClock::time_point start) {
    return std::chrono::duration<double>(SteadyClock::now() - start).count();
}

TrialRecord base_trial(const Scenario& s, int repeat, int gen, std::uint64_t seed,
                       const BenchmarkConfig& config, Model& model, Validator& validator,
                       const TemplateSet& templates) {
    TrialRecord rec;
    rec.scenario_id = s.id;
    rec.cwe = s.cwe;
    rec.repeat_index = repeat;
    rec.gen_index = gen;
    rec.mode = Mode::base;
    const auto start = SteadyClock::now();
    try {
        const auto task = s.to_task();
        auto decoding = config.loop.decoding.generation;
        decoding.seed = seed;
        const auto response =
            model.complete({render_generation_prompt(templates.generation, task, {}), decoding});
        if (response.finish_reason == FinishReason::error || !response.text)
            throw TransportError("model call failed: " + response.error_message);
        const auto verdict = validator.validate(s.language, extract_code(*response.text));
        rec.compiled = verdict.compiled;
        rec.secure = verdict.clean(config.loop.blocking_severity);
    } catch (const ExternalError& e) {
        if (config.fail_fast)
            throw;
        rec.compiled = false;
        rec.secure = false;
        rec.error = e.what();
    }
    rec.wall_time = seconds_since(start);
    return rec;
}

TrialRecord reflex_trial(const Scenario& s, int repeat, int gen, std::uint64_t seed,
                         const BenchmarkConfig& config, Model& model, Validator& validator,
                         KnowledgeBase& kb, const TemplateSet& templates) {
    TrialRecord rec;
    rec.scenario_id = s.id;
    rec.cwe = s.cwe;
    rec.repeat_index = repeat;
    rec.gen_index = gen;
    rec.mode = Mode::reflex;
    const auto start = SteadyClock::now();
    try {
        auto loop = config.loop;
        loop.seed = seed;
        const auto outcome = run_task(s.to_task(), model, kb, validator, loop, templates);
        rec.compiled = outcome.final_verdict.compiled;
        rec.secure = outcome.final_verdict.clean(loop.blocking_severity);
        rec.refinements_used = outcome.refinements_used;
    } catch (const ExternalError& e) {
        if (config.fail_fast)
            throw;
        rec.compiled = false;
        rec.secure = false;
        rec.error = e.what();
    }
    rec.wall_time = seconds_since(start);
    return rec;
}

} // namespace

BenchmarkResult run_benchmark(const std::vector<Scenario>& corpus, const BenchmarkConfig& config,
                              Model& model, Validator& validator, KnowledgeBase* kb,
                              const TemplateSet& templates) {
    config.validate();
    if (corpus.empty())
        throw UsageError("corpus is empty");
    const bool has_reflex =
        std::find(config.modes.begin(), config.modes.end(), Mode::reflex) != config.modes.end();
    if (has_reflex && kb == nullptr)
        throw UsageError("reflex mode needs a knowledge base");

    BenchmarkResult result;
    for (const auto mode : config.modes) {
        for (int repeat = 1; repeat <= config.repeats; ++repeat) {
            if (mode == Mode::base) {
                auto run_scenario = [&](std::size_t si) {
                    std::vector<TrialRecord> out;
                    for (int gen = 1; gen <= config.gens; ++gen)
                        out.push_back(base_trial(corpus[si], repeat, gen,
                                                 trial_seed(config.seed, repeat, si, gen), config,
                                                 model, validator, templates));
                    return out;
                };
                if (config.jobs > 1 && model.concurrent()) {
                    std::vector<std::future<std::vector<TrialRecord>>> pending;
                    for (std::size_t si = 0; si < corpus.size(); ++si) {
                        pending.push_back(std::async(std::launch::async, run_scenario, si));
                        if (pending.size() >= static_cast<std::size_t>(config.jobs)) {
                            for (auto& f : pending)
                                for (auto& r : f.get())
                                    result.records.push_back(std::move(r));
                            pending.clear();
                        }
                    }
                    for (auto& f : pending)
                        for (auto& r : f.get())
                            result.records.push_back(std::move(r));
                } else {
                    for (std::size_t si = 0; si < corpus.size(); ++si)
                        for (auto& r : run_scenario(si))
                            result.records.push_back(std::move(r));
                }
                continue;
            }

            if (!config.kb_persist_across_repeats || repeat == 1)
                kb->clear();
            for (std::size_t si = 0; si < corpus.size(); ++si)
                for (int gen = 1; gen <= config.gens; ++gen)
                    result.records.push_back(reflex_trial(corpus[si], repeat, gen,
                                                          trial_seed(config.seed, repeat, si, gen),
                                                          config, model, validator, *kb, templates));
            result.kb_size_after_repeat.push_back(kb->size());
            if (config.kb_path)
                kb->persist(*config.kb_path);
        }
    }
    return result;
}

namespace {

struct CellKey {
    Mode mode;
    std::string scenario;
    int repeat;
    auto operator<=>(const CellKey&) const = default;
};

struct Cell {
    int n = 0;
    int eff = 0;
    int sec = 0;
};

std::map<Mode, MetricsRow> metrics_of(const std::vector<const TrialRecord*>& records) {
    std::map<CellKey, Cell> cells;
    for (const auto* r : records) {
        if (r->secure && !r->compiled)
            throw MetricsError("record " + r->scenario_id + " is secure but not compiled");
        auto& c = cells[{r->mode, r->scenario_id, r->repeat_index}];
        ++c.n;
        c.eff += r->compiled ? 1 : 0;
        c.sec += r->compiled && r->secure ? 1 : 0;
    }
    if (cells.empty())
        throw MetricsError("no trial records");
    const int n = cells.begin()->second.n;
    for (const auto& [key, c] : cells)
        if (c.n != n)
            throw MetricsError("inconsistent N: scenario " + key.scenario + " repeat " +
                               std::to_string(key.repeat) + " has " + std::to_string(c.n) +
                               " records, expected " + std::to_string(n));

    struct Sums {
        std::size_t cells = 0, excluded = 0, included = 0;
        long eff = 0, sec = 0, unres = 0, total = 0;
        double macro = 0.0;
    };
    std::map<Mode, Sums> sums;
    for (const auto& [key, c] : cells) {
        auto& s = sums[key.mode];
        ++s.cells;
        s.eff += c.eff;
        s.sec += c.sec;
        s.unres += n - c.eff;
        s.total += n;
        if (c.eff > 0) {
            s.macro += 100.0 * c.sec / c.eff;
            ++s.included;
        } else {
            ++s.excluded;
        }
    }
    std::map<Mode, MetricsRow> rows;
    for (const auto& [mode, s] : sums) {
        MetricsRow row;
        const auto cells_d = static_cast<double>(s.cells);
        row.eff_total = static_cast<double>(s.eff) / cells_d;
        row.sec_count = static_cast<double>(s.sec) / cells_d;
        row.unres_count = static_cast<double>(s.unres) / cells_d;
        row.pass_rate = 100.0 * static_cast<double>(s.eff) / static_cast<double>(s.total);
        row.sec_rate_micro = s.eff > 0 ? 100.0 * static_cast<double>(s.sec) / static_cast<double>(s.eff) : 0.0;
        row.sec_rate_macro = s.included > 0 ? s.macro / static_cast<double>(s.included) : 0.0;
        row.cells = s.cells;
        row.excluded_cells = s.excluded;
        row.gens = n;
        rows[mode] = row;
    }
    return rows;
}

} // namespace

std::map<Mode, MetricsRow> compute_metrics(const std::vector<TrialRecord>& records) {
    std::vector<const TrialRecord*> ptrs;
    ptrs.reserve(records.size());
    for (const auto& r : records)
        ptrs.push_back(&r);
    return metrics_of(ptrs);
}

std::map<std::string, std::map<Mode, MetricsRow>>
compute_metrics_by_cwe(const std::vector<TrialRecord>& records) {
    std::map<std::string, std::vector<const TrialRecord*>> groups;
    for (const auto& r : records)
        groups[r.cwe].push_back(&r);
    std::map<std::string, std::map<Mode, MetricsRow>> out;
    for (const auto& [cwe, group] : groups)
        out[cwe] = metrics_of(group);
    return out;
}

std::vector<CweDelta> per_cwe_deltas(const std::vector<TrialRecord>& records) {
    std::vector<CweDelta> out;
    if (records.empty())
        return out;
    for (const auto& [cwe, rows] : compute_metrics_by_cwe(records)) {
        auto base = rows.find(Mode::base);
        auto reflex = rows.find(Mode::reflex);
        if (base != rows.end() && reflex != rows.end())
            out.push_back({cwe, base->second.sec_rate_macro, reflex->second.sec_rate_macro});
    }
    return out;
}

} // namespace secreflect

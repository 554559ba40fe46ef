#include "secreflect/cli.hpp"

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "secreflect/errors.hpp"
#include "secreflect/harness.hpp"
#include "secreflect/reflection_loop.hpp"
#include "secreflect/remote_model.hpp"
#include "secreflect/util.hpp"

#ifndef SECREFLECT_DATA_DIR
#define SECREFLECT_DATA_DIR "data"
#endif

namespace secreflect {

namespace fs = std::filesystem;
using json = nlohmann::json;

fs::path data_dir() {
    if (const char* env = std::getenv("SECREFLECT_DATA_DIR"); env && *env)
        return env;
    return SECREFLECT_DATA_DIR;
}

namespace {

// Options shared by gen and eval.
struct CommonOptions {
    std::string scripted;
    std::string provider;
    std::string template_dir;
    std::string rules;
    std::string external_analyzer;
    std::string config_file;
    std::string kb_path;
    int max_iters = 3;
    std::uint64_t seed = 0;
};

void add_common(CLI::App& cmd, CommonOptions& o) {
    cmd.add_option("--scripted", o.scripted, "Scripted model fixture (JSON)")->check(CLI::ExistingFile);
    cmd.add_option("--provider", o.provider,
                   "Provider profile name (data/providers) or path; needs PROVIDER_API_KEY");
    cmd.add_option("--template-dir", o.template_dir, "Directory with prompt templates")
        ->check(CLI::ExistingDirectory);
    cmd.add_option("--rules", o.rules, "Heuristic rules file")->check(CLI::ExistingFile);
    cmd.add_option("--external-analyzer", o.external_analyzer,
                   "Analyzer command with {workspace} and {output} placeholders");
    cmd.add_option("--config", o.config_file, "JSON config file; flags win")->check(CLI::ExistingFile);
    cmd.add_option("--kb", o.kb_path, "Knowledge base file (JSONL)");
    cmd.add_option("--max-iters", o.max_iters, "Refinement bound T")->check(CLI::NonNegativeNumber);
    cmd.add_option("--seed", o.seed, "Seed for all derived randomness");
}

json read_json_file(const fs::path& path) {
    try {
        return json::parse(read_file(path));
    } catch (const json::parse_error& e) {
        throw UsageError(path.string() + ": " + e.what());
    }
}

// Everything a run needs, resolved from flags.
struct Session {
    std::unique_ptr<Model> model;
    std::unique_ptr<RulePack> rules;
    std::unique_ptr<Validator> validator;
    TemplateSet templates;
    LoopConfig loop;
    json model_record;
    json validator_record;
    std::string templates_record = "builtin";
};

fs::path resolve_provider(const std::string& name) {
    if (fs::exists(name))
        return name;
    const auto path = data_dir() / "providers" / (name + ".json");
    if (!fs::exists(path))
        throw UsageError("unknown provider '" + name + "' (no " + path.string() + ")");
    return path;
}

Session make_session(const CommonOptions& o, const CLI::App& cmd, const json& config) {
    Session s;
    if (o.scripted.empty() == o.provider.empty())
        throw UsageError("exactly one of --scripted or --provider is required");
    if (!o.scripted.empty()) {
        const auto path = fs::absolute(o.scripted);
        s.model = std::make_unique<ScriptedModel>(load_script(path));
        s.model_record = {{"kind", "scripted"},
                          {"fixture", path.string()},
                          {"fixture_sha256", sha256_hex(read_file(path))}};
    } else {
        const auto profile = ProviderProfile::load(resolve_provider(o.provider));
        auto provider = ProviderConfig::from_environment(profile);
        s.model_record = {{"kind", "remote"}, {"profile", provider.profile.to_json()}};
        s.model = std::make_unique<RemoteModel>(std::move(provider));
    }

    if (!o.template_dir.empty()) {
        s.templates = TemplateSet::load(o.template_dir);
        s.templates_record = fs::absolute(o.template_dir).string();
    } else {
        s.templates = TemplateSet::defaults();
    }

    SyntaxCheckerConfig syntax;
    if (!o.external_analyzer.empty()) {
        s.validator = std::make_unique<StandardValidator>(
            syntax, ExternalAnalyzerConfig{o.external_analyzer});
        s.validator_record = {{"kind", "external"}, {"command", o.external_analyzer}};
    } else {
        std::string rules_text;
        if (!o.rules.empty()) {
            rules_text = read_file(o.rules);
            s.rules = std::make_unique<RulePack>(RulePack::parse(rules_text));
            s.validator_record = {{"kind", "heuristic"}, {"rules", fs::absolute(o.rules).string()}};
        } else {
            s.rules = std::make_unique<RulePack>(RulePack::builtin());
            s.validator_record = {{"kind", "heuristic"}, {"rules", "builtin"}};
        }
        s.validator = std::make_unique<StandardValidator>(syntax, *s.rules);
    }

    s.loop = config.contains("loop") ? loop_config_from_json(config.at("loop")) : LoopConfig{};
    if (cmd.count("--max-iters") || !config.contains("loop") ||
        !config.at("loop").contains("max_refine_iters"))
        s.loop.max_refine_iters = o.max_iters;
    if (cmd.count("--seed"))
        s.loop.seed = o.seed;
    else
        s.loop.seed = config.value("seed", o.seed);
    s.loop.validate();
    return s;
}

std::string first_line_of(const std::vector<std::string>& argv) {
    try {
        const auto r = run_process(argv);
        const auto text = trim(r.out.empty() ? r.err : r.out);
        return text.substr(0, text.find('\n'));
    } catch (const Error&) {
        return "unavailable";
    }
}

json tool_versions() {
    return {{"secreflect", kVersion},
            {"python3", first_line_of({"python3", "--version"})},
            {"cc", first_line_of({"cc", "--version"})}};
}

CodeTask load_task(const fs::path& path) {
    if (fs::is_directory(path))
        return load_scenario(path).to_task();
    const auto j = read_json_file(path);
    CodeTask task;
    try {
        task.id = j.value("id", path.stem().string());
        task.language = parse_language(j.at("language").get<std::string>());
        if (j.contains("prompt_code"))
            task.prompt_code = j.at("prompt_code").get<std::string>();
        else if (j.contains("prompt_file"))
            task.prompt_code = read_file(path.parent_path() / j.at("prompt_file").get<std::string>());
        task.description = j.value("description", "");
        if (j.contains("cwe"))
            task.cwe_hint = normalize_cwe(j.at("cwe").get<std::string>());
    } catch (const json::exception& e) {
        throw UsageError(path.string() + ": " + e.what());
    }
    task.validate();
    return task;
}

void load_kb_if_present(KnowledgeBase& kb, const std::string& path) {
    if (!path.empty() && fs::exists(path))
        kb.load(path);
}

int handle_errors(const std::function<int()>& body, std::ostream& err) {
    try {
        return body();
    } catch (const UsageError& e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const ExternalError& e) {
        err << "error: " << e.what() << "\n";
        return kExitExternal;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return kExitExternal;
    } catch (const fs::filesystem_error& e) {
        err << "error: " << e.what() << "\n";
        return kExitExternal;
    }
}

// ---- gen ----

struct GenOptions {
    CommonOptions common;
    std::string task_file;
    std::string mode = "reflex";
    std::string out_file;
    std::string trace_out;
    std::string manifest_out;
};

int cmd_gen(const GenOptions& o, const CLI::App& cmd, std::ostream& out, std::ostream& err) {
    const json config = o.common.config_file.empty() ? json::object()
                                                     : read_json_file(o.common.config_file);
    const auto mode = parse_mode(o.mode);
    const auto task = load_task(o.task_file);
    auto session = make_session(o.common, cmd, config);

    KnowledgeBase kb(session.loop.dedup_threshold);
    load_kb_if_present(kb, o.common.kb_path);

    std::string final_code;
    bool accepted = false;
    if (mode == Mode::reflex) {
        LoopOutcome outcome;
        try {
            outcome = run_task(task, *session.model, kb, *session.validator, session.loop,
                               session.templates);
        } catch (const LoopAborted& e) {
            if (!o.trace_out.empty()) {
                std::ostringstream trace;
                write_trace_jsonl(e.trace(), trace, std::chrono::system_clock::now());
                write_file_atomic(o.trace_out, trace.str());
            }
            throw;
        }
        final_code = outcome.final.code;
        accepted = outcome.accepted;
        if (!o.trace_out.empty()) {
            std::ostringstream trace;
            write_trace_jsonl(outcome.trace, trace, std::chrono::system_clock::now());
            write_file_atomic(o.trace_out, trace.str());
        }
        if (!o.common.kb_path.empty())
            kb.persist(o.common.kb_path);
        err << (accepted ? "accepted" : "not accepted") << " after " << outcome.refinements_used
            << " refinement(s), " << outcome.model_calls << " model call(s)\n";
    } else {
        auto decoding = session.loop.decoding.generation;
        decoding.seed = session.loop.seed;
        const auto response = session.model->complete(
            {render_generation_prompt(session.templates.generation, task, {}), decoding});
        if (response.finish_reason == FinishReason::error || !response.text)
            throw TransportError("model call failed: " + response.error_message);
        final_code = extract_code(*response.text);
        accepted = session.validator->validate(task.language, final_code)
                       .clean(session.loop.blocking_severity);
        err << (accepted ? "accepted" : "not accepted") << " (base mode)\n";
    }

    if (o.out_file.empty())
        out << final_code;
    else
        write_file_atomic(o.out_file, final_code);

    fs::path manifest_path = o.manifest_out;
    if (manifest_path.empty() && !o.out_file.empty())
        manifest_path = o.out_file + ".manifest.json";
    if (!manifest_path.empty()) {
        json manifest = {{"command", "gen"},
                         {"created_at", format_rfc3339(std::chrono::system_clock::now())},
                         {"task", fs::absolute(o.task_file).string()},
                         {"mode", std::string(to_string(mode))},
                         {"model", session.model_record},
                         {"validator", session.validator_record},
                         {"templates", session.templates_record},
                         {"loop", to_json(session.loop)},
                         {"seed", session.loop.seed},
                         {"kb", o.common.kb_path.empty() ? json(nullptr)
                                                         : json(fs::absolute(o.common.kb_path).string())},
                         {"tool_versions", tool_versions()}};
        write_file_atomic(manifest_path, manifest.dump(2) + "\n");
    }
    return accepted ? kExitOk : kExitNotAccepted;
}

// ---- eval ----

struct EvalOptions {
    CommonOptions common;
    std::string corpus;
    std::string modes = "base,reflex";
    int gens = 25;
    int repeats = 5;
    std::string out_dir;
    bool kb_persist = false;
    int jobs = 1;
    bool fail_fast = false;
    std::string manifest;
};

// Fills unset eval options from a previous run's manifest.json.
void apply_manifest(EvalOptions& o, const json& m) {
    try {
        if (m.value("command", "") != "eval")
            throw UsageError("manifest is not from an eval run");
        o.corpus = m.at("corpus").get<std::string>();
        std::string modes;
        for (const auto& mode : m.at("modes"))
            modes += (modes.empty() ? "" : ",") + mode.get<std::string>();
        o.modes = modes;
        o.gens = m.at("gens").get<int>();
        o.repeats = m.at("repeats").get<int>();
        o.common.seed = m.at("seed").get<std::uint64_t>();
        o.kb_persist = m.value("kb_persist_across_repeats", false);
        o.jobs = m.value("jobs", 1);
        o.fail_fast = m.value("fail_fast", false);
        const auto& model = m.at("model");
        if (model.at("kind") == "scripted") {
            o.common.scripted = model.at("fixture").get<std::string>();
            if (sha256_hex(read_file(o.common.scripted)) != model.at("fixture_sha256"))
                throw UsageError("scripted fixture changed since the manifest was written: " +
                                 o.common.scripted);
        } else {
            o.common.provider = model.at("profile").at("name").get<std::string>();
        }
        const auto& validator = m.at("validator");
        if (validator.at("kind") == "external")
            o.common.external_analyzer = validator.at("command").get<std::string>();
        else if (validator.at("rules") != "builtin")
            o.common.rules = validator.at("rules").get<std::string>();
        if (m.at("templates") != "builtin")
            o.common.template_dir = m.at("templates").get<std::string>();
        o.common.max_iters = m.at("loop").at("max_refine_iters").get<int>();
    } catch (const json::exception& e) {
        throw UsageError(std::string("malformed manifest: ") + e.what());
    }
}

int cmd_eval(EvalOptions o, const CLI::App& cmd, std::ostream& out, std::ostream& err) {
    json config = o.common.config_file.empty() ? json::object() : read_json_file(o.common.config_file);
    if (!o.manifest.empty()) {
        const auto m = read_json_file(o.manifest);
        apply_manifest(o, m);
        config = {{"loop", m.at("loop")}, {"seed", m.at("seed")}};
    } else {
        if (!cmd.count("--gens") && config.contains("gens"))
            o.gens = config.at("gens").get<int>();
        if (!cmd.count("--repeats") && config.contains("repeats"))
            o.repeats = config.at("repeats").get<int>();
        if (!cmd.count("--modes") && config.contains("modes"))
            o.modes = config.at("modes").get<std::string>();
    }
    if (o.corpus.empty())
        throw UsageError("--corpus is required");
    if (o.out_dir.empty())
        throw UsageError("--out is required");

    BenchmarkConfig bench;
    bench.modes = parse_modes(o.modes);
    bench.gens = o.gens;
    bench.repeats = o.repeats;
    bench.jobs = o.jobs;
    bench.fail_fast = o.fail_fast;
    bench.kb_persist_across_repeats = o.kb_persist;

    const auto corpus_path = fs::absolute(o.corpus);
    const auto corpus = load_corpus(corpus_path);
    auto session = make_session(o.common, cmd, config);
    bench.loop = session.loop;
    bench.seed = session.loop.seed;
    bench.validate();

    const fs::path out_dir = o.out_dir;
    fs::create_directories(out_dir);
    const fs::path kb_path = o.common.kb_path.empty() ? out_dir / "kb.jsonl" : fs::path(o.common.kb_path);
    const bool has_reflex = std::find(bench.modes.begin(), bench.modes.end(), Mode::reflex) !=
                            bench.modes.end();
    KnowledgeBase kb(bench.loop.dedup_threshold);
    if (has_reflex) {
        load_kb_if_present(kb, kb_path.string());
        bench.kb_path = kb_path;
    }

    const auto started = std::chrono::system_clock::now();
    const auto result =
        run_benchmark(corpus, bench, *session.model, *session.validator, has_reflex ? &kb : nullptr,
                      session.templates);

    std::ostringstream records;
    write_records_jsonl(result.records, records);
    write_file_atomic(out_dir / "records.jsonl", records.str());

    const auto rows = compute_metrics(result.records);
    const auto deltas = per_cwe_deltas(result.records);
    for (auto format : {ReportFormat::markdown, ReportFormat::csv, ReportFormat::structured})
        emit_report(rows, deltas, format, out_dir);

    json modes = json::array();
    for (auto m : bench.modes)
        modes.push_back(std::string(to_string(m)));
    json manifest = {{"command", "eval"},
                     {"created_at", format_rfc3339(started)},
                     {"finished_at", format_rfc3339(std::chrono::system_clock::now())},
                     {"corpus", corpus_path.string()},
                     {"modes", modes},
                     {"gens", bench.gens},
                     {"repeats", bench.repeats},
                     {"seed", bench.seed},
                     {"loop", to_json(bench.loop)},
                     {"model", session.model_record},
                     {"validator", session.validator_record},
                     {"templates", session.templates_record},
                     {"kb", has_reflex ? json(fs::absolute(kb_path).string()) : json(nullptr)},
                     {"kb_persist_across_repeats", bench.kb_persist_across_repeats},
                     {"kb_size_after_repeat", result.kb_size_after_repeat},
                     {"jobs", bench.jobs},
                     {"fail_fast", bench.fail_fast},
                     {"records", result.records.size()},
                     {"tool_versions", tool_versions()}};
    write_file_atomic(out_dir / "manifest.json", manifest.dump(2) + "\n");

    out << render_markdown_report(rows, deltas);
    std::size_t failures = 0;
    for (const auto& r : result.records)
        failures += r.error.empty() ? 0 : 1;
    if (failures)
        err << failures << " trial(s) recorded a provider or tool failure; see records.jsonl\n";
    err << "wrote " << result.records.size() << " records to " << out_dir.string() << "\n";
    return kExitOk;
}

// ---- kb ----

int cmd_kb_list(const std::string& kb_path, const std::string& format, std::ostream& out) {
    KnowledgeBase kb;
    load_kb_if_present(kb, kb_path);
    const auto entries = kb.entries();
    if (format == "jsonl") {
        out << kb.serialize();
        return kExitOk;
    }
    out << entries.size() << (entries.size() == 1 ? " entry" : " entries") << "\n";
    for (const auto& e : entries) {
        std::string tags;
        for (const auto& t : e.cwe_tags)
            tags += (tags.empty() ? "" : ",") + t;
        auto insight = e.insight.substr(0, e.insight.find('\n'));
        if (insight.size() > 72)
            insight = insight.substr(0, 69) + "...";
        out << e.id.substr(0, 12) << "  uses=" << e.use_count << "  "
            << (tags.empty() ? "-" : tags) << "  " << e.created_at << "  " << insight << "\n";
    }
    return kExitOk;
}

int cmd_kb_export(const std::string& kb_path, const std::string& dest, std::ostream& out) {
    KnowledgeBase kb;
    load_kb_if_present(kb, kb_path);
    if (dest.empty() || dest == "-")
        out << kb.serialize();
    else
        kb.persist(dest);
    return kExitOk;
}

int cmd_kb_import(const std::string& kb_path, const std::string& source, std::ostream& out) {
    const auto incoming = parse_kb_text(read_file(source));
    KnowledgeBase kb;
    load_kb_if_present(kb, kb_path);
    const auto added = kb.import_entries(incoming);
    kb.persist(kb_path);
    out << "imported " << added << " of " << incoming.size() << " entries\n";
    return kExitOk;
}

int cmd_kb_clear(const std::string& kb_path, bool yes, std::istream& in, std::ostream& out) {
    KnowledgeBase kb;
    load_kb_if_present(kb, kb_path);
    if (!yes) {
        out << "Remove all " << kb.size() << " entries from " << kb_path << "? [y/N] " << std::flush;
        std::string answer;
        std::getline(in, answer);
        answer = trim(answer);
        if (answer != "y" && answer != "Y" && answer != "yes") {
            out << "aborted\n";
            return kExitOk;
        }
    }
    kb.clear();
    kb.persist(kb_path);
    out << "cleared\n";
    return kExitOk;
}

// ---- analyze ----

int cmd_analyze(const std::string& file, const std::string& lang, bool external,
                const std::string& analyzer_cmd, const std::string& rules_path,
                const std::string& format, std::ostream& out, std::ostream& err) {
    const auto language = parse_language(lang);
    const auto code = read_file(file);
    SarifParseResult result;
    if (external) {
        if (analyzer_cmd.empty())
            throw UsageError("--external needs --external-analyzer");
        result = run_external_analyzer({analyzer_cmd}, language, code);
    } else if (!rules_path.empty()) {
        result.findings = heuristic_scan(language, code, RulePack::load(rules_path));
    } else {
        result.findings = heuristic_scan(language, code);
    }
    for (const auto& w : result.warnings)
        err << "warning: " << w << "\n";

    if (format == "jsonl") {
        for (const auto& f : result.findings)
            out << json{{"rule_id", f.rule_id},
                        {"cwe", f.cwe ? json(*f.cwe) : json(nullptr)},
                        {"severity", std::string(to_string(f.severity))},
                        {"start_line", f.span.start_line},
                        {"end_line", f.span.end_line},
                        {"message", f.message}}
                       .dump()
                << "\n";
        return kExitOk;
    }
    if (result.findings.empty()) {
        out << "no findings\n";
        return kExitOk;
    }
    for (const auto& f : result.findings)
        out << file << ":" << f.span.start_line << "  " << to_string(f.severity) << "  "
            << f.cwe.value_or("-") << "  " << f.rule_id << "  " << f.message << "\n";
    out << result.findings.size() << (result.findings.size() == 1 ? " finding" : " findings")
        << "\n";
    return kExitOk;
}

} // namespace

int run_cli(const std::vector<std::string>& args, std::istream& in, std::ostream& out,
            std::ostream& err) {
    CLI::App app{"Secure code generation with self-assessment, retrieval and reflective repair",
                 "secreflect"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    GenOptions gen;
    auto* gen_cmd = app.add_subcommand("gen", "Run the repair loop on one task");
    gen_cmd->add_option("--task-file", gen.task_file, "Task JSON or scenario folder")
        ->required()
        ->check(CLI::ExistingPath);
    gen_cmd->add_option("--mode", gen.mode, "reflex (default) or base");
    gen_cmd->add_option("--out", gen.out_file, "Write the final code here instead of stdout");
    gen_cmd->add_option("--trace-out", gen.trace_out, "Write the loop trace (JSONL)");
    gen_cmd->add_option("--manifest-out", gen.manifest_out, "Write the run manifest here");
    add_common(*gen_cmd, gen.common);

    EvalOptions eval;
    auto* eval_cmd = app.add_subcommand("eval", "Run the base vs. reflex benchmark");
    eval_cmd->add_option("--corpus", eval.corpus, "Corpus directory")->check(CLI::ExistingDirectory);
    eval_cmd->add_option("--modes", eval.modes, "Comma-separated: base,reflex");
    eval_cmd->add_option("--gens", eval.gens, "Generations per scenario (N)")->check(CLI::PositiveNumber);
    eval_cmd->add_option("--repeats", eval.repeats, "Repeated experiments (R)")->check(CLI::PositiveNumber);
    eval_cmd->add_option("--out", eval.out_dir, "Output directory");
    eval_cmd->add_flag("--kb-persist-across-repeats", eval.kb_persist,
                       "Keep knowledge between repeats instead of clearing it");
    eval_cmd->add_option("--jobs", eval.jobs, "Parallel base-mode scenarios")->check(CLI::PositiveNumber);
    eval_cmd->add_flag("--fail-fast", eval.fail_fast, "Abort on the first provider/tool failure");
    eval_cmd->add_option("--manifest", eval.manifest, "Replay the settings of a previous manifest.json")
        ->check(CLI::ExistingFile);
    add_common(*eval_cmd, eval.common);

    std::string kb_path;
    std::string kb_format = "table";
    std::string kb_file;
    bool kb_yes = false;
    auto* kb_cmd = app.add_subcommand("kb", "Inspect or edit a knowledge base file");
    kb_cmd->require_subcommand(1);
    auto* kb_list = kb_cmd->add_subcommand("list", "List entries");
    kb_list->add_option("--kb", kb_path, "Knowledge base file")->required();
    kb_list->add_option("--format", kb_format, "table or jsonl")
        ->check(CLI::IsMember({"table", "jsonl"}));
    auto* kb_export = kb_cmd->add_subcommand("export", "Write entries to a file or stdout");
    kb_export->add_option("--kb", kb_path, "Knowledge base file")->required();
    kb_export->add_option("--out", kb_file, "Destination (default stdout)");
    auto* kb_import = kb_cmd->add_subcommand("import", "Merge entries from another KB file");
    kb_import->add_option("--kb", kb_path, "Knowledge base file")->required();
    kb_import->add_option("--file", kb_file, "KB file to import")->required()->check(CLI::ExistingFile);
    auto* kb_clear = kb_cmd->add_subcommand("clear", "Remove every entry");
    kb_clear->add_option("--kb", kb_path, "Knowledge base file")->required();
    kb_clear->add_flag("--yes", kb_yes, "Do not ask for confirmation");

    std::string analyze_file;
    std::string analyze_lang;
    bool analyze_external = false;
    std::string analyze_cmd;
    std::string analyze_rules;
    std::string analyze_format = "table";
    auto* analyze = app.add_subcommand("analyze", "Scan one source file for weaknesses");
    analyze->add_option("--file", analyze_file, "Source file")->required()->check(CLI::ExistingFile);
    analyze->add_option("--lang", analyze_lang, "python or c_cpp")->required();
    analyze->add_flag("--external", analyze_external, "Use the external SARIF analyzer");
    analyze->add_option("--external-analyzer", analyze_cmd,
                        "Analyzer command with {workspace} and {output} placeholders");
    analyze->add_option("--rules", analyze_rules, "Heuristic rules file")->check(CLI::ExistingFile);
    analyze->add_option("--format", analyze_format, "table or jsonl")
        ->check(CLI::IsMember({"table", "jsonl"}));

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::CallForVersion&) {
        out << kVersion << "\n";
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        const CLI::App* failing = &app;
        for (auto* sub : app.get_subcommands())
            failing = sub;
        err << failing->help();
        return kExitUsage;
    }

    return handle_errors(
        [&]() -> int {
            if (*gen_cmd)
                return cmd_gen(gen, *gen_cmd, out, err);
            if (*eval_cmd)
                return cmd_eval(eval, *eval_cmd, out, err);
            if (*kb_list)
                return cmd_kb_list(kb_path, kb_format, out);
            if (*kb_export)
                return cmd_kb_export(kb_path, kb_file, out);
            if (*kb_import)
                return cmd_kb_import(kb_path, kb_file, out);
            if (*kb_clear)
                return cmd_kb_clear(kb_path, kb_yes, in, out);
            if (*analyze)
                return cmd_analyze(analyze_file, analyze_lang, analyze_external, analyze_cmd,
                                   analyze_rules, analyze_format, out, err);
            err << app.help();
            return kExitUsage;
        },
        err);
}

} // namespace secreflect

#include <doctest.h>

#include <cstdlib>
#include <sstream>

#include "secreflect/cli.hpp"
#include "secreflect/harness.hpp"
#include "secreflect/util.hpp"
#include "test_models.hpp"

using namespace secreflect;
using namespace secreflect::testing;
namespace fs = std::filesystem;

namespace {

const fs::path kFixtures = SECREFLECT_TEST_FIXTURES;
const fs::path kSample = fs::path(SECREFLECT_SOURCE_DIR) / "corpus" / "sample";

struct Run {
    int code;
    std::string out;
    std::string err;
};

Run cli(std::vector<std::string> args, const std::string& input = "") {
    std::istringstream in(input);
    std::ostringstream out, err;
    const int code = run_cli(args, in, out, err);
    return {code, out.str(), err.str()};
}

// Records PolicyModel playing the sample corpus so the CLI can replay it.
fs::path record_policy_script(const fs::path& dir, int gens, int repeats, const std::string& modes) {
    const auto corpus = load_corpus(kSample);
    PolicyModel policy(corpus, gens);
    RecordingModel recorder(policy);
    StandardValidator validator({}, RulePack::builtin());
    KnowledgeBase kb;
    BenchmarkConfig cfg;
    cfg.modes = parse_modes(modes);
    cfg.gens = gens;
    cfg.repeats = repeats;
    run_benchmark(corpus, cfg, recorder, validator, &kb);
    const auto path = dir / "script.json";
    write_file_atomic(path, script_to_json(recorder.steps()).dump(1));
    return path;
}

} // namespace

TEST_CASE("gen prints accepted code and exits 0") {
    const auto r = cli({"gen", "--task-file", (kFixtures / "scripts" / "task_ping.json").string(),
                        "--scripted", (kFixtures / "scripts" / "gen_happy.json").string()});
    CHECK(r.code == kExitOk);
    CHECK(r.out.find("subprocess.run([\"ping\"") != std::string::npos);
    CHECK(r.out.find("```") == std::string::npos);
}

TEST_CASE("gen exits 3 when the loop never gets clean, and writes trace and manifest") {
    TempDir dir;
    const auto r = cli({"gen", "--task-file", (kSample / "cwe078_a").string(), "--scripted",
                        (kFixtures / "scripts" / "gen_never_clean.json").string(), "--max-iters",
                        "1", "--out", (dir.path() / "final.py").string(), "--trace-out",
                        (dir.path() / "trace.jsonl").string()});
    CHECK(r.code == kExitNotAccepted);
    CHECK(read_file(dir.path() / "final.py").find("os.system") != std::string::npos);
    const auto trace = read_file(dir.path() / "trace.jsonl");
    CHECK(trace.find("\"event\":\"Exhausted\"") != std::string::npos);
    const auto manifest = nlohmann::json::parse(read_file(dir.path() / "final.py.manifest.json"));
    CHECK(manifest["model"]["kind"] == "scripted");
    CHECK(manifest["loop"]["max_refine_iters"] == 1);
}

TEST_CASE("gen usage errors exit 1 with usage text") {
    auto r = cli({"gen", "--task-file", "/no/such/task.json", "--scripted",
                  (kFixtures / "scripts" / "gen_happy.json").string()});
    CHECK(r.code == kExitUsage);
    CHECK(r.err.find("--task-file") != std::string::npos);
    r = cli({"gen", "--task-file", (kSample / "cwe078_a").string()});
    CHECK(r.code == kExitUsage);
    r = cli({"frobnicate"});
    CHECK(r.code == kExitUsage);
}

TEST_CASE("a script that runs dry is an external failure") {
    const auto r = cli({"gen", "--task-file", (kSample / "cwe078_a").string(), "--scripted",
                        (kFixtures / "scripts" / "gen_never_clean.json").string(), "--max-iters",
                        "3"});
    CHECK(r.code == kExitExternal);
}

TEST_CASE("eval writes the report directory and replays from its manifest") {
    TempDir dir;
    const auto script = record_policy_script(dir.path(), 2, 1, "base,reflex");
    const auto out1 = dir.path() / "run1";
    const auto r = cli({"eval", "--corpus", kSample.string(), "--scripted", script.string(),
                        "--gens", "2", "--repeats", "1", "--out", out1.string()});
    REQUIRE(r.code == kExitOk);
    CHECK(r.out.find("| Pass.Rate |") != std::string::npos);
    for (const char* f : {"report.md", "metrics.csv", "per_cwe.csv", "metrics.json",
                          "manifest.json", "records.jsonl", "kb.jsonl"})
        CHECK(fs::exists(out1 / f));
    const auto records = read_records_jsonl(read_file(out1 / "records.jsonl"));
    CHECK(records.size() == 6 * 2 * 2);

    const auto out2 = dir.path() / "run2";
    const auto replay = cli({"eval", "--manifest", (out1 / "manifest.json").string(), "--out",
                             out2.string()});
    REQUIRE(replay.code == kExitOk);
    CHECK(same_outcomes(records, read_records_jsonl(read_file(out2 / "records.jsonl"))));
}

TEST_CASE("eval rejects unknown modes with exit 1") {
    TempDir dir;
    const auto r = cli({"eval", "--corpus", kSample.string(), "--scripted",
                        (kFixtures / "scripts" / "gen_happy.json").string(), "--modes", "turbo",
                        "--out", (dir.path() / "o").string()});
    CHECK(r.code == kExitUsage);
}

TEST_CASE("kb subcommands") {
    TempDir dir;
    const auto kb = (dir.path() / "kb.jsonl").string();
    auto r = cli({"kb", "list", "--kb", kb});
    CHECK(r.code == kExitOk);
    CHECK(r.out.find("0 entries") != std::string::npos);

    KnowledgeBase store;
    store.update({"t", Language::python, "def f():\n", "", std::nullopt},
                 {"subprocess.run(argv)\n", Phase::refined(1), "t"}, "use argv lists", {"CWE-078"});
    const auto good = dir.path() / "good.jsonl";
    store.persist(good);
    r = cli({"kb", "import", "--kb", kb, "--file", good.string()});
    CHECK(r.code == kExitOk);
    r = cli({"kb", "list", "--kb", kb});
    CHECK(r.out.find("1 entry") != std::string::npos);
    CHECK(r.out.find("CWE-078") != std::string::npos);

    const auto bad = dir.path() / "bad.jsonl";
    write_file_atomic(bad, read_file(good) + "{not json\n");
    r = cli({"kb", "import", "--kb", kb, "--file", bad.string()});
    CHECK(r.code == kExitExternal);
    CHECK(r.err.find("line 2") != std::string::npos);

    r = cli({"kb", "export", "--kb", kb});
    CHECK(r.out == read_file(good));

    r = cli({"kb", "clear", "--kb", kb}, "n\n");
    CHECK(r.out.find("aborted") != std::string::npos);
    CHECK(cli({"kb", "list", "--kb", kb}).out.find("1 entry") != std::string::npos);
    r = cli({"kb", "clear", "--kb", kb}, "y\n");
    CHECK(r.code == kExitOk);
    CHECK(cli({"kb", "list", "--kb", kb}).out.find("0 entries") != std::string::npos);
    store.persist(kb);
    r = cli({"kb", "clear", "--kb", kb, "--yes"});
    CHECK(cli({"kb", "list", "--kb", kb}).out.find("0 entries") != std::string::npos);
}

TEST_CASE("analyze reports heuristic findings") {
    const auto vuln = kFixtures / "scanner" / "01_os_system.vuln.py";
    auto r = cli({"analyze", "--file", vuln.string(), "--lang", "python"});
    CHECK(r.code == kExitOk);
    CHECK(r.out.find("CWE-078") != std::string::npos);
    CHECK(r.out.find("py-shell-os-system") != std::string::npos);
    r = cli({"analyze", "--file", (kFixtures / "scanner" / "01_os_system.fixed.py").string(),
             "--lang", "python"});
    CHECK(r.out.find("no findings") != std::string::npos);
    r = cli({"analyze", "--file", vuln.string(), "--lang", "cobol"});
    CHECK(r.code == kExitUsage);
}

TEST_CASE("the binary itself runs") {
    const auto result = run_process({SECREFLECT_CLI_BINARY, "--version"});
    CHECK(result.exit_code == 0);
    CHECK(result.out.find(kVersion) != std::string::npos);
}

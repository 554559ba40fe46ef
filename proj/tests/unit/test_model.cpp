#include <doctest.h>

#include "secreflect/errors.hpp"
#include "secreflect/model.hpp"
#include "secreflect/util.hpp"

using namespace secreflect;

TEST_CASE("scripted model replies when the guard occurs") {
    ScriptedModel m(std::vector<ScriptStep>{{"TASK", "y0"}});
    CHECK(scripted_model_step(m, "### TASK\nx\n").text == std::optional<std::string>("y0"));
    CHECK(m.remaining() == 0);
}

TEST_CASE("guard mismatch reports the expected guard and prompt prefix") {
    ScriptedModel m(std::vector<ScriptStep>{{"TASK", "y0"}});
    try {
        scripted_model_step(m, "no marker in here");
        FAIL("expected a script error");
    } catch (const ScriptError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("TASK") != std::string::npos);
        CHECK(msg.find("no marker in here") != std::string::npos);
    }
    // A mismatch does not consume the step.
    CHECK(m.position() == 0);
}

TEST_CASE("steps play strictly in order, then the script is exhausted") {
    ScriptedModel m({{"a", "first"}, {"b", "second"}});
    CHECK(*m.complete({"a prompt", {}}).text == "first");
    CHECK(*m.complete({"b prompt", {}}).text == "second");
    CHECK_THROWS_WITH_AS(m.complete({"a prompt", {}}), doctest::Contains("exhausted"), ScriptError);
    m.rewind();
    CHECK(*m.complete({"a", {}}).text == "first");
}

TEST_CASE("fixture json expands repeat blocks in place") {
    const auto j = nlohmann::json::parse(R"({"steps": [
        {"guard": "g", "reply": "start"},
        {"repeat": 2, "steps": [{"guard": "x", "reply": "1"}, {"guard": "y", "reply": "2"}]},
        {"guard": "g", "reply": "end"}]})");
    const auto steps = parse_script(j);
    REQUIRE(steps.size() == 6);
    CHECK(steps[1] == ScriptStep{"x", "1"});
    CHECK(steps[4] == ScriptStep{"y", "2"});
    CHECK(steps[5].reply == "end");
    CHECK(parse_script(script_to_json(steps)) == steps);
    CHECK_THROWS_AS(parse_script(nlohmann::json::parse(R"({"steps": [{"reply": "x"}]})")), UsageError);
}

TEST_CASE("scripted fixtures load from disk") {
    TempDir dir;
    write_file_atomic(dir.path() / "s.json", R"({"steps": [{"guard": "", "reply": "ok"}]})");
    auto m = ScriptedModel::load(dir.path() / "s.json");
    CHECK(*m.complete({"anything", {}}).text == "ok");
}

TEST_CASE("model responses carry text iff not an error") {
    CHECK(ModelResponse::ok("t").text.has_value());
    const auto f = ModelResponse::failure("boom");
    CHECK_FALSE(f.text.has_value());
    CHECK(f.finish_reason == FinishReason::error);
}

#pragma once

// Model adapter contract and the scripted offline test double.

#include <filesystem>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "secreflect/domain.hpp"

namespace secreflect {

enum class FinishReason { stop, length, error };

std::string_view to_string(FinishReason reason);

struct Usage {
    int prompt_tokens = 0;
    int completion_tokens = 0;
};

struct ModelRequest {
    std::string prompt;
    DecodingParams decoding;
};

// text is present iff finish_reason != error.
struct ModelResponse {
    std::optional<std::string> text;
    FinishReason finish_reason = FinishReason::stop;
    Usage usage;
    std::string error_message;

    static ModelResponse ok(std::string text, FinishReason reason = FinishReason::stop,
                            Usage usage = {});
    static ModelResponse failure(std::string message);
};

class Model {
public:
    virtual ~Model() = default;
    virtual ModelResponse complete(const ModelRequest& request) = 0;
    // Whether complete() may be called from several threads at once.
    virtual bool concurrent() const { return false; }
    virtual std::string describe() const = 0;
};

struct ScriptStep {
    std::string guard;
    std::string reply;

    friend bool operator==(const ScriptStep&, const ScriptStep&) = default;
};

// Replays guarded replies strictly in order. Each call consumes one step; the
// step's guard must occur in the prompt.
class ScriptedModel final : public Model {
public:
    explicit ScriptedModel(std::vector<ScriptStep> steps);

    // Fixture JSON: {"steps": [...]} where an item is either
    // {"guard": g, "reply": r} or {"repeat": n, "steps": [...]}; repeats
    // expand in place.
    static ScriptedModel from_json(const nlohmann::json& j);
    static ScriptedModel load(const std::filesystem::path& path);

    ModelResponse complete(const ModelRequest& request) override;
    std::string describe() const override { return "scripted"; }

    const std::vector<ScriptStep>& steps() const noexcept { return steps_; }
    std::size_t position() const;
    std::size_t remaining() const;
    void rewind();

private:
    std::vector<ScriptStep> steps_;
    mutable std::mutex mutex_;
    std::size_t next_ = 0;
};

std::vector<ScriptStep> parse_script(const nlohmann::json& j);
std::vector<ScriptStep> load_script(const std::filesystem::path& path);
nlohmann::json script_to_json(const std::vector<ScriptStep>& steps);

// scripted_model_step: throws ScriptError on guard mismatch or exhaustion.
ModelResponse scripted_model_step(ScriptedModel& model, std::string_view prompt);

} // namespace secreflect

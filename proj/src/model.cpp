#include "secreflect/model.hpp"

#include "secreflect/errors.hpp"
#include "secreflect/util.hpp"

namespace secreflect {

std::string_view to_string(FinishReason reason) {
    switch (reason) {
    case FinishReason::stop:
        return "stop";
    case FinishReason::length:
        return "length";
    case FinishReason::error:
        return "error";
    }
    return "error";
}

ModelResponse ModelResponse::ok(std::string text, FinishReason reason, Usage usage) {
    if (reason == FinishReason::error)
        throw std::invalid_argument("a successful response cannot finish with error");
    return {std::move(text), reason, usage, {}};
}

ModelResponse ModelResponse::failure(std::string message) {
    return {std::nullopt, FinishReason::error, {}, std::move(message)};
}

ScriptedModel::ScriptedModel(std::vector<ScriptStep> steps) : steps_(std::move(steps)) {}

namespace {

void expand(const nlohmann::json& items, std::vector<ScriptStep>& out, const std::string& path) {
    if (!items.is_array())
        throw UsageError("script: " + path + " must be an array");
    for (std::size_t i = 0; i < items.size(); ++i) {
        const auto& item = items[i];
        const auto where = path + "[" + std::to_string(i) + "]";
        if (!item.is_object())
            throw UsageError("script: " + where + " must be an object");
        if (item.contains("repeat")) {
            const auto n = item.at("repeat");
            if (!n.is_number_unsigned())
                throw UsageError("script: " + where + ".repeat must be a nonnegative integer");
            for (std::uint64_t r = 0; r < n.get<std::uint64_t>(); ++r)
                expand(item.value("steps", nlohmann::json::array()), out, where + ".steps");
            continue;
        }
        if (!item.contains("guard") || !item.at("guard").is_string() || !item.contains("reply") ||
            !item.at("reply").is_string())
            throw UsageError("script: " + where + " needs string fields guard and reply");
        out.push_back({item.at("guard").get<std::string>(), item.at("reply").get<std::string>()});
    }
}

} // namespace

std::vector<ScriptStep> parse_script(const nlohmann::json& j) {
    std::vector<ScriptStep> steps;
    if (!j.is_object() || !j.contains("steps"))
        throw UsageError("script: top level must be an object with a steps array");
    expand(j.at("steps"), steps, "steps");
    return steps;
}

std::vector<ScriptStep> load_script(const std::filesystem::path& path) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_file(path));
    } catch (const nlohmann::json::parse_error& e) {
        throw UsageError("script " + path.string() + ": " + e.what());
    }
    return parse_script(j);
}

ScriptedModel ScriptedModel::from_json(const nlohmann::json& j) {
    return ScriptedModel(parse_script(j));
}

ScriptedModel ScriptedModel::load(const std::filesystem::path& path) {
    return ScriptedModel(load_script(path));
}

nlohmann::json script_to_json(const std::vector<ScriptStep>& steps) {
    auto arr = nlohmann::json::array();
    for (const auto& s : steps)
        arr.push_back({{"guard", s.guard}, {"reply", s.reply}});
    return {{"steps", arr}};
}

ModelResponse ScriptedModel::complete(const ModelRequest& request) {
    std::lock_guard lock(mutex_);
    if (next_ >= steps_.size())
        throw ScriptError("scripted model exhausted after " + std::to_string(steps_.size()) +
                          " steps");
    const auto& step = steps_[next_];
    if (request.prompt.find(step.guard) == std::string::npos) {
        const auto prefix = request.prompt.substr(0, 80);
        throw ScriptError("scripted model step " + std::to_string(next_ + 1) + ": expected guard '" +
                          step.guard + "' in prompt starting '" + prefix + "'");
    }
    ++next_;
    const int completion = static_cast<int>(step.reply.size() / 4);
    return ModelResponse::ok(step.reply, FinishReason::stop,
                             {static_cast<int>(request.prompt.size() / 4), completion});
}

std::size_t ScriptedModel::position() const {
    std::lock_guard lock(mutex_);
    return next_;
}

std::size_t ScriptedModel::remaining() const {
    std::lock_guard lock(mutex_);
    return steps_.size() - next_;
}

void ScriptedModel::rewind() {
    std::lock_guard lock(mutex_);
    next_ = 0;
}

ModelResponse scripted_model_step(ScriptedModel& model, std::string_view prompt) {
    return model.complete({std::string(prompt), {}});
}

} // namespace secreflect

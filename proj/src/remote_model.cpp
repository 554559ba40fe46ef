#include "secreflect/remote_model.hpp"

#include <cstdlib>
#include <thread>

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include "secreflect/errors.hpp"
#include "secreflect/util.hpp"

namespace secreflect {

ProviderProfile ProviderProfile::from_json(const nlohmann::json& j) {
    ProviderProfile p;
    try {
        p.name = j.at("name").get<std::string>();
        p.base_url = j.value("base_url", p.base_url);
        p.path = j.value("path", p.path);
        p.model = j.at("model").get<std::string>();
        p.auth_header = j.value("auth_header", p.auth_header);
        p.auth_prefix = j.value("auth_prefix", p.auth_prefix);
        p.model_field = j.value("model_field", p.model_field);
        p.messages_field = j.value("messages_field", p.messages_field);
        p.temperature_field = j.value("temperature_field", p.temperature_field);
        p.max_tokens_field = j.value("max_tokens_field", p.max_tokens_field);
        p.stop_field = j.value("stop_field", p.stop_field);
        p.seed_field = j.value("seed_field", p.seed_field);
        p.text_pointer = j.value("text_pointer", p.text_pointer);
        p.finish_reason_pointer = j.value("finish_reason_pointer", p.finish_reason_pointer);
        p.prompt_tokens_pointer = j.value("prompt_tokens_pointer", p.prompt_tokens_pointer);
        p.completion_tokens_pointer =
            j.value("completion_tokens_pointer", p.completion_tokens_pointer);
    } catch (const nlohmann::json::exception& e) {
        throw UsageError(std::string("invalid provider profile: ") + e.what());
    }
    return p;
}

ProviderProfile ProviderProfile::load(const std::filesystem::path& path) {
    try {
        return from_json(nlohmann::json::parse(read_file(path)));
    } catch (const nlohmann::json::parse_error& e) {
        throw UsageError("provider profile " + path.string() + ": " + e.what());
    }
}

nlohmann::json ProviderProfile::to_json() const {
    return {{"name", name},
            {"base_url", base_url},
            {"path", path},
            {"model", model},
            {"auth_header", auth_header},
            {"auth_prefix", auth_prefix},
            {"model_field", model_field},
            {"messages_field", messages_field},
            {"temperature_field", temperature_field},
            {"max_tokens_field", max_tokens_field},
            {"stop_field", stop_field},
            {"seed_field", seed_field},
            {"text_pointer", text_pointer},
            {"finish_reason_pointer", finish_reason_pointer},
            {"prompt_tokens_pointer", prompt_tokens_pointer},
            {"completion_tokens_pointer", completion_tokens_pointer}};
}

ProviderConfig ProviderConfig::from_environment(ProviderProfile profile) {
    ProviderConfig config{std::move(profile), {}};
    if (const char* url = std::getenv("PROVIDER_BASE_URL"); url && *url)
        config.profile.base_url = url;
    if (const char* key = std::getenv("PROVIDER_API_KEY"); key && *key)
        config.api_key = key;
    if (config.profile.base_url.empty())
        throw UsageError("provider " + config.profile.name +
                         " has no base URL (set PROVIDER_BASE_URL)");
    if (config.api_key.empty())
        throw UsageError("PROVIDER_API_KEY is not set");
    return config;
}

nlohmann::json build_request_body(const ProviderProfile& profile, const std::string& prompt,
                                  const DecodingParams& decoding) {
    nlohmann::json body;
    body[profile.model_field] = profile.model;
    body[profile.messages_field] = nlohmann::json::array({{{"role", "user"}, {"content", prompt}}});
    body[profile.temperature_field] = decoding.temperature;
    body[profile.max_tokens_field] = decoding.max_output_len;
    if (!decoding.stop_sequences.empty() && !profile.stop_field.empty())
        body[profile.stop_field] = decoding.stop_sequences;
    if (!profile.seed_field.empty())
        // Providers take a signed 63-bit seed.
        body[profile.seed_field] = static_cast<std::int64_t>(decoding.seed & 0x7fffffffffffffffULL);
    return body;
}

ModelResponse parse_response_body(const ProviderProfile& profile, const std::string& body) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(body);
    } catch (const nlohmann::json::parse_error&) {
        throw MalformedPayloadError("provider returned a non-JSON body");
    }
    const nlohmann::json::json_pointer text_ptr(profile.text_pointer);
    if (!j.contains(text_ptr) || !j.at(text_ptr).is_string())
        throw MalformedPayloadError("provider response lacks a string at " + profile.text_pointer);

    FinishReason reason = FinishReason::stop;
    if (!profile.finish_reason_pointer.empty()) {
        const nlohmann::json::json_pointer ptr(profile.finish_reason_pointer);
        if (j.contains(ptr) && j.at(ptr).is_string()) {
            const auto r = j.at(ptr).get<std::string>();
            if (r == "length" || r == "max_tokens" || r == "MAX_TOKENS")
                reason = FinishReason::length;
        }
    }
    Usage usage;
    auto read_int = [&](const std::string& pointer) {
        if (pointer.empty())
            return 0;
        const nlohmann::json::json_pointer ptr(pointer);
        return j.contains(ptr) && j.at(ptr).is_number_integer() ? j.at(ptr).get<int>() : 0;
    };
    usage.prompt_tokens = read_int(profile.prompt_tokens_pointer);
    usage.completion_tokens = read_int(profile.completion_tokens_pointer);
    return ModelResponse::ok(j.at(text_ptr).get<std::string>(), reason, usage);
}

namespace {

bool retryable_status(int status) { return status == 408 || status == 429 || status >= 500; }

} // namespace

ModelResponse remote_model_step(const ProviderConfig& config, const std::string& prompt,
                                const DecodingParams& decoding) {
    const auto& profile = config.profile;
    if (profile.base_url.empty())
        throw UsageError("provider base URL is empty");
    if (config.api_key.empty())
        throw UsageError("provider credential is empty");

    httplib::Client client(profile.base_url);
    client.set_connection_timeout(config.timeout);
    client.set_read_timeout(config.timeout);
    client.set_write_timeout(config.timeout);
    const httplib::Headers headers{{profile.auth_header, profile.auth_prefix + config.api_key}};
    const std::string body = build_request_body(profile, prompt, decoding).dump();

    const int attempts = std::max(1, config.max_attempts);
    auto backoff = config.initial_backoff;
    std::string last_problem;
    for (int attempt = 1; attempt <= attempts; ++attempt) {
        auto res = client.Post(profile.path, headers, body, "application/json");
        if (!res) {
            last_problem = "transport error: " + httplib::to_string(res.error());
        } else if (res->status == 401 || res->status == 403) {
            throw AuthError("provider " + profile.name + " rejected the credential (HTTP " +
                            std::to_string(res->status) + ")");
        } else if (res->status >= 200 && res->status < 300) {
            return parse_response_body(profile, res->body);
        } else if (retryable_status(res->status)) {
            last_problem = "HTTP " + std::to_string(res->status);
        } else {
            throw TransportError("provider " + profile.name + " returned HTTP " +
                                 std::to_string(res->status) + ": " + res->body.substr(0, 200));
        }
        if (attempt < attempts) {
            std::this_thread::sleep_for(backoff);
            backoff *= 2;
        }
    }
    throw RetryExhaustedError("provider " + profile.name + " failed after " +
                              std::to_string(attempts) + " attempts (" + last_problem + ")");
}

} // namespace secreflect

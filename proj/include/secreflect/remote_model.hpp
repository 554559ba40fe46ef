#pragma once

// HTTP chat-completion client for hosted models.

#include <chrono>
#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "secreflect/model.hpp"

namespace secreflect {

// Wire layout of one provider, loaded from data/providers/<name>.json.
struct ProviderProfile {
    std::string name;
    std::string base_url;                 // scheme://host[:port]
    std::string path = "/v1/chat/completions";
    std::string model;
    std::string auth_header = "Authorization";
    std::string auth_prefix = "Bearer ";
    std::string model_field = "model";
    std::string messages_field = "messages";
    std::string temperature_field = "temperature";
    std::string max_tokens_field = "max_tokens";
    std::string stop_field = "stop";
    std::string seed_field = "seed";      // empty: provider has no seed
    std::string text_pointer = "/choices/0/message/content";
    std::string finish_reason_pointer = "/choices/0/finish_reason";
    std::string prompt_tokens_pointer = "/usage/prompt_tokens";
    std::string completion_tokens_pointer = "/usage/completion_tokens";

    static ProviderProfile from_json(const nlohmann::json& j);
    static ProviderProfile load(const std::filesystem::path& path);
    nlohmann::json to_json() const;
};

struct ProviderConfig {
    ProviderProfile profile;
    std::string api_key;
    int max_attempts = 3;
    std::chrono::milliseconds initial_backoff{500};
    std::chrono::seconds timeout{120};

    // Applies PROVIDER_API_KEY and PROVIDER_BASE_URL. Throws UsageError when
    // no credential or base URL is available.
    static ProviderConfig from_environment(ProviderProfile profile);
};

// Request body for one prompt under the profile's field names.
nlohmann::json build_request_body(const ProviderProfile& profile, const std::string& prompt,
                                  const DecodingParams& decoding);
// Throws MalformedPayloadError when the text is absent.
ModelResponse parse_response_body(const ProviderProfile& profile, const std::string& body);

// remote_model_step: POSTs one chat request. 429, 408, 5xx and connection
// failures are retried with exponential backoff up to max_attempts; 401 and
// 403 raise AuthError immediately.
ModelResponse remote_model_step(const ProviderConfig& config, const std::string& prompt,
                                const DecodingParams& decoding);

class RemoteModel final : public Model {
public:
    explicit RemoteModel(ProviderConfig config) : config_(std::move(config)) {}

    ModelResponse complete(const ModelRequest& request) override {
        return remote_model_step(config_, request.prompt, request.decoding);
    }
    bool concurrent() const override { return true; }
    std::string describe() const override {
        return config_.profile.name + ":" + config_.profile.model;
    }

private:
    ProviderConfig config_;
};

} // namespace secreflect

#include <doctest.h>

#include <atomic>
#include <thread>

#include <httplib.h>

#include "secreflect/errors.hpp"
#include "secreflect/remote_model.hpp"

using namespace secreflect;
using json = nlohmann::json;

namespace {

// Local HTTP stub on an ephemeral port.
class Stub {
public:
    explicit Stub(std::function<void(const httplib::Request&, httplib::Response&)> handler) {
        server_.Post("/v1/chat/completions", [this, handler](const httplib::Request& req,
                                                             httplib::Response& res) {
            ++requests;
            last_body = req.body;
            last_auth = req.get_header_value("Authorization");
            handler(req, res);
        });
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }
    ~Stub() {
        server_.stop();
        thread_.join();
    }

    ProviderConfig config() const {
        ProviderConfig c;
        c.profile.name = "stub";
        c.profile.base_url = "http://127.0.0.1:" + std::to_string(port_);
        c.profile.model = "stub-model";
        c.api_key = "test-key";
        c.initial_backoff = std::chrono::milliseconds(5);
        c.timeout = std::chrono::seconds(5);
        return c;
    }

    std::atomic<int> requests{0};
    std::string last_body;
    std::string last_auth;

private:
    httplib::Server server_;
    std::thread thread_;
    int port_ = 0;
};

std::string completion(const std::string& text) {
    return json{{"choices", {{{"message", {{"role", "assistant"}, {"content", text}}},
                              {"finish_reason", "stop"}}}},
                {"usage", {{"prompt_tokens", 7}, {"completion_tokens", 3}}}}
        .dump();
}

} // namespace

TEST_CASE("stub returning fixed text yields that text") {
    Stub stub([](const httplib::Request&, httplib::Response& res) {
        res.set_content(completion("print('hi')"), "application/json");
    });
    DecodingParams d;
    d.temperature = 0.3;
    d.max_output_len = 99;
    d.seed = 5;
    const auto r = remote_model_step(stub.config(), "PROMPT", d);
    CHECK(r.text == std::optional<std::string>("print('hi')"));
    CHECK(r.finish_reason == FinishReason::stop);
    CHECK(r.usage.prompt_tokens == 7);
    CHECK(stub.requests == 1);
    CHECK(stub.last_auth == "Bearer test-key");

    const auto body = json::parse(stub.last_body);
    CHECK(body["model"] == "stub-model");
    CHECK(body["messages"].size() == 1);
    CHECK(body["messages"][0]["role"] == "user");
    CHECK(body["messages"][0]["content"] == "PROMPT");
    CHECK(body["temperature"] == doctest::Approx(0.3));
    CHECK(body["max_tokens"] == 99);
    CHECK(body["seed"] == 5);
}

TEST_CASE("429 twice then 200 succeeds on the third attempt") {
    std::atomic<int> calls{0};
    Stub stub([&](const httplib::Request&, httplib::Response& res) {
        if (++calls <= 2) {
            res.status = 429;
            res.set_content("slow down", "text/plain");
            return;
        }
        res.set_content(completion("done"), "application/json");
    });
    const auto r = remote_model_step(stub.config(), "p", {});
    CHECK(*r.text == "done");
    CHECK(stub.requests == 3);
}

TEST_CASE("persistent 503 exhausts the three attempts") {
    Stub stub([](const httplib::Request&, httplib::Response& res) { res.status = 503; });
    CHECK_THROWS_AS(remote_model_step(stub.config(), "p", {}), RetryExhaustedError);
    CHECK(stub.requests == 3);
}

TEST_CASE("401 is an auth error and is not retried") {
    Stub stub([](const httplib::Request&, httplib::Response& res) { res.status = 401; });
    CHECK_THROWS_AS(remote_model_step(stub.config(), "p", {}), AuthError);
    CHECK(stub.requests == 1);
}

TEST_CASE("payload without completion text is malformed") {
    Stub stub([](const httplib::Request&, httplib::Response& res) {
        res.set_content(R"({"choices": []})", "application/json");
    });
    CHECK_THROWS_AS(remote_model_step(stub.config(), "p", {}), MalformedPayloadError);
    Stub garbage([](const httplib::Request&, httplib::Response& res) {
        res.set_content("<html>", "text/html");
    });
    CHECK_THROWS_AS(remote_model_step(garbage.config(), "p", {}), MalformedPayloadError);
}

TEST_CASE("unreachable endpoint is a transport failure after retries") {
    ProviderConfig c;
    c.profile.base_url = "http://127.0.0.1:1";
    c.profile.model = "m";
    c.api_key = "k";
    c.initial_backoff = std::chrono::milliseconds(1);
    c.timeout = std::chrono::seconds(1);
    CHECK_THROWS_AS(remote_model_step(c, "p", {}), TransportError);
}

TEST_CASE("shipped provider profiles load") {
    const auto dir = std::filesystem::path(SECREFLECT_SOURCE_DIR) / "data" / "providers";
    for (const char* name : {"openai.json", "gemini.json", "qwen.json"}) {
        const auto p = ProviderProfile::load(dir / name);
        CHECK_FALSE(p.base_url.empty());
        CHECK_FALSE(p.model.empty());
        CHECK(ProviderProfile::from_json(p.to_json()).to_json() == p.to_json());
    }
}

TEST_CASE("provider config requires a credential") {
    ProviderProfile p;
    p.base_url = "http://127.0.0.1:9";
    unsetenv("PROVIDER_API_KEY");
    CHECK_THROWS_AS(ProviderConfig::from_environment(p), UsageError);
    setenv("PROVIDER_API_KEY", "abc", 1);
    setenv("PROVIDER_BASE_URL", "http://example.invalid", 1);
    const auto c = ProviderConfig::from_environment(p);
    CHECK(c.api_key == "abc");
    CHECK(c.profile.base_url == "http://example.invalid");
    unsetenv("PROVIDER_API_KEY");
    unsetenv("PROVIDER_BASE_URL");
}

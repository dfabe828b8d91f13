#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include <cstdlib>

#include <json.hpp>

#include "tmeval/error.hpp"
#include "tmeval/judge.hpp"

namespace tmeval {

using nlohmann::json;

ChatCompletionsClient::ChatCompletionsClient(Options options) : options_(std::move(options)) {
    if (options_.base_url.empty()) options_.base_url = Options{}.base_url;
}

std::unique_ptr<ChatCompletionsClient> ChatCompletionsClient::from_environment(const std::string& env_var,
                                                                               const std::string& base_url) {
    const char* key = std::getenv(env_var.c_str());
    if (!key || !*key) throw InvalidArgument("environment variable " + env_var + " is not set");
    Options options;
    options.api_key = key;
    if (!base_url.empty()) options.base_url = base_url;
    return std::make_unique<ChatCompletionsClient>(std::move(options));
}

std::string ChatCompletionsClient::complete(const RenderedPrompt& prompt, const QueryOptions& query) {
    httplib::Client client(options_.base_url);
    client.set_connection_timeout(options_.timeout);
    client.set_read_timeout(options_.timeout);
    client.set_write_timeout(options_.timeout);

    const json body = {{"model", query.model_id},
                       {"temperature", query.temperature},
                       {"messages",
                        {{{"role", "system"}, {"content", prompt.system}}, {{"role", "user"}, {"content", prompt.user}}}}};
    httplib::Headers headers;
    if (!options_.api_key.empty()) headers.emplace("Authorization", "Bearer " + options_.api_key);

    auto result = client.Post(options_.path, headers, body.dump(), "application/json");
    if (!result) {
        throw TransportError("request to " + options_.base_url + " failed: " + httplib::to_string(result.error()), 1, 0);
    }
    const int status = result->status;
    if (status == 429 || status >= 500) {
        throw TransportError("server returned HTTP " + std::to_string(status), 1, 0);
    }
    if (status != 200) {
        throw TransportError("server returned HTTP " + std::to_string(status) + ": " + result->body, 1, 0, false);
    }
    try {
        const auto reply = json::parse(result->body);
        return reply.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const json::exception& e) {
        throw TransportError(std::string("malformed completion response: ") + e.what(), 1, 0, false);
    }
}

}  // namespace tmeval

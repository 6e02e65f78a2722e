#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include "ape/http_backend.hpp"

#include "ape/errors.hpp"

#include <nlohmann/json.hpp>

#include <chrono>
#include <cstdlib>
#include <iostream>
#include <thread>

namespace ape {

using nlohmann::json;

namespace {

/// Splits "scheme://host[:port]/path" into the client base and the path.
std::pair<std::string, std::string> split_endpoint(const std::string& endpoint) {
    auto scheme_end = endpoint.find("://");
    if (scheme_end == std::string::npos)
        throw ConfigError("endpoint must include a scheme: " + endpoint);
    auto path_start = endpoint.find('/', scheme_end + 3);
    if (path_start == std::string::npos) return {endpoint, "/"};
    return {endpoint.substr(0, path_start), endpoint.substr(path_start)};
}

bool retryable_status(int status) { return status == 429 || status >= 500; }

} // namespace

HttpBackend::HttpBackend(HttpBackendConfig config, std::shared_ptr<BudgetLedger> ledger)
    : config_(std::move(config)),
      ledger_(ledger ? std::move(ledger) : std::make_shared<BudgetLedger>()) {
    std::tie(host_, path_) = split_endpoint(config_.endpoint);
    if (const char* token = std::getenv(config_.api_key_env.c_str())) {
        auth_token_ = token;
    } else if (config_.require_auth) {
        throw ConfigError("API credentials missing: environment variable '" +
                          config_.api_key_env + "' is not set");
    }
}

std::string HttpBackend::post_with_retries(const std::string& body) {
    std::string last_error;
    for (int attempt = 1; attempt <= config_.max_attempts; ++attempt) {
        if (attempt > 1) {
            auto delay = std::chrono::milliseconds(config_.backoff_base_ms << (attempt - 2));
            std::this_thread::sleep_for(delay);
        }
        httplib::Client client(host_);
        client.set_connection_timeout(config_.timeout_seconds);
        client.set_read_timeout(config_.timeout_seconds);
        httplib::Headers headers;
        if (!auth_token_.empty()) headers.emplace("Authorization", "Bearer " + auth_token_);

        auto res = client.Post(path_, headers, body, "application/json");
        if (!res) {
            last_error = "transport failure: " + httplib::to_string(res.error());
            continue;
        }
        if (res->status == 200) return res->body;
        if (retryable_status(res->status)) {
            last_error = "HTTP " + std::to_string(res->status);
            continue;
        }
        throw DomainError("backend '" + spec().name + "' rejected request: HTTP " +
                          std::to_string(res->status) + " " + res->body);
    }
    throw TransportError("backend '" + spec().name + "': " + last_error, config_.max_attempts);
}

GenerationResult HttpBackend::complete(const GenerationRequest& request) {
    require_capability(Capability::Complete);
    check_complete_request(request);

    json body;
    body["model"] = spec().name;
    body["prompt"] = request.prompt.prefix;
    body["n"] = request.n;
    body["temperature"] = request.temperature;
    body["max_tokens"] = request.max_tokens;
    if (!request.stop_sequences.empty()) body["stop"] = request.stop_sequences;

    json reply;
    try {
        reply = json::parse(post_with_retries(body.dump()));
    } catch (const json::exception& e) {
        throw DomainError(std::string("malformed backend response: ") + e.what());
    }

    GenerationResult result;
    try {
        for (const auto& choice : reply.at("choices"))
            result.texts.push_back(choice.at("text").get<std::string>());
        if (reply.contains("usage")) {
            result.usage.prompt_tokens = reply["usage"].value("prompt_tokens", 0L);
            result.usage.completion_tokens = reply["usage"].value("completion_tokens", 0L);
        }
    } catch (const json::exception& e) {
        throw DomainError(std::string("unexpected backend response shape: ") + e.what());
    }
    ledger_->charge(spec().name, result.usage.prompt_tokens, result.usage.completion_tokens);
    return result;
}

GenerationResult HttpBackend::infill(const GenerationRequest& request) {
    require_capability(Capability::Infill);
    check_infill_request(request);

    json body;
    body["model"] = spec().name;
    body["prompt"] = request.prompt.prefix;
    body["suffix"] = *request.prompt.suffix;
    body["n"] = request.n;
    body["temperature"] = request.temperature;
    body["max_tokens"] = request.max_tokens;
    if (!request.stop_sequences.empty()) body["stop"] = request.stop_sequences;

    json reply;
    try {
        reply = json::parse(post_with_retries(body.dump()));
    } catch (const json::exception& e) {
        throw DomainError(std::string("malformed backend response: ") + e.what());
    }

    GenerationResult result;
    try {
        for (const auto& choice : reply.at("choices"))
            result.texts.push_back(choice.at("text").get<std::string>());
        if (reply.contains("usage")) {
            result.usage.prompt_tokens = reply["usage"].value("prompt_tokens", 0L);
            result.usage.completion_tokens = reply["usage"].value("completion_tokens", 0L);
        }
    } catch (const json::exception& e) {
        throw DomainError(std::string("unexpected backend response shape: ") + e.what());
    }
    ledger_->charge(spec().name, result.usage.prompt_tokens, result.usage.completion_tokens);
    return result;
}

double HttpBackend::logprob(const RenderedPrompt& prompt, const std::string& continuation) {
    require_capability(Capability::Logprob);
    if (continuation.empty()) throw DomainError("logprob requires a non-empty continuation");
    if (prompt.suffix)
        throw ConfigError("remote logprob does not support infill-style prompts");

    // Echo mode: score the continuation tokens of prompt+continuation.
    json body;
    body["model"] = spec().name;
    body["prompt"] = prompt.prefix + continuation;
    body["n"] = 1;
    body["temperature"] = 0.0;
    body["max_tokens"] = 0;
    body["logprobs"] = 0;
    body["echo"] = true;

    json reply;
    try {
        reply = json::parse(post_with_retries(body.dump()));
    } catch (const json::exception& e) {
        throw DomainError(std::string("malformed backend response: ") + e.what());
    }

    double total = 0.0;
    try {
        const auto& lp = reply.at("choices").at(0).at("logprobs");
        const auto& token_logprobs = lp.at("token_logprobs");
        const auto& offsets = lp.at("text_offset");
        const auto boundary = static_cast<long>(prompt.prefix.size());
        for (size_t i = 0; i < token_logprobs.size() && i < offsets.size(); ++i) {
            if (offsets[i].get<long>() < boundary) continue;
            if (token_logprobs[i].is_null()) continue;
            total += token_logprobs[i].get<double>();
        }
        long pt = 0;
        if (reply.contains("usage")) pt = reply["usage"].value("prompt_tokens", 0L);
        ledger_->charge(spec().name, pt, 0);
    } catch (const json::exception& e) {
        throw DomainError(std::string("unexpected logprob response shape: ") + e.what());
    }
    return total;
}

} // namespace ape

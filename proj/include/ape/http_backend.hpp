#pragma once

#include "ape/backend.hpp"

#include <memory>
#include <string>

namespace ape {

/// Wire settings for a plain JSON completion API.
///
/// Request body:  {"model", "prompt", "suffix"?, "n", "temperature",
///                 "max_tokens", "stop"?}  (+ {"logprobs":0, "echo":true}
///                 for logprob calls)
/// Response body: {"choices":[{"text", "logprobs":{"token_logprobs",
///                 "text_offset"}}], "usage":{"prompt_tokens",
///                 "completion_tokens"}}
struct HttpBackendConfig {
    std::string endpoint;                  // e.g. https://host[:port]/v1/completions
    std::string api_key_env = "APE_API_KEY"; // bearer token read from this env var
    int timeout_seconds = 60;
    int max_attempts = 3;                  // retried on transport/429/5xx only
    int backoff_base_ms = 500;             // doubles per attempt
    bool require_auth = true;              // fail fast when the env var is unset
    ModelSpec spec;                        // name, capabilities, pricing
};

/// Remote completion-API client. Retries transport-class failures with
/// exponential backoff; anything else surfaces immediately.
class HttpBackend : public ModelBackend {
public:
    HttpBackend(HttpBackendConfig config, std::shared_ptr<BudgetLedger> ledger = nullptr);

    const ModelSpec& spec() const override { return config_.spec; }
    GenerationResult complete(const GenerationRequest& request) override;
    GenerationResult infill(const GenerationRequest& request) override;
    double logprob(const RenderedPrompt& prompt, const std::string& continuation) override;

    std::shared_ptr<BudgetLedger> ledger_ptr() { return ledger_; }

private:
    std::string post_with_retries(const std::string& body);

    HttpBackendConfig config_;
    std::string host_;
    std::string path_;
    std::string auth_token_;
    std::shared_ptr<BudgetLedger> ledger_;
};

} // namespace ape

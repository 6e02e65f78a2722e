#pragma once

#include "ape/core.hpp"
#include "ape/templates.hpp"

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace ape {

enum class Capability { Complete, Infill, Logprob };

Capability capability_from_string(const std::string& s);
std::string to_string(Capability c);

/// What a model can do and what it costs (USD per 1000 tokens).
struct ModelSpec {
    std::string name;
    std::set<Capability> capabilities;
    double price_per_1k_prompt = 0.0;
    double price_per_1k_completion = 0.0;
    int max_completion_tokens = 256;
};

struct GenerationRequest {
    RenderedPrompt prompt;
    int n = 1;
    double temperature = 1.0;
    int max_tokens = 50;
    std::vector<std::string> stop_sequences;
    std::optional<std::uint64_t> seed; // honored only by the mock
};

struct TokenUsage {
    long prompt_tokens = 0;
    long completion_tokens = 0;
};

struct GenerationResult {
    std::vector<std::string> texts;
    TokenUsage usage;
    bool cached = false;
};

/// Uniform model interface: forward completion, infill completion, and
/// log probability of a continuation. Implementations must be safe for
/// concurrent requests; ledger updates are atomic per request.
class ModelBackend {
public:
    virtual ~ModelBackend() = default;

    virtual const ModelSpec& spec() const = 0;

    /// n sampled continuations of prompt.prefix; request must not carry a
    /// suffix. Truncated at stop sequences / max_tokens. Charges the ledger.
    virtual GenerationResult complete(const GenerationRequest& request) = 0;

    /// As complete, but fills the gap between prefix and suffix.
    virtual GenerationResult infill(const GenerationRequest& request) = 0;

    /// log P(continuation | prompt), always <= 0.
    virtual double logprob(const RenderedPrompt& prompt, const std::string& continuation) = 0;

    bool has_capability(Capability c) const { return spec().capabilities.count(c) > 0; }

protected:
    void require_capability(Capability c) const;
    static void check_complete_request(const GenerationRequest& request);
    static void check_infill_request(const GenerationRequest& request);
};

/// Per-model and total spend for a ledger snapshot. Every model named in
/// the snapshot must have a spec; missing ones are reported together.
struct CostReport {
    std::map<std::string, double> per_model;
    double total = 0.0;
};

CostReport cost_report(const BudgetLedger::Snapshot& ledger, const std::vector<ModelSpec>& specs);

/// Parses a JSON pricing file: a list of ModelSpec objects.
std::vector<ModelSpec> load_model_specs(const std::string& path);

} // namespace ape

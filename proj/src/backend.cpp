#include "ape/backend.hpp"

#include "ape/errors.hpp"

#include <nlohmann/json.hpp>

#include <fstream>
#include <sstream>

namespace ape {

Capability capability_from_string(const std::string& s) {
    if (s == "complete") return Capability::Complete;
    if (s == "infill") return Capability::Infill;
    if (s == "logprob") return Capability::Logprob;
    throw ConfigError("unknown capability: '" + s + "'");
}

std::string to_string(Capability c) {
    switch (c) {
        case Capability::Complete: return "complete";
        case Capability::Infill: return "infill";
        case Capability::Logprob: return "logprob";
    }
    return "complete";
}

void ModelBackend::require_capability(Capability c) const {
    if (!has_capability(c))
        throw ConfigError("backend '" + spec().name + "' lacks required capability '" +
                          to_string(c) + "'");
}

void ModelBackend::check_complete_request(const GenerationRequest& request) {
    if (request.n <= 0) throw DomainError("generation request needs n >= 1");
    if (request.max_tokens <= 0) throw DomainError("generation request needs max_tokens >= 1");
    if (request.temperature < 0) throw DomainError("temperature must be non-negative");
    if (request.prompt.suffix)
        throw DomainError("complete() does not take a suffix; use infill()");
}

void ModelBackend::check_infill_request(const GenerationRequest& request) {
    if (request.n <= 0) throw DomainError("generation request needs n >= 1");
    if (request.max_tokens <= 0) throw DomainError("generation request needs max_tokens >= 1");
    if (request.temperature < 0) throw DomainError("temperature must be non-negative");
    if (!request.prompt.suffix || request.prompt.suffix->empty())
        throw DomainError("infill() requires a non-empty suffix; use complete()");
}

CostReport cost_report(const BudgetLedger::Snapshot& ledger, const std::vector<ModelSpec>& specs) {
    std::map<std::string, const ModelSpec*> by_name;
    for (const auto& s : specs) by_name[s.name] = &s;

    std::string missing;
    for (const auto& [model, usage] : ledger.per_model) {
        (void)usage;
        if (!by_name.count(model)) missing += (missing.empty() ? "" : ", ") + model;
    }
    if (!missing.empty()) throw ConfigError("no pricing spec for model(s): " + missing);

    CostReport report;
    for (const auto& [model, usage] : ledger.per_model) {
        const ModelSpec& s = *by_name[model];
        double cost = usage.prompt_tokens / 1000.0 * s.price_per_1k_prompt +
                      usage.completion_tokens / 1000.0 * s.price_per_1k_completion;
        report.per_model[model] = cost;
        report.total += cost;
    }
    return report;
}

std::vector<ModelSpec> load_model_specs(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open pricing file: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("pricing file " + path + ": " + e.what());
    }
    if (!j.is_array()) throw ConfigError("pricing file " + path + " must be a JSON list");

    std::vector<ModelSpec> specs;
    for (const auto& item : j) {
        ModelSpec s;
        s.name = item.at("name").get<std::string>();
        for (const auto& c : item.value("capabilities", nlohmann::json::array()))
            s.capabilities.insert(capability_from_string(c.get<std::string>()));
        if (s.capabilities.empty()) s.capabilities = {Capability::Complete};
        s.price_per_1k_prompt = item.value("price_per_1k_prompt", 0.0);
        s.price_per_1k_completion = item.value("price_per_1k_completion", 0.0);
        s.max_completion_tokens = item.value("max_completion_tokens", 256);
        if (s.price_per_1k_prompt < 0 || s.price_per_1k_completion < 0)
            throw ConfigError("negative price for model '" + s.name + "'");
        specs.push_back(std::move(s));
    }
    return specs;
}

} // namespace ape

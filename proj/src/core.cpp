#include "ape/core.hpp"

#include "ape/errors.hpp"
#include "ape/text.hpp"

#include <set>

namespace ape {

MatchMode match_mode_from_string(const std::string& s) {
    if (s == "exact") return MatchMode::Exact;
    if (s == "set") return MatchMode::Set;
    if (s == "contains") return MatchMode::Contains;
    throw ConfigError("unknown match_mode: '" + s + "' (expected exact|set|contains)");
}

std::string to_string(MatchMode m) {
    switch (m) {
        case MatchMode::Exact: return "exact";
        case MatchMode::Set: return "set";
        case MatchMode::Contains: return "contains";
    }
    return "exact";
}

ProposalMode proposal_mode_from_string(const std::string& s) {
    if (s == "forward") return ProposalMode::Forward;
    if (s == "reverse") return ProposalMode::Reverse;
    if (s == "custom") return ProposalMode::Custom;
    if (s == "resample") return ProposalMode::Resample;
    throw ConfigError("unknown proposal mode: '" + s + "'");
}

std::string to_string(ProposalMode m) {
    switch (m) {
        case ProposalMode::Forward: return "forward";
        case ProposalMode::Reverse: return "reverse";
        case ProposalMode::Custom: return "custom";
        case ProposalMode::Resample: return "resample";
    }
    return "forward";
}

std::vector<std::string> validate_task(const TaskSpec& spec) {
    std::vector<std::string> violations;
    if (spec.name.empty()) violations.push_back("task name is empty");
    if (spec.train.empty()) violations.push_back("train split is empty");

    std::set<std::string> seen;
    auto check_demo = [&](const Demonstration& d, const char* split) {
        if (d.id.empty()) {
            violations.push_back(std::string("missing demo id in ") + split);
            return;
        }
        if (!seen.insert(d.id).second)
            violations.push_back("duplicate id: " + d.id);
        if (d.gold_outputs.empty())
            violations.push_back("no gold outputs: " + d.id);
        for (const auto& g : d.gold_outputs)
            if (trim(g).empty()) violations.push_back("empty gold output: " + d.id);
    };
    for (const auto& d : spec.train) check_demo(d, "train");
    for (const auto& d : spec.test) check_demo(d, "test");
    return violations;
}

std::string instruction_id(const std::string& text) {
    return fnv1a64_hex(fold_case(normalize_text(text)));
}

Instruction Instruction::make(std::string text, Provenance provenance) {
    if (trim(text).empty()) throw DomainError("instruction text is empty");
    if (provenance.mode == ProposalMode::Resample) {
        if (!provenance.parent_id) throw DomainError("resample instruction requires parent_id");
        if (provenance.round < 1) throw DomainError("resample instruction requires round >= 1");
    } else if (provenance.round != 0) {
        throw DomainError("non-resample instruction requires round == 0");
    }
    Instruction ins;
    ins.id = instruction_id(text);
    ins.text = std::move(text);
    ins.provenance = std::move(provenance);
    return ins;
}

void ScoreEstimate::add(const std::string& demo_id, double score) {
    if (!evaluated_demo_ids.insert(demo_id).second)
        throw DomainError("demo scored twice for one estimate: " + demo_id);
    sum += score;
    count += 1;
}

double ScoreEstimate::mean() const {
    if (count == 0) throw DomainError("score estimate has no samples");
    return sum / count;
}

void BudgetLedger::charge(const std::string& model, long prompt_tokens, long completion_tokens) {
    std::lock_guard<std::mutex> lock(mu_);
    state_.prompt_tokens += prompt_tokens;
    state_.completion_tokens += completion_tokens;
    state_.calls += 1;
    auto& m = state_.per_model[model];
    m.prompt_tokens += prompt_tokens;
    m.completion_tokens += completion_tokens;
    m.calls += 1;
}

BudgetLedger::Snapshot BudgetLedger::snapshot() const {
    std::lock_guard<std::mutex> lock(mu_);
    return state_;
}

} // namespace ape

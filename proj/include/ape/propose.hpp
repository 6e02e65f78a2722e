#pragma once

#include "ape/backend.hpp"
#include "ape/core.hpp"
#include "ape/templates.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace ape {

struct ProposalConfig {
    ProposalMode mode = ProposalMode::Forward;
    int num_candidates = 50;   // m
    int demos_per_prompt = 5;
    int num_prompt_groups = 0; // 0 = auto: ceil(m / 10)
    std::uint64_t seed = 0;
    double temperature = 1.0;
    int max_tokens = 50;
    /// Template for custom mode (defaults to the TruthfulQA-style insert
    /// prompt); forward/reverse modes pick their canonical template.
    TemplateName custom_template = TemplateName::ReverseGen2;

    int effective_groups() const {
        if (num_prompt_groups > 0) return num_prompt_groups;
        return (num_candidates + 9) / 10;
    }
};

/// Seeded demo-id groups for proposal prompts: each group draws
/// demos_per_prompt train demos without replacement; groups may overlap.
std::vector<std::vector<std::string>> sample_demo_groups(std::span<const Demonstration> train,
                                                         const ProposalConfig& config);

/// Builds the initial candidate set U: spreads generation requests evenly
/// over the demo groups, over-generates by 25% to survive deduplication,
/// dedups by case-folded normalized text, and truncates to m. Returned
/// candidates are sorted by id.
std::vector<Instruction> propose(const TaskSpec& task, const ProposalConfig& config,
                                 const TemplateSet& templates, ModelBackend& backend);

/// Generates variants of high-scoring parents via the resample prompt.
/// parents must be sorted by score descending; variants are allocated
/// proportionally to 1/rank. Returns parents plus deduplicated children
/// (at most num_variants children), sorted by id.
std::vector<Instruction> resample(std::span<const std::pair<Instruction, double>> parents,
                                  int num_variants, const ProposalConfig& config,
                                  const TemplateSet& templates, ModelBackend& backend);

/// Dedup helper: keeps the first instruction for each id, preserving order.
std::vector<Instruction> dedup_instructions(std::vector<Instruction> instructions);

} // namespace ape

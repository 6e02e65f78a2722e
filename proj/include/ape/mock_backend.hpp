#pragma once

#include "ape/backend.hpp"

#include <memory>

namespace ape {

/// Deterministic rule interpreter standing in for "execute the instruction
/// on the model": scans the instruction for a known phrase and applies the
/// matching string transform to input_text. First match wins, in fixed
/// priority order: first letter, second letter, pluralize/plural form,
/// opposite/antonym, uppercase, list letters, sum. No match echoes the
/// input.
std::string mock_execute(const std::string& instruction_text, const std::string& input_text);

/// Levenshtein distance (insert/delete/substitute, unit costs).
int edit_distance(const std::string& a, const std::string& b);

/// Deterministic offline model. Behavior is a pure function of the request
/// (including its seed):
///  - evaluation prompts ("Instruction: ... Input: q / Output:") complete to
///    the interpreter's output for (instruction, q);
///  - resample prompts return paraphrases of the embedded instruction,
///    keeping its transform with probability 7/10;
///  - generation prompts sample from a pool derived from the demo pairs in
///    the prompt: 40% instructions whose transform explains the demos, 40%
///    near-miss instructions matching a different transform, 20%
///    keyword-free distractors; sampled without replacement;
///  - temperature 0 returns the highest-weight pool entry;
///  - logprob is 0 when the continuation equals the interpreter output for
///    the prompt, else -(edit_distance + 1);
///  - tokens are whitespace-delimited words.
class MockBackend : public ModelBackend {
public:
    explicit MockBackend(std::shared_ptr<BudgetLedger> ledger = nullptr,
                         ModelSpec spec = default_spec());

    static ModelSpec default_spec();

    const ModelSpec& spec() const override { return spec_; }
    GenerationResult complete(const GenerationRequest& request) override;
    GenerationResult infill(const GenerationRequest& request) override;
    double logprob(const RenderedPrompt& prompt, const std::string& continuation) override;

    BudgetLedger& ledger() { return *ledger_; }
    std::shared_ptr<BudgetLedger> ledger_ptr() { return ledger_; }

private:
    GenerationResult generate(const GenerationRequest& request, bool is_infill);

    ModelSpec spec_;
    std::shared_ptr<BudgetLedger> ledger_;
};

} // namespace ape

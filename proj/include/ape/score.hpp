#pragma once

#include "ape/backend.hpp"
#include "ape/core.hpp"
#include "ape/templates.hpp"

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace ape {

enum class ScoreKind { ExecAcc, Logprob };

ScoreKind score_kind_from_string(const std::string& s);
std::string to_string(ScoreKind k);

struct ScorerConfig {
    ScoreKind kind = ScoreKind::ExecAcc;
    TemplateName eval_template = TemplateName::ZeroShotEval;
    bool case_sensitive = false;
    std::vector<Demonstration> context_demos; // non-empty switches to few-shot prompts
};

/// Trim, collapse whitespace, strip one trailing period, and case-fold
/// unless case_sensitive. The comparison form for model outputs and golds.
std::string normalize_output(const std::string& s, bool case_sensitive);

/// 1.0 iff output matches any gold alias under the mode (after
/// normalization): exact equality, substring containment, or order-invariant
/// comma-set equality.
double match_output(const std::string& output, const std::vector<std::string>& gold_outputs,
                    MatchMode mode, bool case_sensitive);

/// Thrown when a per-demo scoring call fails; carries the scores gathered
/// before the failure.
class ScoringError : public DomainError {
public:
    ScoringError(const std::string& what, std::map<std::string, double> partial)
        : DomainError(what), partial_(std::move(partial)) {}
    const std::map<std::string, double>& partial_scores() const { return partial_; }

private:
    std::map<std::string, double> partial_;
};

struct BatchScore {
    std::map<std::string, double> per_demo; // demo id -> score
    double mean = 0.0;
};

/// Per-sample score function f(rho, Q, A) plus batch evaluation with a
/// per-sample cache keyed on (instruction, demo, scorer fingerprint,
/// match mode), so re-evaluating a pair never costs a backend call.
class Scorer {
public:
    Scorer(const TemplateSet& templates, ScorerConfig config);

    /// Execution accuracy: 0-1 loss of the backend completion against the
    /// gold aliases (mock path runs the rule interpreter).
    double exec_score(const Instruction& instruction, const Demonstration& demo,
                      MatchMode match_mode, ModelBackend& backend) const;

    /// log P(best gold alias | eval prompt); max over aliases, always <= 0.
    double logprob_score(const Instruction& instruction, const Demonstration& demo,
                         ModelBackend& backend) const;

    /// Scores one demo under the configured kind, cached.
    double score_one(const Instruction& instruction, const Demonstration& demo,
                     MatchMode match_mode, ModelBackend& backend) const;

    BatchScore score_batch(const Instruction& instruction, std::span<const Demonstration> demos,
                           MatchMode match_mode, ModelBackend& backend) const;

    /// Identifies (kind, template, flags, context) in persisted results.
    const std::string& fingerprint() const { return fingerprint_; }
    const ScorerConfig& config() const { return config_; }

private:
    RenderedPrompt render(const Instruction& instruction, const Demonstration& query) const;

    const TemplateSet& templates_;
    ScorerConfig config_;
    std::string fingerprint_;

    mutable std::mutex cache_mu_;
    mutable std::map<std::string, double> cache_;
};

} // namespace ape

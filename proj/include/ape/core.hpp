#pragma once

#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace ape {

/// How a model output is compared against the gold answers.
enum class MatchMode { Exact, Set, Contains };

MatchMode match_mode_from_string(const std::string& s);
std::string to_string(MatchMode m);

/// One (Q, A) pair. Q may be empty; gold_outputs lists the answer and any
/// accepted aliases.
struct Demonstration {
    std::string id;
    std::string input_text;
    std::vector<std::string> gold_outputs;
};

struct TaskSpec {
    std::string name;
    std::vector<Demonstration> train;
    std::vector<Demonstration> test;
    MatchMode match_mode = MatchMode::Exact;
    std::string description;
};

/// Reports every invariant violation (duplicate ids, empty gold outputs,
/// empty train split); an empty result means the task is valid.
std::vector<std::string> validate_task(const TaskSpec& spec);

enum class ProposalMode { Forward, Reverse, Custom, Resample };

ProposalMode proposal_mode_from_string(const std::string& s);
std::string to_string(ProposalMode m);

struct Provenance {
    ProposalMode mode = ProposalMode::Forward;
    int round = 0;
    std::optional<std::string> parent_id;
    std::vector<std::string> demo_ids;
};

/// A candidate instruction rho. The id is a content hash of the case-folded
/// normalized text, so equal-up-to-whitespace-and-case texts are one
/// candidate.
struct Instruction {
    std::string text;
    std::string id;
    Provenance provenance;

    static Instruction make(std::string text, Provenance provenance);
};

/// Deterministic id for an instruction text (hash of folded normalized form).
std::string instruction_id(const std::string& text);

/// Moving-average score over non-overlapping demo subsets.
struct ScoreEstimate {
    std::string instruction_id;
    double sum = 0.0;
    int count = 0;
    std::set<std::string> evaluated_demo_ids;
    bool finalized = false;

    /// Adds one demo's score. Throws DomainError if the demo was already
    /// counted (subsets must not overlap).
    void add(const std::string& demo_id, double score);

    bool has_mean() const { return count > 0; }
    double mean() const; // requires count > 0
};

struct ModelUsage {
    long prompt_tokens = 0;
    long completion_tokens = 0;
    long calls = 0;
};

/// Token/call accounting, totals plus a per-model breakdown. Updates are
/// atomic per request; counters only grow.
class BudgetLedger {
public:
    void charge(const std::string& model, long prompt_tokens, long completion_tokens);

    struct Snapshot {
        long prompt_tokens = 0;
        long completion_tokens = 0;
        long calls = 0;
        std::map<std::string, ModelUsage> per_model;
    };
    Snapshot snapshot() const;

private:
    mutable std::mutex mu_;
    Snapshot state_;
};

} // namespace ape

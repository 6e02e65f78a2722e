#pragma once

#include "ape/backend.hpp"
#include "ape/core.hpp"
#include "ape/propose.hpp"
#include "ape/score.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace ape {

struct SearchConfig {
    int subset_size = 10;
    double keep_fraction = 0.2; // k in "top k%"
    int min_survivors = 5;
    int max_stages = 100;
    int iterative_rounds = 0; // R; 0 = plain search
    int variants_per_round = 10;
    std::uint64_t seed = 0;
    std::optional<double> score_floor; // optional absolute threshold under top-k%
    int parallelism = 1;
};

struct ScoredCandidate {
    Instruction instruction;
    ScoreEstimate estimate;
};

struct EstimateSnapshot {
    double mean = 0.0;
    int count = 0;
    bool finalized = false;
};

struct StageRecord {
    int round = 0;
    int stage = 0;
    std::vector<std::string> subset_demo_ids;
    std::vector<std::string> surviving_ids;           // rank order
    std::map<std::string, EstimateSnapshot> estimates; // whole pool, post-update
};

struct RoundRecord {
    int round = 0;
    int pool_size = 0;
    double round_best = 0.0;
    double best_so_far = 0.0;
    std::vector<double> survival; // fraction of finalized scores > t, t = 0.0,0.1,...,0.9
};

struct FinalEstimateRecord {
    double mean = 0.0;
    int count = 0;
    bool finalized = false;
    std::vector<std::string> evaluated_demo_ids; // sorted
};

struct SearchTrace {
    std::uint64_t seed = 0;
    std::vector<std::string> train_demo_ids;
    std::vector<StageRecord> stages;
    std::vector<RoundRecord> rounds;
    std::map<std::string, FinalEstimateRecord> final_estimates;
    long scoring_calls = 0; // per-demo scoring evaluations
    long backend_calls = 0; // ledger call delta across the run
    std::vector<std::string> flags;

    nlohmann::json to_json() const;
    std::string to_json_string() const; // stable bytes for identical runs
};

struct SearchResult {
    Instruction best;
    std::map<std::string, double> final_scores; // finalized survivors: id -> mean
    std::vector<ScoredCandidate> survivors;     // rank order, finalized
    SearchTrace trace;
};

/// One filtering stage: scores every pool member on the subset (which must
/// be disjoint from everything each member has seen), then keeps the top
/// ceil(keep_fraction * |pool|) by mean — never fewer than
/// min(min_survivors, |pool|) — with ties broken by instruction id.
std::vector<ScoredCandidate> filter_stage(std::vector<ScoredCandidate> pool,
                                          std::span<const Demonstration> subset,
                                          const Scorer& scorer, MatchMode match_mode,
                                          ModelBackend& backend, const SearchConfig& config,
                                          SearchTrace& trace, int round, int stage);

/// Algorithm: repeat filtering stages on fresh non-overlapping subsets from
/// a seeded schedule until survivors <= min_survivors, the schedule is
/// exhausted, or max_stages is hit; then finalize survivors on all their
/// remaining unseen train demos and return the argmax.
SearchResult run_search(const TaskSpec& task, std::vector<Instruction> candidates,
                        const Scorer& scorer, ModelBackend& backend, const SearchConfig& config);

struct IterativeResult {
    Instruction best;
    double best_score = 0.0;
    std::vector<RoundRecord> rounds;
    SearchTrace trace; // merged over rounds
};

/// Iterative Monte Carlo variant: round 0 proposes and searches; each later
/// round resamples the survivors, unions them with their parents, and
/// searches the union on a fresh subset schedule. Returns the best
/// instruction across all rounds.
IterativeResult run_iterative(const TaskSpec& task, const SearchConfig& config,
                              const ProposalConfig& proposal_config,
                              const TemplateSet& templates, const Scorer& scorer,
                              ModelBackend& backend);

} // namespace ape

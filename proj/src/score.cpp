#include "ape/score.hpp"

#include "ape/errors.hpp"
#include "ape/text.hpp"

#include <algorithm>
#include <set>
#include <sstream>

namespace ape {

ScoreKind score_kind_from_string(const std::string& s) {
    if (s == "exec_acc") return ScoreKind::ExecAcc;
    if (s == "logprob") return ScoreKind::Logprob;
    throw ConfigError("unknown score kind: '" + s + "' (expected exec_acc|logprob)");
}

std::string to_string(ScoreKind k) {
    return k == ScoreKind::ExecAcc ? "exec_acc" : "logprob";
}

std::string normalize_output(const std::string& s, bool case_sensitive) {
    std::string out = normalize_text(s);
    if (!out.empty() && out.back() == '.') out.pop_back();
    out = trim(out);
    if (!case_sensitive) out = fold_case(out);
    return out;
}

namespace {

std::set<std::string> comma_set(const std::string& s, bool case_sensitive) {
    std::set<std::string> items;
    for (const auto& part : split(s, ',')) {
        std::string item = normalize_output(part, case_sensitive);
        if (!item.empty()) items.insert(item);
    }
    return items;
}

} // namespace

double match_output(const std::string& output, const std::vector<std::string>& gold_outputs,
                    MatchMode mode, bool case_sensitive) {
    const std::string norm_out = normalize_output(output, case_sensitive);
    for (const auto& gold : gold_outputs) {
        const std::string norm_gold = normalize_output(gold, case_sensitive);
        switch (mode) {
            case MatchMode::Exact:
                if (norm_out == norm_gold) return 1.0;
                break;
            case MatchMode::Contains:
                if (contains(norm_out, norm_gold)) return 1.0;
                break;
            case MatchMode::Set:
                if (comma_set(output, case_sensitive) == comma_set(gold, case_sensitive))
                    return 1.0;
                break;
        }
    }
    return 0.0;
}

Scorer::Scorer(const TemplateSet& templates, ScorerConfig config)
    : templates_(templates), config_(std::move(config)) {
    if (!config_.context_demos.empty() && config_.eval_template == TemplateName::ZeroShotEval)
        config_.eval_template = TemplateName::FewShotEval;

    std::ostringstream fp;
    fp << to_string(config_.kind) << '\x1f' << templates_.fingerprint(config_.eval_template)
       << '\x1f' << (config_.case_sensitive ? "cs" : "ci");
    for (const auto& d : config_.context_demos) fp << '\x1f' << d.id;
    fingerprint_ = fnv1a64_hex(fp.str());
}

RenderedPrompt Scorer::render(const Instruction& instruction, const Demonstration& query) const {
    // A query that happens to sit in the fixed context list is excluded from
    // its own prompt rather than leaking its label.
    std::vector<Demonstration> context;
    for (const auto& d : config_.context_demos)
        if (d.id != query.id) context.push_back(d);
    return render_eval(templates_.get(config_.eval_template), instruction, query, context);
}

double Scorer::exec_score(const Instruction& instruction, const Demonstration& demo,
                          MatchMode match_mode, ModelBackend& backend) const {
    GenerationRequest request;
    request.prompt = render(instruction, demo);
    request.n = 1;
    request.temperature = 0.0;
    request.max_tokens = backend.spec().max_completion_tokens;
    request.stop_sequences = {"\n\n"};
    request.seed = 0;

    GenerationResult result;
    try {
        result = backend.complete(request);
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ScoringError("scoring failed for instruction '" + instruction.id + "' on demo '" +
                               demo.id + "': " + e.what(),
                           {});
    }
    if (result.texts.empty()) return 0.0;
    return match_output(result.texts.front(), demo.gold_outputs, match_mode,
                        config_.case_sensitive);
}

double Scorer::logprob_score(const Instruction& instruction, const Demonstration& demo,
                             ModelBackend& backend) const {
    RenderedPrompt prompt = render(instruction, demo);
    double best = -std::numeric_limits<double>::infinity();
    for (const auto& gold : demo.gold_outputs) {
        double lp;
        try {
            lp = backend.logprob(prompt, gold);
        } catch (const ConfigError&) {
            throw;
        } catch (const std::exception& e) {
            throw ScoringError("scoring failed for instruction '" + instruction.id +
                                   "' on demo '" + demo.id + "': " + e.what(),
                               {});
        }
        best = std::max(best, lp);
    }
    return best;
}

double Scorer::score_one(const Instruction& instruction, const Demonstration& demo,
                         MatchMode match_mode, ModelBackend& backend) const {
    const std::string key =
        instruction.id + '\x1f' + demo.id + '\x1f' + fingerprint_ + '\x1f' + to_string(match_mode);
    {
        std::lock_guard<std::mutex> lock(cache_mu_);
        auto it = cache_.find(key);
        if (it != cache_.end()) return it->second;
    }
    double score = config_.kind == ScoreKind::ExecAcc
                       ? exec_score(instruction, demo, match_mode, backend)
                       : logprob_score(instruction, demo, backend);
    {
        std::lock_guard<std::mutex> lock(cache_mu_);
        cache_.emplace(key, score);
    }
    return score;
}

BatchScore Scorer::score_batch(const Instruction& instruction,
                               std::span<const Demonstration> demos, MatchMode match_mode,
                               ModelBackend& backend) const {
    if (demos.empty()) throw DomainError("score_batch requires at least one demo");
    BatchScore batch;
    double sum = 0.0;
    for (const auto& demo : demos) {
        double s;
        try {
            s = score_one(instruction, demo, match_mode, backend);
        } catch (const ScoringError& e) {
            throw ScoringError(e.what(), batch.per_demo);
        }
        batch.per_demo[demo.id] = s;
        sum += s;
    }
    batch.mean = sum / static_cast<double>(demos.size());
    return batch;
}

} // namespace ape

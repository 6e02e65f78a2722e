#include "ape/propose.hpp"

#include "ape/errors.hpp"
#include "ape/rng.hpp"
#include "ape/text.hpp"

#include <algorithm>
#include <map>
#include <set>

namespace ape {

namespace {

TemplateName template_for_mode(const ProposalConfig& config) {
    switch (config.mode) {
        case ProposalMode::Forward: return TemplateName::ForwardGen;
        case ProposalMode::Reverse: return TemplateName::ReverseGen1;
        case ProposalMode::Custom: return config.custom_template;
        case ProposalMode::Resample: break;
    }
    throw ConfigError("resample mode has no proposal template; use resample()");
}

std::vector<Instruction> collect_candidates(const std::vector<std::string>& texts,
                                            const Provenance& provenance) {
    std::vector<Instruction> out;
    for (const auto& text : texts) {
        if (trim(text).empty()) continue;
        out.push_back(Instruction::make(text, provenance));
    }
    return out;
}

} // namespace

std::vector<Instruction> dedup_instructions(std::vector<Instruction> instructions) {
    std::set<std::string> seen;
    std::vector<Instruction> out;
    out.reserve(instructions.size());
    for (auto& ins : instructions)
        if (seen.insert(ins.id).second) out.push_back(std::move(ins));
    return out;
}

std::vector<std::vector<std::string>> sample_demo_groups(std::span<const Demonstration> train,
                                                         const ProposalConfig& config) {
    if (config.demos_per_prompt <= 0)
        throw ConfigError("demos_per_prompt must be positive");
    if (config.demos_per_prompt > static_cast<int>(train.size()))
        throw DomainError("demos_per_prompt (" + std::to_string(config.demos_per_prompt) +
                          ") exceeds train size (" + std::to_string(train.size()) + ")");
    if (config.num_candidates < 1) throw ConfigError("num_candidates must be >= 1");

    Rng rng(derive_seed(config.seed, fnv1a64("demo-groups")));
    std::vector<std::vector<std::string>> groups;
    const int num_groups = config.effective_groups();
    groups.reserve(num_groups);
    for (int g = 0; g < num_groups; ++g) {
        std::vector<size_t> indices(train.size());
        for (size_t i = 0; i < indices.size(); ++i) indices[i] = i;
        // partial Fisher-Yates: the first demos_per_prompt slots
        for (int k = 0; k < config.demos_per_prompt; ++k) {
            size_t j = k + static_cast<size_t>(rng.bounded(indices.size() - k));
            std::swap(indices[k], indices[j]);
        }
        std::vector<std::string> ids;
        ids.reserve(config.demos_per_prompt);
        for (int k = 0; k < config.demos_per_prompt; ++k) ids.push_back(train[indices[k]].id);
        groups.push_back(std::move(ids));
    }
    return groups;
}

std::vector<Instruction> propose(const TaskSpec& task, const ProposalConfig& config,
                                 const TemplateSet& templates, ModelBackend& backend) {
    const auto& tpl = templates.get(template_for_mode(config));
    auto groups = sample_demo_groups(task.train, config);
    std::map<std::string, const Demonstration*> by_id;
    for (const auto& d : task.train) by_id[d.id] = &d;

    // Over-generate to survive dedup losses, spread evenly over groups.
    const int raw_target = (config.num_candidates * 5 + 3) / 4; // ceil(1.25 m)
    const int num_groups = static_cast<int>(groups.size());
    std::vector<Instruction> collected;
    for (int g = 0; g < num_groups; ++g) {
        int share = raw_target / num_groups + (g < raw_target % num_groups ? 1 : 0);
        if (share == 0) continue;

        std::vector<Demonstration> demos;
        demos.reserve(groups[g].size());
        for (const auto& id : groups[g]) demos.push_back(*by_id.at(id));

        GenerationRequest request;
        request.prompt = render_proposal(tpl, demos);
        request.n = share;
        request.temperature = config.temperature;
        request.max_tokens = config.max_tokens;
        request.seed = derive_seed(config.seed, static_cast<std::uint64_t>(g));

        GenerationResult result;
        try {
            result = tpl.is_reverse() ? backend.infill(request) : backend.complete(request);
        } catch (const ConfigError&) {
            throw;
        } catch (const std::exception& e) {
            throw DomainError("proposal generation failed on group " + std::to_string(g) + " (" +
                              std::to_string(collected.size()) + " candidates collected): " +
                              e.what());
        }

        Provenance prov;
        prov.mode = config.mode;
        prov.round = 0;
        prov.demo_ids = groups[g];
        auto batch = collect_candidates(result.texts, prov);
        collected.insert(collected.end(), batch.begin(), batch.end());
    }

    auto unique = dedup_instructions(std::move(collected));
    if (unique.empty())
        throw DomainError("proposal produced zero usable candidates for task '" + task.name + "'");
    if (static_cast<int>(unique.size()) > config.num_candidates)
        unique.resize(config.num_candidates);
    std::sort(unique.begin(), unique.end(),
              [](const Instruction& a, const Instruction& b) { return a.id < b.id; });
    return unique;
}

std::vector<Instruction> resample(std::span<const std::pair<Instruction, double>> parents,
                                  int num_variants, const ProposalConfig& config,
                                  const TemplateSet& templates, ModelBackend& backend) {
    if (parents.empty()) throw DomainError("resample requires at least one parent");
    if (num_variants < 1) throw ConfigError("resample requires num_variants >= 1");
    for (size_t i = 1; i < parents.size(); ++i)
        if (parents[i].second > parents[i - 1].second)
            throw DomainError("resample parents must be sorted by score descending");

    const auto& tpl = templates.get(TemplateName::Resample);

    // 1/rank weights, largest-remainder apportionment of the raw budget.
    const int raw_target = (num_variants * 5 + 3) / 4; // ceil(1.25 k)
    std::vector<double> weights(parents.size());
    double total = 0.0;
    for (size_t i = 0; i < parents.size(); ++i) {
        weights[i] = 1.0 / static_cast<double>(i + 1);
        total += weights[i];
    }
    std::vector<int> counts(parents.size(), 0);
    std::vector<std::pair<double, size_t>> fractions;
    int assigned = 0;
    for (size_t i = 0; i < parents.size(); ++i) {
        double q = raw_target * weights[i] / total;
        counts[i] = static_cast<int>(q);
        assigned += counts[i];
        fractions.emplace_back(q - counts[i], i);
    }
    std::sort(fractions.begin(), fractions.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second; // ties favor higher-ranked parents
    });
    for (size_t i = 0; assigned < raw_target && i < fractions.size(); ++i, ++assigned)
        counts[fractions[i].second] += 1;

    std::vector<Instruction> children;
    for (size_t i = 0; i < parents.size(); ++i) {
        if (counts[i] == 0) continue;
        const Instruction& parent = parents[i].first;

        GenerationRequest request;
        request.prompt = render_resample(tpl, parent);
        request.n = counts[i];
        request.temperature = config.temperature;
        request.max_tokens = config.max_tokens;
        request.seed = derive_seed(config.seed, fnv1a64(parent.id));

        GenerationResult result;
        try {
            result = backend.complete(request);
        } catch (const ConfigError&) {
            throw;
        } catch (const std::exception& e) {
            throw DomainError("resample generation failed for parent '" + parent.id + "' (" +
                              std::to_string(children.size()) + " variants collected): " +
                              e.what());
        }

        Provenance prov;
        prov.mode = ProposalMode::Resample;
        prov.round = parent.provenance.round + 1;
        prov.parent_id = parent.id;
        auto batch = collect_candidates(result.texts, prov);
        children.insert(children.end(), batch.begin(), batch.end());
    }

    // Parents are retained; children dedup against them and each other.
    std::vector<Instruction> pool;
    pool.reserve(parents.size() + children.size());
    for (const auto& [parent, score] : parents) {
        (void)score;
        pool.push_back(parent);
    }
    std::set<std::string> parent_ids;
    for (const auto& p : pool) parent_ids.insert(p.id);

    auto unique_children = dedup_instructions(std::move(children));
    int kept = 0;
    for (auto& child : unique_children) {
        if (parent_ids.count(child.id)) continue;
        if (kept >= num_variants) break;
        pool.push_back(std::move(child));
        ++kept;
    }
    std::sort(pool.begin(), pool.end(),
              [](const Instruction& a, const Instruction& b) { return a.id < b.id; });
    return pool;
}

} // namespace ape

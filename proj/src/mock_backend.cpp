#include "ape/mock_backend.hpp"

#include "ape/errors.hpp"
#include "ape/rng.hpp"
#include "ape/text.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <map>
#include <sstream>

namespace ape {

namespace {

std::string to_lower_ascii(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

const std::map<std::string, std::string>& antonym_table() {
    // 20 fixed pairs, stored in both directions.
    static const std::map<std::string, std::string> table = [] {
        static const std::array<std::pair<const char*, const char*>, 20> pairs = {{
            {"won", "lost"},     {"hot", "cold"},    {"big", "small"},
            {"up", "down"},      {"fast", "slow"},   {"happy", "sad"},
            {"light", "dark"},   {"open", "closed"}, {"early", "late"},
            {"strong", "weak"},  {"full", "empty"},  {"hard", "soft"},
            {"high", "low"},     {"long", "short"},  {"new", "old"},
            {"loud", "quiet"},   {"rich", "poor"},   {"clean", "dirty"},
            {"wet", "dry"},      {"thick", "thin"},
        }};
        std::map<std::string, std::string> t;
        for (const auto& [a, b] : pairs) {
            t[a] = b;
            t[b] = a;
        }
        return t;
    }();
    return table;
}

enum class Transform {
    FirstLetter,
    SecondLetter,
    Pluralize,
    Antonym,
    Uppercase,
    ListLetters,
    Sum,
};

struct Rule {
    Transform transform;
    std::vector<std::string> phrases; // lowercase keyword phrases
};

const std::vector<Rule>& rule_table() {
    // Priority order is the order of this list.
    static const std::vector<Rule> rules = {
        {Transform::FirstLetter, {"first letter"}},
        {Transform::SecondLetter, {"second letter"}},
        {Transform::Pluralize, {"pluralize", "plural form"}},
        {Transform::Antonym, {"opposite", "antonym"}},
        {Transform::Uppercase, {"uppercase"}},
        {Transform::ListLetters, {"list letters"}},
        {Transform::Sum, {"sum"}},
    };
    return rules;
}

std::string apply_transform(Transform t, const std::string& input) {
    switch (t) {
        case Transform::FirstLetter:
            return input.empty() ? std::string() : std::string(1, input[0]);
        case Transform::SecondLetter:
            return input.size() < 2 ? std::string() : std::string(1, input[1]);
        case Transform::Pluralize:
            return input + "s";
        case Transform::Antonym: {
            auto it = antonym_table().find(to_lower_ascii(input));
            return it == antonym_table().end() ? input : it->second;
        }
        case Transform::Uppercase: {
            std::string out = input;
            std::transform(out.begin(), out.end(), out.begin(),
                           [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
            return out;
        }
        case Transform::ListLetters: {
            std::string out;
            for (size_t i = 0; i < input.size(); ++i) {
                if (i) out.push_back(' ');
                out.push_back(input[i]);
            }
            return out;
        }
        case Transform::Sum: {
            std::istringstream in(input);
            long a = 0, b = 0;
            std::string extra;
            if (in >> a >> b && !(in >> extra)) return std::to_string(a + b);
            return input;
        }
    }
    return input;
}

std::optional<Transform> match_rule(const std::string& instruction_text) {
    const std::string lowered = to_lower_ascii(instruction_text);
    for (const auto& rule : rule_table())
        for (const auto& phrase : rule.phrases)
            if (contains(lowered, phrase)) return rule.transform;
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// Instruction phrase banks.

const std::vector<std::string>& forms_for(Transform t) {
    static const std::map<Transform, std::vector<std::string>> forms = {
        {Transform::FirstLetter,
         {"Write the first letter of the word.",
          "Extract the first letter of the input word.",
          "Output the first letter of each input.",
          "Take the first letter of the given word."}},
        {Transform::SecondLetter,
         {"Find the second letter in each word.",
          "Extract the second letter of the input word.",
          "Write the second letter of the word.",
          "Output the second letter of the given word."}},
        {Transform::Pluralize,
         {"Convert the input word to its plural form.",
          "Write the plural form of the word.",
          "Pluralize the word.",
          "Give the plural form of each input."}},
        {Transform::Antonym,
         {"Write a word that means the opposite of the input word.",
          "Write the antonym of the word.",
          "Give the opposite of each input word.",
          "Output the word with the opposite meaning."}},
        {Transform::Uppercase,
         {"Write the input word in uppercase.",
          "Convert the word to uppercase letters.",
          "Rewrite each input in uppercase.",
          "Uppercase the given word."}},
        {Transform::ListLetters,
         {"List letters of the input word, separated by spaces.",
          "List letters of the word one by one.",
          "For each input, list letters with spaces between them.",
          "List letters, separating them with single spaces."}},
        {Transform::Sum,
         {"Sum the two given numbers.",
          "Compute the sum of the two numbers.",
          "Write the sum of the inputs.",
          "Output the sum of the two given values."}},
    };
    return forms.at(t);
}

const std::vector<std::string>& distractor_forms() {
    static const std::vector<std::string> forms = {
        "Dance wildly.",
        "Describe the input in French.",
        "Repeat after me.",
        "Consider the word carefully.",
        "Answer as briefly as you can.",
        "Think about what the input reminds you of.",
        "Do whatever feels right.",
        "Write a short poem about the input.",
    };
    return forms;
}

const std::vector<std::string>& decoration_prefixes() {
    static const std::vector<std::string> prefixes = {
        "", "Task: ", "Your task: ", "Rule: ", "Note: ", "Remember: ", "Instruction for you: ",
    };
    return prefixes;
}

const std::vector<std::string>& decoration_suffixes() {
    static const std::vector<std::string> suffixes = {
        "", " Thank you.", " Be precise.", " Answer with the result only.", " Nothing else.",
    };
    return suffixes;
}

std::string decorate(const std::string& form, size_t variant) {
    const auto& pre = decoration_prefixes();
    const auto& suf = decoration_suffixes();
    size_t p = variant % pre.size();
    size_t s = (variant / pre.size()) % suf.size();
    return pre[p] + form + suf[s];
}

std::vector<std::string> expand_forms(const std::vector<std::string>& forms) {
    const size_t variants = decoration_prefixes().size() * decoration_suffixes().size();
    std::vector<std::string> out;
    out.reserve(forms.size() * variants);
    // variant-minor so the undecorated canonical forms come first
    for (size_t v = 0; v < variants; ++v)
        for (const auto& f : forms) out.push_back(decorate(f, v));
    return out;
}

// ---------------------------------------------------------------------------
// Prompt classification and parsing.

constexpr const char* kResampleMarker = "Generate a variation of the following instruction";

enum class PromptKind { Eval, Resample, Proposal };

std::string rtrimmed(const std::string& s) {
    size_t e = s.size();
    while (e > 0 && (s[e - 1] == ' ' || s[e - 1] == '\n' || s[e - 1] == '\t' || s[e - 1] == '\r'))
        --e;
    return s.substr(0, e);
}

PromptKind classify_prompt(const std::string& full) {
    if (contains(full, kResampleMarker)) return PromptKind::Resample;
    if (full.rfind("Instruction: ", 0) == 0 && rtrimmed(full).ends_with("Output:"))
        return PromptKind::Eval;
    return PromptKind::Proposal;
}

struct EvalParts {
    std::string instruction;
    std::string input;
};

std::optional<EvalParts> parse_eval(const std::string& full) {
    constexpr std::string_view head = "Instruction: ";
    if (full.rfind(head.data(), 0) != 0) return std::nullopt;
    size_t instr_end = full.find("\n\n", head.size());
    if (instr_end == std::string::npos) return std::nullopt;
    EvalParts parts;
    parts.instruction = full.substr(head.size(), instr_end - head.size());

    size_t input_pos = full.rfind("\nInput: ");
    if (input_pos == std::string::npos) return std::nullopt;
    size_t value_pos = input_pos + std::string_view("\nInput: ").size();
    size_t output_pos = full.rfind("\nOutput:");
    if (output_pos == std::string::npos || output_pos < value_pos) return std::nullopt;
    parts.input = full.substr(value_pos, output_pos - value_pos);
    return parts;
}

std::optional<std::string> parse_resample_parent(const std::string& full) {
    size_t marker = full.find(kResampleMarker);
    if (marker == std::string::npos) return std::nullopt;
    size_t input_pos = full.find("Input: ", marker);
    if (input_pos == std::string::npos) return std::nullopt;
    size_t value_pos = input_pos + std::string_view("Input: ").size();
    size_t output_pos = full.rfind("\nOutput:");
    if (output_pos == std::string::npos || output_pos < value_pos) return std::nullopt;
    return full.substr(value_pos, output_pos - value_pos);
}

std::vector<std::pair<std::string, std::string>> parse_demo_pairs(const std::string& full) {
    std::vector<std::pair<std::string, std::string>> pairs;
    std::optional<std::string> pending_input;
    for (const auto& line : split(full, '\n')) {
        if (line.rfind("Input: ", 0) == 0) {
            pending_input = line.substr(7);
        } else if (line.rfind("Output: ", 0) == 0) {
            pairs.emplace_back(pending_input.value_or(""), line.substr(8));
            pending_input.reset();
        }
    }
    return pairs;
}

std::vector<Transform> explaining_transforms(
    const std::vector<std::pair<std::string, std::string>>& demos) {
    std::vector<Transform> out;
    if (demos.empty()) return out;
    for (const auto& rule : rule_table()) {
        bool all = true;
        for (const auto& [q, a] : demos) {
            if (apply_transform(rule.transform, q) != a) {
                all = false;
                break;
            }
        }
        if (all) out.push_back(rule.transform);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Pool sampling.

struct CandidatePool {
    std::vector<std::string> correct;
    std::vector<std::string> near_miss;
    std::vector<std::string> distractor;

    const std::string& argmax() const {
        if (!correct.empty()) return correct.front();
        if (!near_miss.empty()) return near_miss.front();
        return distractor.front();
    }
};

CandidatePool build_pool(const std::vector<Transform>& explaining) {
    CandidatePool pool;
    std::vector<bool> is_explaining(rule_table().size(), false);
    for (auto t : explaining)
        for (size_t i = 0; i < rule_table().size(); ++i)
            if (rule_table()[i].transform == t) is_explaining[i] = true;

    for (size_t i = 0; i < rule_table().size(); ++i) {
        auto expanded = expand_forms(forms_for(rule_table()[i].transform));
        auto& dest = is_explaining[i] ? pool.correct : pool.near_miss;
        dest.insert(dest.end(), expanded.begin(), expanded.end());
    }
    pool.distractor = expand_forms(distractor_forms());
    return pool;
}

/// Largest-remainder apportionment of n over the 40/40/20 mix, then
/// without-replacement draws per class, spilling quota when a class runs dry.
std::vector<std::string> sample_pool(const CandidatePool& pool, int n, Rng& rng) {
    const std::array<double, 3> shares = {0.4, 0.4, 0.2};
    std::array<int, 3> want{};
    std::array<double, 3> frac{};
    int assigned = 0;
    for (int i = 0; i < 3; ++i) {
        double q = shares[i] * n;
        want[i] = static_cast<int>(q);
        frac[i] = q - want[i];
        assigned += want[i];
    }
    while (assigned < n) {
        int best = 0;
        for (int i = 1; i < 3; ++i)
            if (frac[i] > frac[best]) best = i;
        want[best] += 1;
        frac[best] = -1;
        assigned += 1;
    }

    std::array<std::vector<std::string>, 3> classes = {pool.correct, pool.near_miss,
                                                       pool.distractor};
    std::vector<std::string> drawn;
    drawn.reserve(n);
    auto draw_from = [&](int cls, int count) {
        auto& v = classes[cls];
        int taken = 0;
        while (taken < count && !v.empty()) {
            size_t j = static_cast<size_t>(rng.bounded(v.size()));
            drawn.push_back(std::move(v[j]));
            v[j] = std::move(v.back());
            v.pop_back();
            ++taken;
        }
        return taken;
    };
    int shortfall = 0;
    for (int i = 0; i < 3; ++i) shortfall += want[i] - draw_from(i, want[i]);
    for (int i = 0; i < 3 && shortfall > 0; ++i)
        shortfall -= draw_from(i, shortfall);
    // Every class exhausted: cycle deterministically (dedup happens upstream).
    for (size_t i = 0; static_cast<int>(drawn.size()) < n && !drawn.empty(); ++i)
        drawn.push_back(drawn[i]);
    rng.shuffle(drawn);
    return drawn;
}

std::vector<std::string> sample_resample(const std::string& parent, int n, double temperature,
                                         Rng& rng) {
    auto parent_rule = match_rule(parent);
    const auto& rules = rule_table();
    std::vector<std::string> out;
    out.reserve(n);
    for (int i = 0; i < n; ++i) {
        if (temperature == 0.0) {
            out.push_back(parent_rule ? forms_for(*parent_rule).front()
                                      : decorate(parent, 1));
            continue;
        }
        std::uint64_t r = rng.bounded(10);
        if (r < 7) {
            // Paraphrase that keeps the parent's transform.
            if (parent_rule) {
                const auto& forms = forms_for(*parent_rule);
                const auto& form = forms[rng.bounded(forms.size())];
                out.push_back(decorate(form, rng.bounded(35)));
            } else {
                out.push_back(decorate(parent, 1 + rng.bounded(34)));
            }
        } else if (r < 9) {
            const auto& rule = rules[rng.bounded(rules.size())];
            const auto& forms = forms_for(rule.transform);
            out.push_back(decorate(forms[rng.bounded(forms.size())], rng.bounded(35)));
        } else {
            const auto& forms = distractor_forms();
            out.push_back(decorate(forms[rng.bounded(forms.size())], rng.bounded(35)));
        }
    }
    return out;
}

std::string truncate_words(const std::string& s, int max_words) {
    long words = 0;
    bool in_word = false;
    for (size_t i = 0; i < s.size(); ++i) {
        bool space = s[i] == ' ' || s[i] == '\n' || s[i] == '\t' || s[i] == '\r';
        if (!space && !in_word) {
            in_word = true;
            if (++words > max_words) return s.substr(0, i);
        } else if (space) {
            in_word = false;
        }
    }
    return s;
}

std::string apply_stops(std::string text, const std::vector<std::string>& stops) {
    for (const auto& stop : stops) {
        if (stop.empty()) continue;
        size_t pos = text.find(stop);
        if (pos != std::string::npos) text = text.substr(0, pos);
    }
    return text;
}

} // namespace

std::string mock_execute(const std::string& instruction_text, const std::string& input_text) {
    auto rule = match_rule(instruction_text);
    if (!rule) return input_text;
    return apply_transform(*rule, input_text);
}

int edit_distance(const std::string& a, const std::string& b) {
    std::vector<int> prev(b.size() + 1), cur(b.size() + 1);
    for (size_t j = 0; j <= b.size(); ++j) prev[j] = static_cast<int>(j);
    for (size_t i = 1; i <= a.size(); ++i) {
        cur[0] = static_cast<int>(i);
        for (size_t j = 1; j <= b.size(); ++j) {
            int sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
            cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
        }
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

MockBackend::MockBackend(std::shared_ptr<BudgetLedger> ledger, ModelSpec spec)
    : spec_(std::move(spec)), ledger_(ledger ? std::move(ledger) : std::make_shared<BudgetLedger>()) {}

ModelSpec MockBackend::default_spec() {
    ModelSpec spec;
    spec.name = "mock-1";
    spec.capabilities = {Capability::Complete, Capability::Infill, Capability::Logprob};
    spec.price_per_1k_prompt = 0.0;
    spec.price_per_1k_completion = 0.0;
    spec.max_completion_tokens = 256;
    return spec;
}

GenerationResult MockBackend::complete(const GenerationRequest& request) {
    require_capability(Capability::Complete);
    check_complete_request(request);
    return generate(request, false);
}

GenerationResult MockBackend::infill(const GenerationRequest& request) {
    require_capability(Capability::Infill);
    check_infill_request(request);
    return generate(request, true);
}

GenerationResult MockBackend::generate(const GenerationRequest& request, bool is_infill) {
    const std::string& prefix = request.prompt.prefix;
    const std::string suffix = request.prompt.suffix.value_or("");
    const std::string full = prefix + suffix;

    // Pool stream keyed on (prefix, suffix) so infill and forward prompts
    // with equal concatenation still draw distinct streams.
    std::uint64_t key = fnv1a64(prefix + "\x1f" + suffix + (is_infill ? "\x02" : "\x01"));
    Rng rng(derive_seed(request.seed.value_or(0), key));

    std::vector<std::string> texts;
    switch (classify_prompt(full)) {
        case PromptKind::Eval: {
            auto parts = parse_eval(full);
            std::string out = parts ? mock_execute(parts->instruction, parts->input) : "";
            texts.assign(request.n, out);
            break;
        }
        case PromptKind::Resample: {
            auto parent = parse_resample_parent(full);
            texts = sample_resample(parent.value_or(""), request.n, request.temperature, rng);
            break;
        }
        case PromptKind::Proposal: {
            auto pool = build_pool(explaining_transforms(parse_demo_pairs(full)));
            if (request.temperature == 0.0)
                texts.assign(request.n, pool.argmax());
            else
                texts = sample_pool(pool, request.n, rng);
            break;
        }
    }

    for (auto& t : texts) t = truncate_words(apply_stops(std::move(t), request.stop_sequences),
                                             request.max_tokens);

    GenerationResult result;
    result.usage.prompt_tokens = count_words(full);
    for (const auto& t : texts) result.usage.completion_tokens += count_words(t);
    result.texts = std::move(texts);
    ledger_->charge(spec_.name, result.usage.prompt_tokens, result.usage.completion_tokens);
    return result;
}

double MockBackend::logprob(const RenderedPrompt& prompt, const std::string& continuation) {
    require_capability(Capability::Logprob);
    if (continuation.empty()) throw DomainError("logprob requires a non-empty continuation");

    const std::string full = prompt.prefix + prompt.suffix.value_or("");
    auto parts = parse_eval(full);
    std::string expected = parts ? mock_execute(parts->instruction, parts->input) : "";

    ledger_->charge(spec_.name, count_words(full) + count_words(continuation), 0);
    if (continuation == expected) return 0.0;
    return -(edit_distance(expected, continuation) + 1.0);
}

} // namespace ape

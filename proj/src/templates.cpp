#include "ape/templates.hpp"

#include "ape/errors.hpp"
#include "ape/text.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

namespace ape {

namespace {

constexpr const char* kDemos = "«DEMOS»";
constexpr const char* kInput = "«INPUT»";
constexpr const char* kInstruction = "«INSTRUCTION»";
constexpr const char* kInsert = "«INSERT»";
constexpr const char* kQ = "«Q»";
constexpr const char* kA = "«A»";

constexpr const char* kDefaultDemoLineFormat = "Input: «Q»\nOutput: «A»";

size_t count_occurrences(const std::string& s, std::string_view token) {
    size_t n = 0, pos = 0;
    while ((pos = s.find(token, pos)) != std::string::npos) {
        ++n;
        pos += token.size();
    }
    return n;
}

/// Scans for «...» tokens and rejects any outside the allowed set.
void check_placeholders(const std::string& body, const std::set<std::string>& allowed,
                        const std::string& where) {
    size_t pos = 0;
    while ((pos = body.find("«", pos)) != std::string::npos) {
        size_t end = body.find("»", pos);
        if (end == std::string::npos)
            throw ConfigError("unterminated placeholder in " + where);
        std::string token = body.substr(pos, end - pos + 2);
        if (!allowed.count(token))
            throw ConfigError("unknown placeholder " + token + " in " + where);
        pos = end + 2;
    }
}

std::string render_demo_block(const PromptTemplate& tpl, std::span<const Demonstration> demos) {
    std::ostringstream out;
    bool first = true;
    for (const auto& d : demos) {
        if (!first) out << "\n\n";
        first = false;
        std::string entry;
        if (d.input_text.empty()) {
            // Empty Q: keep only the lines that don't reference it.
            bool first_line = true;
            for (const auto& line : split(tpl.demo_line_format, '\n')) {
                if (contains(line, kQ)) continue;
                if (!first_line) entry += "\n";
                first_line = false;
                entry += line;
            }
        } else {
            entry = tpl.demo_line_format;
        }
        replace_all(entry, kQ, d.input_text);
        replace_all(entry, kA, d.gold_outputs.empty() ? std::string() : d.gold_outputs.front());
        out << entry;
    }
    return out.str();
}

/// Splits a fully substituted body at «INSERT». Reverse templates yield a
/// (prefix, suffix) pair; forward/eval prompts must not leave a suffix.
RenderedPrompt split_at_insert(const PromptTemplate& tpl, std::string body) {
    size_t pos = body.find(kInsert);
    if (pos == std::string::npos) return RenderedPrompt{std::move(body), std::nullopt};
    std::string prefix = body.substr(0, pos);
    std::string suffix = body.substr(pos + std::string_view(kInsert).size());
    if (tpl.is_reverse()) return RenderedPrompt{std::move(prefix), std::move(suffix)};
    if (!suffix.empty())
        throw ConfigError("template " + to_string(tpl.name) +
                          " has text after «INSERT» but is not a reverse template");
    return RenderedPrompt{std::move(prefix), std::nullopt};
}

} // namespace

TemplateName template_name_from_string(const std::string& s) {
    if (s == "zero_shot_eval") return TemplateName::ZeroShotEval;
    if (s == "few_shot_eval") return TemplateName::FewShotEval;
    if (s == "forward_gen") return TemplateName::ForwardGen;
    if (s == "reverse_gen_1") return TemplateName::ReverseGen1;
    if (s == "reverse_gen_2") return TemplateName::ReverseGen2;
    if (s == "resample") return TemplateName::Resample;
    throw ConfigError("unknown template name: '" + s + "'");
}

std::string to_string(TemplateName n) {
    switch (n) {
        case TemplateName::ZeroShotEval: return "zero_shot_eval";
        case TemplateName::FewShotEval: return "few_shot_eval";
        case TemplateName::ForwardGen: return "forward_gen";
        case TemplateName::ReverseGen1: return "reverse_gen_1";
        case TemplateName::ReverseGen2: return "reverse_gen_2";
        case TemplateName::Resample: return "resample";
    }
    return "zero_shot_eval";
}

PromptTemplate PromptTemplate::make(TemplateName name, std::string body,
                                    std::string demo_line_format) {
    if (demo_line_format.empty()) demo_line_format = kDefaultDemoLineFormat;
    const std::string where = "template '" + to_string(name) + "'";
    check_placeholders(body, {kDemos, kInput, kInstruction, kInsert}, where);
    check_placeholders(demo_line_format, {kQ, kA}, "demo line format of " + where);

    PromptTemplate tpl{name, std::move(body), std::move(demo_line_format)};
    auto require = [&](const char* token) {
        if (!contains(tpl.body, token))
            throw ConfigError(where + " must contain " + token);
    };
    switch (name) {
        case TemplateName::ForwardGen:
            require(kDemos);
            break;
        case TemplateName::ReverseGen1:
        case TemplateName::ReverseGen2: {
            require(kDemos);
            if (count_occurrences(tpl.body, kInsert) != 1)
                throw ConfigError(where + " must contain «INSERT» exactly once");
            size_t pos = tpl.body.find(kInsert);
            if (trim(tpl.body.substr(pos + std::string_view(kInsert).size())).empty())
                throw ConfigError(where + " must have text after «INSERT»");
            break;
        }
        case TemplateName::ZeroShotEval:
        case TemplateName::FewShotEval:
            require(kInstruction);
            require(kInput);
            break;
        case TemplateName::Resample:
            require(kInstruction);
            break;
    }
    return tpl;
}

RenderedPrompt render_proposal(const PromptTemplate& tpl, std::span<const Demonstration> demos) {
    if (!tpl.is_generation())
        throw ConfigError("template '" + to_string(tpl.name) + "' is not a generation template");
    if (demos.empty()) throw DomainError("render_proposal requires at least one demonstration");

    std::string body = tpl.body;
    replace_all(body, kDemos, render_demo_block(tpl, demos));
    return split_at_insert(tpl, std::move(body));
}

RenderedPrompt render_eval(const PromptTemplate& tpl, const Instruction& instruction,
                           const Demonstration& query,
                           std::span<const Demonstration> context_demos) {
    if (tpl.name == TemplateName::ZeroShotEval && !context_demos.empty())
        throw DomainError("zero_shot_eval does not take context demos");
    if (tpl.name == TemplateName::FewShotEval && context_demos.empty())
        throw DomainError("few_shot_eval requires context demos");
    if (tpl.name != TemplateName::ZeroShotEval && tpl.name != TemplateName::FewShotEval)
        throw ConfigError("template '" + to_string(tpl.name) + "' is not an evaluation template");
    for (const auto& d : context_demos)
        if (d.id == query.id)
            throw DomainError("label leakage: query demo '" + query.id + "' present in context");

    std::string body = tpl.body;
    replace_all(body, kInstruction, instruction.text);
    replace_all(body, kDemos, render_demo_block(tpl, context_demos));
    replace_all(body, kInput, query.input_text);
    return split_at_insert(tpl, std::move(body));
}

RenderedPrompt render_resample(const PromptTemplate& tpl, const Instruction& instruction) {
    if (tpl.name != TemplateName::Resample)
        throw ConfigError("template '" + to_string(tpl.name) + "' is not the resample template");
    std::string body = tpl.body;
    replace_all(body, kInstruction, instruction.text);
    return split_at_insert(tpl, std::move(body));
}

TemplateSet TemplateSet::builtin_defaults() {
    TemplateSet set;
    set.put(PromptTemplate::make(TemplateName::ZeroShotEval,
                                 "Instruction: «INSTRUCTION»\n\n"
                                 "Input: «INPUT»\nOutput:",
                                 {}));
    set.put(PromptTemplate::make(TemplateName::FewShotEval,
                                 "Instruction: «INSTRUCTION»\n\n"
                                 "«DEMOS»\n\n"
                                 "Input: «INPUT»\nOutput:",
                                 {}));
    set.put(PromptTemplate::make(
        TemplateName::ForwardGen,
        "I gave a friend an instruction and five inputs. The friend read the instruction and "
        "wrote an output for every one of the inputs. Here are the input-output pairs:\n\n"
        "«DEMOS»\n\nThe instruction was «INSERT»",
        {}));
    set.put(PromptTemplate::make(
        TemplateName::ReverseGen1,
        "I instructed my friend to «INSERT». The friend read the instruction and "
        "wrote an output for every one of the inputs. Here are the input-output pairs:\n\n"
        "«DEMOS»",
        {}));
    set.put(PromptTemplate::make(
        TemplateName::ReverseGen2,
        "Professor Smith was given the following instructions: «INSERT»\n\n"
        "Here are the Professor's responses:\n\n«DEMOS»",
        {}));
    set.put(PromptTemplate::make(
        TemplateName::Resample,
        "Generate a variation of the following instruction while keeping the semantic "
        "meaning.\n\nInput: «INSTRUCTION»\nOutput:",
        {}));
    return set;
}

TemplateSet TemplateSet::load_manifest(const std::string& manifest_path) {
    std::ifstream in(manifest_path);
    if (!in) throw ConfigError("cannot open template manifest: " + manifest_path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("template manifest " + manifest_path + ": " + e.what());
    }

    std::string demo_format = j.value("demo_line_format", std::string(kDefaultDemoLineFormat));
    if (!j.contains("templates") || !j["templates"].is_object())
        throw ConfigError("template manifest " + manifest_path + " lacks a 'templates' object");

    const auto base = std::filesystem::path(manifest_path).parent_path();
    TemplateSet set;
    for (const auto& [name, path] : j["templates"].items()) {
        auto file = base / path.get<std::string>();
        std::ifstream body_in(file);
        if (!body_in) throw ConfigError("cannot open template file: " + file.string());
        std::ostringstream body;
        body << body_in.rdbuf();
        std::string text = body.str();
        // Text editors append a trailing newline; the template body ends
        // where the author's text ends.
        while (!text.empty() && (text.back() == '\n' || text.back() == '\r')) text.pop_back();
        set.put(PromptTemplate::make(template_name_from_string(name), text, demo_format));
    }
    return set;
}

const PromptTemplate& TemplateSet::get(TemplateName name) const {
    auto it = templates_.find(name);
    if (it == templates_.end())
        throw ConfigError("template '" + to_string(name) + "' is not loaded");
    return it->second;
}

bool TemplateSet::has(TemplateName name) const { return templates_.count(name) > 0; }

void TemplateSet::put(PromptTemplate tpl) { templates_[tpl.name] = std::move(tpl); }

std::string TemplateSet::fingerprint(TemplateName name) const {
    const auto& tpl = get(name);
    return fnv1a64_hex(tpl.body + "\x1f" + tpl.demo_line_format);
}

} // namespace ape

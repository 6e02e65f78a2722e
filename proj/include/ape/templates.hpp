#pragma once

#include "ape/core.hpp"

#include <map>
#include <optional>
#include <span>
#include <string>

namespace ape {

enum class TemplateName {
    ZeroShotEval,
    FewShotEval,
    ForwardGen,
    ReverseGen1,
    ReverseGen2,
    Resample,
};

TemplateName template_name_from_string(const std::string& s);
std::string to_string(TemplateName n);

/// A meta-prompt body with literal «DEMOS» / «INPUT» / «INSTRUCTION» /
/// «INSERT» placeholders, plus the per-demo line format («Q», «A»).
/// Construction validates the placeholder set for the template's role;
/// rendering is total afterwards.
struct PromptTemplate {
    TemplateName name = TemplateName::ZeroShotEval;
    std::string body;
    std::string demo_line_format;

    static PromptTemplate make(TemplateName name, std::string body, std::string demo_line_format);

    bool is_generation() const {
        return name == TemplateName::ForwardGen || name == TemplateName::ReverseGen1 ||
               name == TemplateName::ReverseGen2;
    }
    bool is_reverse() const {
        return name == TemplateName::ReverseGen1 || name == TemplateName::ReverseGen2;
    }
};

/// A prompt ready for a backend. suffix is present exactly for reverse
/// (infill) prompts: the text after the «INSERT» point.
struct RenderedPrompt {
    std::string prefix;
    std::optional<std::string> suffix;

    std::string full() const { return suffix ? prefix + *suffix : prefix; }
};

/// Renders a generation prompt from demos, in the order given.
RenderedPrompt render_proposal(const PromptTemplate& tpl, std::span<const Demonstration> demos);

/// Renders a zero-/few-shot evaluation prompt. The query's gold outputs
/// never appear in the rendering; a query listed among the context demos is
/// label leakage and throws.
RenderedPrompt render_eval(const PromptTemplate& tpl, const Instruction& instruction,
                           const Demonstration& query,
                           std::span<const Demonstration> context_demos);

/// Renders the resample prompt around a parent instruction, verbatim.
RenderedPrompt render_resample(const PromptTemplate& tpl, const Instruction& instruction);

/// The six default templates (canonical wordings), plus manifest loading.
class TemplateSet {
public:
    static TemplateSet builtin_defaults();

    /// Manifest: JSON {"demo_line_format": "...", "templates": {name: path}}.
    /// Paths are resolved relative to the manifest file.
    static TemplateSet load_manifest(const std::string& manifest_path);

    const PromptTemplate& get(TemplateName name) const;
    bool has(TemplateName name) const;
    void put(PromptTemplate tpl);

    /// Fingerprint of a template's body + demo format, for scorer provenance.
    std::string fingerprint(TemplateName name) const;

private:
    std::map<TemplateName, PromptTemplate> templates_;
};

} // namespace ape

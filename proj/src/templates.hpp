#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "axes.hpp"
#include "catalog.hpp"

namespace scd {

inline constexpr std::string_view kDescriptorSlot = "[descriptor]";

struct TemplateKey {
    Principle principle = Principle::EqualGroupStatus;
    Scenario scenario = Scenario::Education;
    ActionPolarity action = ActionPolarity::PositiveAction;
    Scale scale = Scale::Certainty;
    ContactType contact = ContactType::NoContact;

    auto operator<=>(const TemplateKey&) const = default;
};

// Human-readable "principle/scenario/action/scale/contact" tag string.
std::string key_to_string(const TemplateKey& key);

struct PromptTemplate {
    TemplateKey key;
    std::string text;                // contains the descriptor slot exactly once
    std::string answer_instruction;  // scale-specific suffix appended at render time
};

// Contact-framed template corpus over the full
// principle x scenario x action x scale x contact design.
// Immutable after load, safe to share across threads.
struct TemplateCorpus {
    std::string name;
    std::string version;
    std::string system_prompt;
    std::array<std::string, kScaleCount> answer_instructions;  // indexed by Scale
    std::vector<PromptTemplate> entries;

    const PromptTemplate* find(const TemplateKey& key) const;

private:
    mutable std::map<TemplateKey, std::size_t> index_;
    friend TemplateCorpus load_corpus(const std::filesystem::path&);
};

struct CoverageReport {
    bool complete = false;
    std::vector<TemplateKey> missing;
    std::vector<TemplateKey> duplicates;

    std::string to_string() const;
};

// Corpus file: JSON {name, version, system_prompt,
// answer_instructions: {certainty, likelihood, frequency},
// entries: [{principle, scenario, action, scale, contact, text}]}.
TemplateCorpus load_corpus(const std::filesystem::path& path);

// complete <=> every key of the 6x5x2x3x3 cross product appears exactly once.
CoverageReport validate_coverage(const TemplateCorpus& corpus);

// Full key space in (principle, scenario, action, scale, contact) enum order.
std::vector<TemplateKey> full_key_space();

// Slot replaced by the descriptor term (single pass, no recursive
// substitution), then the scale's answer instruction appended.
std::string instantiate(const PromptTemplate& tmpl, const Descriptor& descriptor);

}  // namespace scd

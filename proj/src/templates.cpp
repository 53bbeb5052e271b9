#include "templates.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "classify.hpp"
#include "errors.hpp"

namespace scd {

namespace {

std::size_t count_slots(std::string_view text) {
    std::size_t count = 0;
    std::size_t pos = 0;
    while ((pos = text.find(kDescriptorSlot, pos)) != std::string_view::npos) {
        ++count;
        pos += kDescriptorSlot.size();
    }
    return count;
}

std::string require_string(const nlohmann::ordered_json& obj, const char* field,
                           const std::string& where) {
    auto it = obj.find(field);
    if (it == obj.end() || !it->is_string()) {
        throw ValidationError(where + ": missing or non-string field \"" + field + "\"");
    }
    return it->get<std::string>();
}

template <typename T>
T require_axis(const nlohmann::ordered_json& obj, const char* field,
               std::optional<T> (*from_tag)(std::string_view), const std::string& where) {
    std::string value = require_string(obj, field, where);
    auto parsed = from_tag(value);
    if (!parsed) {
        throw ValidationError(where + ": unknown " + field + " value \"" + value + "\"");
    }
    return *parsed;
}

}  // namespace

std::string key_to_string(const TemplateKey& key) {
    std::string out;
    out += tag(key.principle);
    out += '/';
    out += tag(key.scenario);
    out += '/';
    out += tag(key.action);
    out += '/';
    out += tag(key.scale);
    out += '/';
    out += tag(key.contact);
    return out;
}

const PromptTemplate* TemplateCorpus::find(const TemplateKey& key) const {
    if (index_.size() != entries.size()) {
        index_.clear();
        for (std::size_t i = 0; i < entries.size(); ++i) {
            index_.emplace(entries[i].key, i);
        }
    }
    auto it = index_.find(key);
    return it == index_.end() ? nullptr : &entries[it->second];
}

TemplateCorpus load_corpus(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open corpus file: " + path.string());
    }
    nlohmann::ordered_json doc;
    try {
        doc = nlohmann::ordered_json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError("corpus " + path.string() + ": " + e.what());
    }
    if (!doc.is_object()) {
        throw ValidationError("corpus " + path.string() + ": top level must be an object");
    }

    const std::string where = "corpus " + path.string();
    TemplateCorpus corpus;
    corpus.name = require_string(doc, "name", where);
    corpus.version = require_string(doc, "version", where);
    corpus.system_prompt = require_string(doc, "system_prompt", where);

    auto instructions = doc.find("answer_instructions");
    if (instructions == doc.end() || !instructions->is_object()) {
        throw ValidationError(where + ": missing answer_instructions object");
    }
    for (Scale s : all_scales()) {
        corpus.answer_instructions[static_cast<std::size_t>(s)] =
            require_string(*instructions, std::string(tag(s)).c_str(), where);
    }

    auto entries = doc.find("entries");
    if (entries == doc.end() || !entries->is_array()) {
        throw ValidationError(where + ": missing entries array");
    }

    std::set<TemplateKey> seen;
    for (const auto& entry : *entries) {
        if (!entry.is_object()) {
            throw ValidationError(where + ": entries must be objects");
        }
        TemplateKey key;
        key.principle = require_axis<Principle>(entry, "principle", &principle_from_tag, where);
        key.scenario = require_axis<Scenario>(entry, "scenario", &scenario_from_tag, where);
        key.action = require_axis<ActionPolarity>(entry, "action", &action_from_tag, where);
        key.scale = require_axis<Scale>(entry, "scale", &scale_from_tag, where);
        key.contact = require_axis<ContactType>(entry, "contact", &contact_from_tag, where);

        const std::string entry_name = where + ", entry " + key_to_string(key);
        std::string text = require_string(entry, "text", entry_name);
        const std::size_t slots = count_slots(text);
        if (slots == 0) {
            throw ValidationError(entry_name + ": text has no descriptor slot");
        }
        if (slots > 1) {
            throw ValidationError(entry_name + ": text has " + std::to_string(slots) +
                                  " descriptor slots, expected exactly one");
        }
        // Likelihood and Frequency statements must present both answer tokens
        // as explicit choices (e.g. "likely/unlikely"); Certainty questions
        // get their yes/no choices from the answer instruction instead.
        if (key.scale == Scale::Likelihood || key.scale == Scale::Frequency) {
            for (std::string_view token :
                 {engage_token(key.scale), decline_token(key.scale)}) {
                if (find_word(text, token) == std::string_view::npos) {
                    throw ValidationError(entry_name + ": text does not offer the choice \"" +
                                          std::string(token) + "\"");
                }
            }
        }
        if (!seen.insert(key).second) {
            throw ValidationError(entry_name + ": duplicate key");
        }
        corpus.entries.push_back(PromptTemplate{
            key, std::move(text),
            corpus.answer_instructions[static_cast<std::size_t>(key.scale)]});
    }
    return corpus;
}

std::vector<TemplateKey> full_key_space() {
    std::vector<TemplateKey> keys;
    keys.reserve(kPrincipleCount * kScenarioCount * kActionCount * kScaleCount * kContactCount);
    for (Principle p : all_principles())
        for (Scenario sc : all_scenarios())
            for (ActionPolarity a : all_actions())
                for (Scale s : all_scales())
                    for (ContactType c : all_contacts())
                        keys.push_back(TemplateKey{p, sc, a, s, c});
    return keys;
}

CoverageReport validate_coverage(const TemplateCorpus& corpus) {
    CoverageReport report;
    std::map<TemplateKey, std::size_t> counts;
    for (const auto& entry : corpus.entries) {
        ++counts[entry.key];
    }
    for (const TemplateKey& key : full_key_space()) {
        auto it = counts.find(key);
        if (it == counts.end()) {
            report.missing.push_back(key);
        } else if (it->second > 1) {
            report.duplicates.push_back(key);
        }
    }
    report.complete = report.missing.empty() && report.duplicates.empty() &&
                      corpus.entries.size() == full_key_space().size();
    return report;
}

std::string CoverageReport::to_string() const {
    std::ostringstream out;
    if (complete) {
        out << "coverage complete (" << full_key_space().size() << " keys)";
        return out.str();
    }
    out << "coverage incomplete: " << missing.size() << " missing, " << duplicates.size()
        << " duplicate";
    for (const auto& key : missing) {
        out << "\n  missing: " << key_to_string(key);
    }
    for (const auto& key : duplicates) {
        out << "\n  duplicate: " << key_to_string(key);
    }
    return out.str();
}

std::string instantiate(const PromptTemplate& tmpl, const Descriptor& descriptor) {
    std::string rendered = tmpl.text;
    const std::size_t pos = rendered.find(kDescriptorSlot);
    if (pos != std::string::npos) {
        rendered.replace(pos, kDescriptorSlot.size(), descriptor.term);
    }
    if (!tmpl.answer_instruction.empty()) {
        rendered += ' ';
        rendered += tmpl.answer_instruction;
    }
    return rendered;
}

}  // namespace scd

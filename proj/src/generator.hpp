#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "axes.hpp"
#include "catalog.hpp"
#include "templates.hpp"

namespace scd {

// One probe set: the three contact-framed renderings of a single
// (principle, scenario, action, scale, descriptor) tuple.
struct PromptSet {
    std::string id;
    Principle principle = Principle::EqualGroupStatus;
    Scenario scenario = Scenario::Education;
    ActionPolarity action = ActionPolarity::PositiveAction;
    Scale scale = Scale::Certainty;
    Descriptor descriptor;
    std::array<std::string, kContactCount> prompts;  // indexed by ContactType
};

// One probeable prompt: a prompt set fixed to a single contact type.
struct PromptInstance {
    std::string instance_id;  // set id + ":" + contact suffix
    std::string set_id;
    ContactType contact = ContactType::NoContact;
    Scale scale = Scale::Certainty;
    Principle principle = Principle::EqualGroupStatus;
    Scenario scenario = Scenario::Education;
    ActionPolarity action = ActionPolarity::PositiveAction;
    BiasDimension dimension = BiasDimension::Ability;
    std::string descriptor;
    std::string text;
};

struct Dataset {
    std::string corpus_name;
    std::string corpus_version;
    std::string catalog_source;
    std::vector<PromptSet> sets;
};

struct DatasetHeader {
    std::string corpus_name;
    std::string corpus_version;
    std::string catalog_source;
    std::uint64_t n_sets = 0;
    std::uint64_t n_instances = 0;
    std::vector<std::string> scales;
};

// "{scale}|{principle}|{scenario}|{action}|{dimension}|{slug}".
std::string dataset_id(Scale scale, Principle principle, Scenario scenario,
                       ActionPolarity action, BiasDimension dimension,
                       std::string_view slug);

// Cross product of (scale, principle, scenario, action, descriptor) in the
// deterministic order: axes sorted by tag, descriptors grouped by dimension
// tag and kept in catalog file order within a dimension. Requires a complete
// corpus and a non-empty catalog.
Dataset generate_dataset(const TemplateCorpus& corpus, const Catalog& catalog,
                         const std::set<Scale>& scales);

// 3 instances per set, in set order x (no, positive, negative) contact.
std::vector<PromptInstance> enumerate_instances(const Dataset& dataset);

// Dataset file: one header line, then one JSON record per instance.
void write_dataset(const Dataset& dataset, const std::filesystem::path& path);

struct LoadedDataset {
    DatasetHeader header;
    std::vector<PromptInstance> instances;
};

LoadedDataset read_dataset(const std::filesystem::path& path);

}  // namespace scd

#include "generator.hpp"

#include <algorithm>
#include <fstream>
#include <unordered_set>

#include <json.hpp>

#include "errors.hpp"

namespace scd {

namespace {

using json = nlohmann::json;

template <typename E, std::size_t N>
std::vector<E> tag_sorted(const std::array<E, N>& values) {
    std::vector<E> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end(),
              [](E a, E b) { return tag(a) < tag(b); });
    return sorted;
}

json instance_to_json(const PromptInstance& inst) {
    return json{
        {"instance_id", inst.instance_id},
        {"set_id", inst.set_id},
        {"scale", tag(inst.scale)},
        {"principle", tag(inst.principle)},
        {"scenario", tag(inst.scenario)},
        {"action", tag(inst.action)},
        {"contact", tag(inst.contact)},
        {"dimension", tag(inst.dimension)},
        {"descriptor", inst.descriptor},
        {"text", inst.text},
    };
}

template <typename T>
T parse_tag_field(const json& rec, const char* field,
                  std::optional<T> (*from_tag)(std::string_view), std::size_t line) {
    auto it = rec.find(field);
    if (it == rec.end() || !it->is_string()) {
        throw ValidationError("dataset line " + std::to_string(line) +
                              ": missing field \"" + field + "\"");
    }
    auto parsed = from_tag(it->get<std::string>());
    if (!parsed) {
        throw ValidationError("dataset line " + std::to_string(line) + ": unknown " + field +
                              " tag \"" + it->get<std::string>() + "\"");
    }
    return *parsed;
}

std::string parse_string_field(const json& rec, const char* field, std::size_t line) {
    auto it = rec.find(field);
    if (it == rec.end() || !it->is_string()) {
        throw ValidationError("dataset line " + std::to_string(line) +
                              ": missing field \"" + field + "\"");
    }
    return it->get<std::string>();
}

}  // namespace

std::string dataset_id(Scale scale, Principle principle, Scenario scenario,
                       ActionPolarity action, BiasDimension dimension,
                       std::string_view slug) {
    std::string id;
    id.reserve(64 + slug.size());
    id += tag(scale);
    id += '|';
    id += tag(principle);
    id += '|';
    id += tag(scenario);
    id += '|';
    id += tag(action);
    id += '|';
    id += tag(dimension);
    id += '|';
    id += slug;
    return id;
}

Dataset generate_dataset(const TemplateCorpus& corpus, const Catalog& catalog,
                         const std::set<Scale>& scales) {
    const CoverageReport coverage = validate_coverage(corpus);
    if (!coverage.complete) {
        throw ValidationError("generate_dataset: corpus incomplete: " + coverage.to_string());
    }
    if (catalog.empty()) {
        throw ArgumentError("generate_dataset: catalog is empty");
    }
    if (scales.empty()) {
        throw ArgumentError("generate_dataset: scale set is empty");
    }

    // Descriptors grouped by dimension tag order, file order within a dimension.
    std::vector<const Descriptor*> ordered_descriptors;
    ordered_descriptors.reserve(catalog.size());
    for (BiasDimension dim : tag_sorted(all_dimensions())) {
        for (const Descriptor& d : catalog.descriptors) {
            if (d.dimension == dim) {
                ordered_descriptors.push_back(&d);
            }
        }
    }

    std::vector<Scale> scale_order(scales.begin(), scales.end());
    std::sort(scale_order.begin(), scale_order.end(),
              [](Scale a, Scale b) { return tag(a) < tag(b); });
    const auto principles = tag_sorted(all_principles());
    const auto scenarios = tag_sorted(all_scenarios());
    const auto actions = tag_sorted(all_actions());

    Dataset dataset;
    dataset.corpus_name = corpus.name;
    dataset.corpus_version = corpus.version;
    dataset.catalog_source = catalog.source;
    dataset.sets.reserve(scale_order.size() * principles.size() * scenarios.size() *
                         actions.size() * ordered_descriptors.size());

    std::unordered_set<std::string> ids;
    ids.reserve(dataset.sets.capacity());
    for (Scale scale : scale_order) {
        for (Principle principle : principles) {
            for (Scenario scenario : scenarios) {
                for (ActionPolarity action : actions) {
                    std::array<const PromptTemplate*, kContactCount> templates{};
                    for (ContactType contact : all_contacts()) {
                        templates[static_cast<std::size_t>(contact)] = corpus.find(
                            TemplateKey{principle, scenario, action, scale, contact});
                    }
                    for (const Descriptor* descriptor : ordered_descriptors) {
                        PromptSet set;
                        set.id = dataset_id(scale, principle, scenario, action,
                                            descriptor->dimension, descriptor->slug);
                        set.principle = principle;
                        set.scenario = scenario;
                        set.action = action;
                        set.scale = scale;
                        set.descriptor = *descriptor;
                        for (ContactType contact : all_contacts()) {
                            set.prompts[static_cast<std::size_t>(contact)] = instantiate(
                                *templates[static_cast<std::size_t>(contact)], *descriptor);
                        }
                        if (!ids.insert(set.id).second) {
                            throw ValidationError("generate_dataset: duplicate set id " +
                                                  set.id +
                                                  " (catalog has colliding descriptor slugs)");
                        }
                        dataset.sets.push_back(std::move(set));
                    }
                }
            }
        }
    }
    return dataset;
}

std::vector<PromptInstance> enumerate_instances(const Dataset& dataset) {
    std::vector<PromptInstance> instances;
    instances.reserve(dataset.sets.size() * kContactCount);
    for (const PromptSet& set : dataset.sets) {
        for (ContactType contact : all_contacts()) {
            PromptInstance inst;
            inst.instance_id = set.id + ':' + std::string(contact_id_suffix(contact));
            inst.set_id = set.id;
            inst.contact = contact;
            inst.scale = set.scale;
            inst.principle = set.principle;
            inst.scenario = set.scenario;
            inst.action = set.action;
            inst.dimension = set.descriptor.dimension;
            inst.descriptor = set.descriptor.term;
            inst.text = set.prompts[static_cast<std::size_t>(contact)];
            instances.push_back(std::move(inst));
        }
    }
    return instances;
}

void write_dataset(const Dataset& dataset, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot open dataset file for writing: " + path.string());
    }
    std::set<std::string> scale_tags;
    for (const auto& set : dataset.sets) {
        scale_tags.insert(std::string(tag(set.scale)));
    }
    const json header{
        {"corpus_name", dataset.corpus_name},
        {"corpus_version", dataset.corpus_version},
        {"catalog_source", dataset.catalog_source},
        {"n_sets", dataset.sets.size()},
        {"n_instances", dataset.sets.size() * kContactCount},
        {"scales", scale_tags},
    };
    out << header.dump() << '\n';
    for (const PromptSet& set : dataset.sets) {
        for (ContactType contact : all_contacts()) {
            PromptInstance inst;
            inst.instance_id = set.id + ':' + std::string(contact_id_suffix(contact));
            inst.set_id = set.id;
            inst.contact = contact;
            inst.scale = set.scale;
            inst.principle = set.principle;
            inst.scenario = set.scenario;
            inst.action = set.action;
            inst.dimension = set.descriptor.dimension;
            inst.descriptor = set.descriptor.term;
            inst.text = set.prompts[static_cast<std::size_t>(contact)];
            out << instance_to_json(inst).dump() << '\n';
        }
    }
    if (!out) {
        throw IoError("write failed: " + path.string());
    }
}

LoadedDataset read_dataset(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open dataset file: " + path.string());
    }
    LoadedDataset loaded;
    std::string line;
    std::size_t line_no = 0;
    if (!std::getline(in, line)) {
        throw ParseError("dataset " + path.string() + ": empty file");
    }
    ++line_no;
    json header;
    try {
        header = json::parse(line);
    } catch (const json::parse_error& e) {
        throw ParseError("dataset " + path.string() + " header: " + e.what());
    }
    loaded.header.corpus_name = header.value("corpus_name", "");
    loaded.header.corpus_version = header.value("corpus_version", "");
    loaded.header.catalog_source = header.value("catalog_source", "");
    loaded.header.n_sets = header.value("n_sets", std::uint64_t{0});
    loaded.header.n_instances = header.value("n_instances", std::uint64_t{0});
    if (header.contains("scales")) {
        for (const auto& s : header["scales"]) {
            loaded.header.scales.push_back(s.get<std::string>());
        }
    }
    loaded.instances.reserve(loaded.header.n_instances);
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) {
            continue;
        }
        json rec;
        try {
            rec = json::parse(line);
        } catch (const json::parse_error& e) {
            throw ParseError("dataset " + path.string() + " line " +
                             std::to_string(line_no) + ": " + e.what());
        }
        PromptInstance inst;
        inst.instance_id = parse_string_field(rec, "instance_id", line_no);
        inst.set_id = parse_string_field(rec, "set_id", line_no);
        inst.scale = parse_tag_field<Scale>(rec, "scale", &scale_from_tag, line_no);
        inst.principle =
            parse_tag_field<Principle>(rec, "principle", &principle_from_tag, line_no);
        inst.scenario =
            parse_tag_field<Scenario>(rec, "scenario", &scenario_from_tag, line_no);
        inst.action =
            parse_tag_field<ActionPolarity>(rec, "action", &action_from_tag, line_no);
        inst.contact =
            parse_tag_field<ContactType>(rec, "contact", &contact_from_tag, line_no);
        inst.dimension =
            parse_tag_field<BiasDimension>(rec, "dimension", &dimension_from_tag, line_no);
        inst.descriptor = parse_string_field(rec, "descriptor", line_no);
        inst.text = parse_string_field(rec, "text", line_no);
        loaded.instances.push_back(std::move(inst));
    }
    return loaded;
}

}  // namespace scd

#include "splits.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <random>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

#include "classify.hpp"
#include "digest.hpp"
#include "errors.hpp"

namespace scd {

namespace {

using json = nlohmann::json;

// Uniform draw in [0, bound) by rejection, so results do not depend on the
// standard library's distribution implementation.
std::uint64_t bounded_draw(std::mt19937_64& rng, std::uint64_t bound) {
    const std::uint64_t threshold = (0 - bound) % bound;  // 2^64 mod bound
    for (;;) {
        const std::uint64_t x = rng();
        if (x >= threshold) {
            return x % bound;
        }
    }
}

void fisher_yates(std::vector<std::size_t>& order, std::mt19937_64& rng) {
    for (std::size_t i = order.size(); i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(bounded_draw(rng, i));
        std::swap(order[i - 1], order[j]);
    }
}

std::vector<std::size_t> shuffled_indices(std::size_t n, std::uint64_t seed) {
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) {
        order[i] = i;
    }
    std::mt19937_64 rng(seed);
    fisher_yates(order, rng);
    return order;
}

const std::vector<BiasDimension>& default_train_dimensions() {
    static const std::vector<BiasDimension> dims = {
        BiasDimension::Ability,       BiasDimension::Age,
        BiasDimension::BodyType,      BiasDimension::Characteristics,
        BiasDimension::Culture,       BiasDimension::GenderAndSex,
    };
    return dims;
}

Split sampled_split(std::span<const PromptInstance> pool, SplitSetting setting,
                    std::uint64_t seed, std::uint64_t train_n, std::uint64_t val_n,
                    std::span<const PromptInstance> alternate) {
    if (train_n + val_n > pool.size()) {
        throw ArgumentError("split sizes exceed pool: train " + std::to_string(train_n) +
                            " + val " + std::to_string(val_n) + " > " +
                            std::to_string(pool.size()));
    }
    const auto order = shuffled_indices(pool.size(), seed);
    Split split;
    split.setting = setting;
    split.seed = seed;
    split.train.reserve(train_n);
    split.val.reserve(val_n);
    std::size_t at = 0;
    for (; at < train_n; ++at) {
        split.train.push_back(pool[order[at]].instance_id);
    }
    for (; at < train_n + val_n; ++at) {
        split.val.push_back(pool[order[at]].instance_id);
    }
    if (setting == SplitSetting::CrossDataset) {
        split.test.reserve(alternate.size());
        for (const PromptInstance& inst : alternate) {
            split.test.push_back(inst.instance_id);
        }
    } else {
        split.test.reserve(pool.size() - at);
        for (; at < pool.size(); ++at) {
            split.test.push_back(pool[order[at]].instance_id);
        }
    }
    return split;
}

template <typename Pred>
Split holdout_split(std::span<const PromptInstance> pool, SplitSetting setting,
                    std::uint64_t seed, Pred in_train) {
    Split split;
    split.setting = setting;
    split.seed = seed;
    for (const PromptInstance& inst : pool) {
        (in_train(inst) ? split.train : split.test).push_back(inst.instance_id);
    }
    return split;
}

}  // namespace

std::string_view setting_name(SplitSetting setting) {
    switch (setting) {
        case SplitSetting::CrossPromptScale: return "CrossPromptScale";
        case SplitSetting::CrossDataset: return "CrossDataset";
        case SplitSetting::CrossCertainty: return "CrossCertainty";
        case SplitSetting::CrossLikelihood: return "CrossLikelihood";
        case SplitSetting::CrossFrequency: return "CrossFrequency";
        case SplitSetting::CrossScenario: return "CrossScenario";
        case SplitSetting::CrossPrinciple: return "CrossPrinciple";
        case SplitSetting::BiasDimensionSpecific: return "BiasDimensionSpecific";
    }
    return "";
}

std::optional<SplitSetting> setting_from_number(int number) {
    if (number < 1 || number > 8) {
        return std::nullopt;
    }
    return static_cast<SplitSetting>(number);
}

std::optional<SplitSetting> setting_from_name(std::string_view name) {
    for (int number = 1; number <= 8; ++number) {
        const auto setting = static_cast<SplitSetting>(number);
        if (setting_name(setting) == name) {
            return setting;
        }
    }
    return std::nullopt;
}

Split make_split(std::span<const PromptInstance> pool, SplitSetting setting,
                 std::uint64_t seed, const SplitOptions& options) {
    if (pool.empty()) {
        throw ArgumentError("make_split: instance pool is empty");
    }
    switch (setting) {
        case SplitSetting::CrossPromptScale:
            return sampled_split(pool, setting, seed,
                                 options.train_n.value_or(kDefaultTrainInstances),
                                 options.val_n.value_or(kDefaultValInstances), {});
        case SplitSetting::CrossDataset: {
            if (options.alternate.empty()) {
                throw ArgumentError(
                    "setting 2 (CrossDataset) requires an alternate-corpus dataset");
            }
            return sampled_split(pool, setting, seed,
                                 options.train_n.value_or(kDefaultTrainInstances),
                                 options.val_n.value_or(0), options.alternate);
        }
        case SplitSetting::CrossCertainty:
            return holdout_split(pool, setting, seed, [](const PromptInstance& inst) {
                return inst.scale == Scale::Certainty;
            });
        case SplitSetting::CrossLikelihood:
            return holdout_split(pool, setting, seed, [](const PromptInstance& inst) {
                return inst.scale == Scale::Likelihood;
            });
        case SplitSetting::CrossFrequency:
            return holdout_split(pool, setting, seed, [](const PromptInstance& inst) {
                return inst.scale == Scale::Frequency;
            });
        case SplitSetting::CrossScenario:
            return holdout_split(pool, setting, seed, [](const PromptInstance& inst) {
                return inst.scenario == Scenario::Education ||
                       inst.scenario == Scenario::Workplace;
            });
        case SplitSetting::CrossPrinciple:
            return holdout_split(pool, setting, seed, [](const PromptInstance& inst) {
                return inst.principle == Principle::EqualGroupStatus ||
                       inst.principle == Principle::CommonGoals ||
                       inst.principle == Principle::IntergroupCooperation;
            });
        case SplitSetting::BiasDimensionSpecific: {
            const std::vector<BiasDimension>& dims = options.train_dimensions.empty()
                                                         ? default_train_dimensions()
                                                         : options.train_dimensions;
            return holdout_split(pool, setting, seed, [&dims](const PromptInstance& inst) {
                return std::find(dims.begin(), dims.end(), inst.dimension) != dims.end();
            });
        }
    }
    throw ArgumentError("make_split: unknown setting number " +
                        std::to_string(static_cast<int>(setting)));
}

void write_split(const Split& split, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot open split file for writing: " + path.string());
    }
    const json doc{
        {"setting", static_cast<int>(split.setting)},
        {"name", setting_name(split.setting)},
        {"seed", split.seed},
        {"train", split.train},
        {"val", split.val},
        {"test", split.test},
    };
    out << doc.dump(2) << '\n';
    if (!out) {
        throw IoError("write failed: " + path.string());
    }
}

Split read_split(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open split file: " + path.string());
    }
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ParseError("split " + path.string() + ": " + e.what());
    }
    try {
        Split split;
        const int number = doc.at("setting").get<int>();
        const auto setting = setting_from_number(number);
        if (!setting) {
            throw ParseError("split " + path.string() + ": unknown setting number " +
                             std::to_string(number));
        }
        split.setting = *setting;
        split.seed = doc.at("seed").get<std::uint64_t>();
        split.train = doc.at("train").get<std::vector<std::string>>();
        split.val = doc.at("val").get<std::vector<std::string>>();
        split.test = doc.at("test").get<std::vector<std::string>>();
        return split;
    } catch (const json::exception& e) {
        throw ParseError("split " + path.string() + ": " + e.what());
    }
}

InstructionManifest emit_instruction_data(const Split& split,
                                          std::span<const PromptInstance> pool,
                                          const std::string& system_prompt,
                                          const std::filesystem::path& out_path) {
    std::unordered_map<std::string_view, const PromptInstance*> by_id;
    by_id.reserve(pool.size());
    for (const PromptInstance& inst : pool) {
        by_id.emplace(inst.instance_id, &inst);
    }
    {
        std::ofstream out(out_path, std::ios::binary);
        if (!out) {
            throw IoError("cannot open instruction file for writing: " + out_path.string());
        }
        for (const std::string& id : split.train) {
            auto it = by_id.find(id);
            if (it == by_id.end()) {
                throw ValidationError("split train id not in dataset: " + id);
            }
            const PromptInstance& inst = *it->second;
            const json line{
                {"messages",
                 json::array({
                     json{{"role", "system"}, {"content", system_prompt}},
                     json{{"role", "user"}, {"content", inst.text}},
                     json{{"role", "assistant"},
                          {"content", ideal_response(inst.scale, inst.action)}},
                 })},
            };
            out << line.dump() << '\n';
        }
        if (!out) {
            throw IoError("write failed: " + out_path.string());
        }
    }
    InstructionManifest manifest;
    manifest.setting = static_cast<int>(split.setting);
    manifest.seed = split.seed;
    manifest.train_instances = split.train.size();
    manifest.val_instances = split.val.size();
    manifest.test_instances = split.test.size();
    std::unordered_set<std::string> train_set_ids;
    for (const std::string& id : split.train) {
        train_set_ids.insert(by_id.at(id)->set_id);
    }
    manifest.train_sets = train_set_ids.size();
    manifest.sha256 = sha256_file_hex(out_path);
    return manifest;
}

void write_instruction_manifest(const InstructionManifest& manifest,
                                const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot open manifest for writing: " + path.string());
    }
    const json doc{
        {"setting", manifest.setting},
        {"seed", manifest.seed},
        {"train_sets", manifest.train_sets},
        {"train_instances", manifest.train_instances},
        {"val_instances", manifest.val_instances},
        {"test_instances", manifest.test_instances},
        {"sha256", manifest.sha256},
    };
    out << doc.dump(2) << '\n';
    if (!out) {
        throw IoError("write failed: " + path.string());
    }
}

std::string training_config_text() {
    return
        "random_seed = 42\n"
        "num_epochs = 3\n"
        "load_in_4bit = true\n"
        "quantization_type = \"nf4\"\n"
        "compute_dtype = \"bfloat16\"\n"
        "lora_alpha = 16\n"
        "lora_dropout = 0.1\n"
        "lora_r = 64\n"
        "lora_bias = \"none\"\n"
        "per_device_train_batch_size = 6\n"
        "gradient_accumulation_steps = 2\n"
        "learning_rate = 3e-4\n"
        "max_grad_norm = 0.3\n"
        "warmup_ratio = 0.03\n"
        "lr_scheduler_type = \"constant\"\n"
        "optimizer = \"paged_adamw_32bit\"\n"
        "max_sequence_length = 2048\n";
}

void emit_training_config(const std::filesystem::path& out_path) {
    std::ofstream out(out_path, std::ios::binary);
    if (!out) {
        throw IoError("cannot open training config for writing: " + out_path.string());
    }
    out << training_config_text();
    if (!out) {
        throw IoError("write failed: " + out_path.string());
    }
}

}  // namespace scd

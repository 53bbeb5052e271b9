#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "generator.hpp"

namespace scd {

// The eight generalization settings. Numbers are part of the file formats.
enum class SplitSetting : int {
    CrossPromptScale = 1,
    CrossDataset = 2,
    CrossCertainty = 3,
    CrossLikelihood = 4,
    CrossFrequency = 5,
    CrossScenario = 6,
    CrossPrinciple = 7,
    BiasDimensionSpecific = 8,
};

std::string_view setting_name(SplitSetting setting);
std::optional<SplitSetting> setting_from_number(int number);
std::optional<SplitSetting> setting_from_name(std::string_view name);

inline constexpr std::uint64_t kDefaultSeed = 42;
inline constexpr std::uint64_t kDefaultTrainInstances = 10000;
inline constexpr std::uint64_t kDefaultValInstances = 5000;

struct SplitOptions {
    // Settings 1-2: sampled sizes. Unset means the defaults above
    // (setting 2 defaults to no validation slice).
    std::optional<std::uint64_t> train_n;
    std::optional<std::uint64_t> val_n;
    // Setting 2: the alternate-corpus instance pool that becomes the test set.
    std::span<const PromptInstance> alternate;
    // Setting 8: dimensions kept for training; empty selects the default six
    // (ability, age, body_type, characteristics, culture, gender_and_sex).
    std::vector<BiasDimension> train_dimensions;
};

struct Split {
    SplitSetting setting = SplitSetting::CrossPromptScale;
    std::uint64_t seed = kDefaultSeed;
    std::vector<std::string> train;
    std::vector<std::string> val;
    std::vector<std::string> test;
};

// Deterministic function of (pool order, setting, seed, options). Sampled
// settings use an in-house Fisher-Yates over mt19937_64 so the id lists are
// identical across platforms and standard libraries.
Split make_split(std::span<const PromptInstance> pool, SplitSetting setting,
                 std::uint64_t seed = kDefaultSeed, const SplitOptions& options = {});

void write_split(const Split& split, const std::filesystem::path& path);
Split read_split(const std::filesystem::path& path);

struct InstructionManifest {
    int setting = 0;
    std::uint64_t seed = 0;
    std::uint64_t train_sets = 0;
    std::uint64_t train_instances = 0;
    std::uint64_t val_instances = 0;
    std::uint64_t test_instances = 0;
    std::string sha256;  // digest of the emitted instruction file
};

// Writes one chat example per train id, in split order:
// {"messages": [{system}, {user: prompt}, {assistant: ideal response}]}.
InstructionManifest emit_instruction_data(const Split& split,
                                          std::span<const PromptInstance> pool,
                                          const std::string& system_prompt,
                                          const std::filesystem::path& out_path);

void write_instruction_manifest(const InstructionManifest& manifest,
                                const std::filesystem::path& path);

// The fixed instruction-tuning hyperparameter file (flat `key = value` TOML).
std::string training_config_text();
void emit_training_config(const std::filesystem::path& out_path);

}  // namespace scd

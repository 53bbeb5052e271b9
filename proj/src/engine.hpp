#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "bbq.hpp"
#include "generator.hpp"
#include "metrics.hpp"
#include "probe.hpp"
#include "splits.hpp"

namespace scd {

// Every file-producing operation drops a run manifest next to its outputs:
// the command, when it ran, SHA-256 digests of every input and output file,
// and the parameters that shaped the run.
struct RunManifest {
    std::string command;
    std::string timestamp;  // ISO 8601 UTC; informative only
    std::map<std::string, std::string> params;
    std::map<std::string, std::pair<std::string, std::string>> inputs;   // name -> (path, sha256)
    std::map<std::string, std::pair<std::string, std::string>> outputs;  // name -> (path, sha256)
};

void write_run_manifest(const RunManifest& manifest, const std::filesystem::path& path);

// --- generate ----------------------------------------------------------------

struct GenerateJob {
    std::filesystem::path corpus_path;
    std::filesystem::path catalog_path;
    std::vector<Scale> scales;  // empty = all three
    std::filesystem::path out_path;
};

struct GenerateReport {
    std::uint64_t n_sets = 0;
    std::uint64_t n_instances = 0;
};

GenerateReport run_generate(const GenerateJob& job);

// --- probe --------------------------------------------------------------------

struct ResponderSpec {
    // Empty = live HTTP endpoint; otherwise one of always_engage,
    // always_decline, contact_sensitive.
    std::string mock;
    ModelEndpoint endpoint;
    ContactProbabilities probabilities;  // contact_sensitive only
    std::uint64_t mock_seed = kDefaultSeed;
};

std::unique_ptr<Responder> make_responder(const ResponderSpec& spec);

struct ProbeJob {
    std::filesystem::path dataset_path;
    std::filesystem::path out_path;
    ResponderSpec responder;
    GenerationParams params;
    int concurrency = 8;
    std::filesystem::path cache_dir;  // empty disables caching
    RetryPolicy retry;
};

ProbeSummary run_probe(const ProbeJob& job);

// --- score ---------------------------------------------------------------------

struct ScoreJob {
    std::filesystem::path dataset_path;
    std::filesystem::path responses_path;
    std::filesystem::path out_dir;
    std::vector<std::string> group_by;
    DenominatorMode denominator = DenominatorMode::Determinate;
    std::string format = "csv";  // csv | md
    std::string model_label;
    double epsilon = 0.0;
};

struct ScoreReport {
    std::uint64_t n_records = 0;
    std::uint64_t skipped_failed = 0;
};

// Writes records.jsonl, stats.json, stats.<fmt>, alignment.json and the run
// manifest into out_dir.
ScoreReport run_score(const ScoreJob& job);

// --- split ----------------------------------------------------------------------

struct SplitJob {
    std::filesystem::path dataset_path;
    std::filesystem::path out_dir;
    SplitSetting setting = SplitSetting::CrossPromptScale;
    std::uint64_t seed = kDefaultSeed;
    std::optional<std::uint64_t> train_n;
    std::optional<std::uint64_t> val_n;
    std::filesystem::path alt_dataset_path;  // setting 2
    std::vector<BiasDimension> train_dimensions;  // setting 8
    std::string system_prompt;  // system text for the instruction examples
};

// Writes split.json, instructions.jsonl, instructions.manifest.json,
// training_config.toml and the run manifest into out_dir.
InstructionManifest run_split(const SplitJob& job);

// --- compare ---------------------------------------------------------------------

struct CompareJob {
    std::filesystem::path before_stats_path;
    std::filesystem::path after_stats_path;
    std::filesystem::path out_path;
    std::string format = "csv";  // csv | md
};

// Returns the number of compared groups.
std::uint64_t run_compare(const CompareJob& job);

// --- bbq -------------------------------------------------------------------------

struct BBQJob {
    std::filesystem::path items_path;
    std::filesystem::path out_path;
    // Empty = live HTTP endpoint; otherwise "gold" or "uniform".
    std::string mock;
    ModelEndpoint endpoint;
    std::uint64_t mock_seed = kDefaultSeed;
    BBQMode mode = BBQMode::LetterChoice;
    BBQFilter filter = BBQFilter::AmbiguousOnly;
    int concurrency = 8;
    std::filesystem::path cache_dir;
    std::string label = "run";
    std::string format = "md";  // csv | md
};

BBQResult run_bbq(const BBQJob& job);

}  // namespace scd

#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "axes.hpp"
#include "generator.hpp"

namespace scd {

struct GenerationParams {
    double temperature = 0.2;
    int max_tokens = 16;
    std::string system_prompt;
};

struct ModelEndpoint {
    std::string base_url;
    std::string model_name;
    std::string auth_env;  // env var holding the bearer token; empty for local endpoints
};

enum class ResponseStatus : std::uint8_t { Ok, Failed };

struct RawResponse {
    std::string instance_id;
    std::string text;
    ResponseStatus status = ResponseStatus::Failed;
    int attempts = 0;
    // Whether the text was originally served from a pre-populated cache rather
    // than acquired live. Replays from the run cache keep the acquisition
    // record verbatim so response files are byte-stable across resumed runs;
    // per-run cache hits are counted in ProbeSummary instead.
    bool from_cache = false;
    std::string error;  // failure detail, in-memory only
};

// One attempt's outcome as seen by the retry loop.
struct AttemptResult {
    bool ok = false;
    std::string text;
    bool transient = false;        // retryable: transport error or HTTP 429/5xx
    bool connect_failure = false;  // endpoint could not be reached at all
    std::string error;
};

class Responder {
public:
    virtual ~Responder() = default;

    // Stable label for this response source; part of the cache key.
    virtual std::string name() const = 0;
    virtual AttemptResult respond(const PromptInstance& instance,
                                  const GenerationParams& params) = 0;
    virtual bool supports_option_scoring() const { return false; }
};

// Optional capability: score candidate continuations (BBQ option-score mode).
class OptionScorer {
public:
    virtual ~OptionScorer() = default;
    virtual std::array<double, 3> score_options(const std::string& prompt,
                                                const std::array<std::string, 3>& options) = 0;
};

struct RetryPolicy {
    int max_attempts = 3;
    std::chrono::milliseconds base_delay{1000};
    double multiplier = 2.0;
    double jitter = 0.25;  // +/- fraction of the delay
};

struct ProbeOptions {
    GenerationParams params;
    int max_in_flight = 8;
    std::filesystem::path cache_dir;  // empty disables the response cache
    RetryPolicy retry;
};

struct ProbeSummary {
    std::uint64_t n_ok = 0;
    std::uint64_t n_failed = 0;
    std::uint64_t n_cache_hits = 0;
    std::uint64_t n_live = 0;
};

struct ProbeOutcome {
    std::vector<RawResponse> responses;  // one per instance, in instance order
    ProbeSummary summary;
};

// SHA-256 hex over the canonical request serialization: the five fields
// (model_name, system_prompt, prompt_text, temperature, max_tokens) in that
// order, each encoded as "<decimal byte length>:<bytes>,". Temperature uses
// shortest round-trip decimal form.
std::string cache_key(std::string_view model_name, std::string_view system_prompt,
                      std::string_view prompt_text, const GenerationParams& params);

// Runs instances through the responder with bounded concurrency, consulting
// the cache before any call and writing every live result to the cache before
// returning it. If the endpoint is unreachable for all of the first 10
// instances the run aborts with ConnectivityError; other failures mark the
// instance Failed and the run continues.
ProbeOutcome probe_instances(std::span<const PromptInstance> instances, Responder& responder,
                             const ProbeOptions& options);

// Deterministic uniform draw in [0, 1) keyed by (seed, key); stable across
// platforms and independent of probe order. Shared by the scripted responders.
double deterministic_uniform(std::uint64_t seed, std::string_view key);

// Scripted responders (test oracles and offline runs).
struct ContactProbabilities {
    double none = 0.5;
    double pos = 0.5;
    double neg = 0.5;
};

std::unique_ptr<Responder> make_always_engage();
std::unique_ptr<Responder> make_always_decline();
// Draws engage/decline per instance from the contact's engage probability,
// seeded by (seed, instance_id); independent of probe order.
std::unique_ptr<Responder> make_contact_sensitive(ContactProbabilities probabilities,
                                                  std::uint64_t seed);
std::unique_ptr<Responder> make_fixed_map(std::map<std::string, std::string> by_instance_id);

// OpenAI-compatible chat-completions client.
std::unique_ptr<Responder> make_http_responder(ModelEndpoint endpoint);

// Responses file: one JSON record per line with
// {instance_id, text, status, attempts, from_cache}.
void write_responses(std::span<const RawResponse> responses,
                     const std::filesystem::path& path);
std::vector<RawResponse> read_responses(const std::filesystem::path& path);

}  // namespace scd

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "probe.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <mutex>
#include <random>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "digest.hpp"
#include "errors.hpp"

namespace scd {

namespace {

using json = nlohmann::json;

constexpr std::size_t kConnectivityCanary = 10;

std::string shortest_double(double value) {
    std::array<char, 64> buf{};
    auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
    if (ec != std::errc{}) {
        throw Error("cache_key: temperature formatting failed");
    }
    return std::string(buf.data(), end);
}

void append_field(std::string& out, std::string_view field) {
    out += std::to_string(field.size());
    out += ':';
    out += field;
    out += ',';
}

// --- response cache ---------------------------------------------------------

std::filesystem::path cache_entry_path(const std::filesystem::path& dir,
                                       const std::string& key) {
    return dir / key.substr(0, 2) / key.substr(2, 2) / (key + ".json");
}

std::optional<RawResponse> cache_read(const std::filesystem::path& dir,
                                      const std::string& key,
                                      const std::string& instance_id) {
    const auto path = cache_entry_path(dir, key);
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        return std::nullopt;
    }
    try {
        json entry = json::parse(in);
        RawResponse resp;
        resp.instance_id = instance_id;
        resp.text = entry.at("text").get<std::string>();
        resp.attempts = entry.value("attempts", 1);
        resp.from_cache = entry.value("from_cache", false);
        resp.status = ResponseStatus::Ok;
        return resp;
    } catch (const json::exception&) {
        return std::nullopt;  // corrupt entry is a miss; it will be rewritten
    }
}

void cache_write(const std::filesystem::path& dir, const std::string& key,
                 const std::string& model_name, const GenerationParams& params,
                 const RawResponse& resp) {
    const auto path = cache_entry_path(dir, key);
    std::filesystem::create_directories(path.parent_path());
    const json entry{
        {"model", model_name},
        {"temperature", params.temperature},
        {"max_tokens", params.max_tokens},
        {"instance_id", resp.instance_id},
        {"text", resp.text},
        {"attempts", resp.attempts},
        {"from_cache", resp.from_cache},
    };
    // Write-then-rename keeps concurrent writers of the same key benign.
    std::ostringstream suffix;
    suffix << ".tmp-" << std::this_thread::get_id();
    const auto tmp = path.parent_path() / (key + suffix.str());
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) {
            throw IoError("cannot write cache entry: " + tmp.string());
        }
        out << entry.dump() << '\n';
    }
    std::filesystem::rename(tmp, path);
}

// --- scripted responders ----------------------------------------------------

class AlwaysEngageResponder final : public Responder {
public:
    std::string name() const override { return "mock:always_engage"; }
    AttemptResult respond(const PromptInstance& inst, const GenerationParams&) override {
        return AttemptResult{true, std::string(engage_token(inst.scale)), false, false, ""};
    }
};

class AlwaysDeclineResponder final : public Responder {
public:
    std::string name() const override { return "mock:always_decline"; }
    AttemptResult respond(const PromptInstance& inst, const GenerationParams&) override {
        return AttemptResult{true, std::string(decline_token(inst.scale)), false, false, ""};
    }
};

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

class ContactSensitiveResponder final : public Responder {
public:
    ContactSensitiveResponder(ContactProbabilities p, std::uint64_t seed)
        : probabilities_(p), seed_(seed) {
        for (double prob : {p.none, p.pos, p.neg}) {
            if (!(prob >= 0.0 && prob <= 1.0)) {
                throw ArgumentError("contact_sensitive: probabilities must be in [0, 1]");
            }
        }
    }

    std::string name() const override {
        std::ostringstream out;
        out << "mock:contact_sensitive:none=" << probabilities_.none
            << ",pos=" << probabilities_.pos << ",neg=" << probabilities_.neg
            << ":seed=" << seed_;
        return out.str();
    }

    AttemptResult respond(const PromptInstance& inst, const GenerationParams&) override {
        double p = probabilities_.none;
        if (inst.contact == ContactType::PositiveContact) p = probabilities_.pos;
        if (inst.contact == ContactType::NegativeContact) p = probabilities_.neg;
        const bool engage = deterministic_uniform(seed_, inst.instance_id) < p;
        const auto token = engage ? engage_token(inst.scale) : decline_token(inst.scale);
        return AttemptResult{true, std::string(token), false, false, ""};
    }

private:
    ContactProbabilities probabilities_;
    std::uint64_t seed_;
};

class FixedMapResponder final : public Responder {
public:
    explicit FixedMapResponder(std::map<std::string, std::string> responses)
        : responses_(std::move(responses)) {}

    std::string name() const override { return "mock:fixed_map"; }

    AttemptResult respond(const PromptInstance& inst, const GenerationParams&) override {
        auto it = responses_.find(inst.instance_id);
        if (it == responses_.end()) {
            return AttemptResult{false, "", false, false,
                                 "fixed_map: no response for " + inst.instance_id};
        }
        return AttemptResult{true, it->second, false, false, ""};
    }

private:
    std::map<std::string, std::string> responses_;
};

// --- HTTP responder ---------------------------------------------------------

struct SplitUrl {
    std::string host_port;  // scheme://host[:port]
    std::string prefix;     // path prefix, no trailing slash
};

SplitUrl split_base_url(const std::string& base_url) {
    const auto scheme_end = base_url.find("://");
    if (scheme_end == std::string::npos) {
        throw ArgumentError("endpoint base_url must start with http:// or https://: " +
                            base_url);
    }
    const std::string scheme = base_url.substr(0, scheme_end);
    if (scheme != "http" && scheme != "https") {
        throw ArgumentError("unsupported endpoint scheme: " + scheme);
    }
    const auto path_start = base_url.find('/', scheme_end + 3);
    SplitUrl split;
    if (path_start == std::string::npos) {
        split.host_port = base_url;
    } else {
        split.host_port = base_url.substr(0, path_start);
        split.prefix = base_url.substr(path_start);
        while (!split.prefix.empty() && split.prefix.back() == '/') {
            split.prefix.pop_back();
        }
    }
    if (split.host_port.size() <= scheme_end + 3) {
        throw ArgumentError("endpoint base_url has no host: " + base_url);
    }
    return split;
}

bool transient_status(int status) {
    return status == 429 || (status >= 500 && status < 600);
}

class HttpResponder final : public Responder {
public:
    explicit HttpResponder(ModelEndpoint endpoint)
        : endpoint_(std::move(endpoint)), url_(split_base_url(endpoint_.base_url)) {
        if (!endpoint_.auth_env.empty()) {
            if (const char* token = std::getenv(endpoint_.auth_env.c_str())) {
                bearer_ = token;
            }
        }
    }

    std::string name() const override { return endpoint_.model_name; }

    AttemptResult respond(const PromptInstance& inst, const GenerationParams& params) override {
        httplib::Client client(url_.host_port);
        client.set_connection_timeout(std::chrono::seconds(10));
        client.set_read_timeout(std::chrono::seconds(120));
        httplib::Headers headers;
        if (!bearer_.empty()) {
            headers.emplace("Authorization", "Bearer " + bearer_);
        }
        const json body{
            {"model", endpoint_.model_name},
            {"messages",
             json::array({
                 json{{"role", "system"}, {"content", params.system_prompt}},
                 json{{"role", "user"}, {"content", inst.text}},
             })},
            {"temperature", params.temperature},
            {"max_tokens", params.max_tokens},
        };
        auto result = client.Post(url_.prefix + "/chat/completions", headers, body.dump(),
                                  "application/json");
        if (!result) {
            const auto err = result.error();
            const bool connect = err == httplib::Error::Connection ||
                                 err == httplib::Error::ConnectionTimeout ||
                                 err == httplib::Error::SSLConnection;
            return AttemptResult{false, "", true, connect,
                                 "transport error: " + httplib::to_string(err)};
        }
        if (result->status != 200) {
            return AttemptResult{false, "", transient_status(result->status), false,
                                 "http status " + std::to_string(result->status) + ": " +
                                     result->body.substr(0, 200)};
        }
        try {
            json parsed = json::parse(result->body);
            return AttemptResult{
                true, parsed.at("choices").at(0).at("message").at("content").get<std::string>(),
                false, false, ""};
        } catch (const json::exception& e) {
            return AttemptResult{false, "", false, false,
                                 std::string("malformed completion response: ") + e.what()};
        }
    }

private:
    ModelEndpoint endpoint_;
    SplitUrl url_;
    std::string bearer_;
};

std::chrono::milliseconds backoff_delay(const RetryPolicy& retry, int completed_attempts) {
    double delay = static_cast<double>(retry.base_delay.count());
    for (int i = 1; i < completed_attempts; ++i) {
        delay *= retry.multiplier;
    }
    if (retry.jitter > 0.0) {
        thread_local std::mt19937_64 rng{std::random_device{}()};
        std::uniform_real_distribution<double> spread(1.0 - retry.jitter, 1.0 + retry.jitter);
        delay *= spread(rng);
    }
    return std::chrono::milliseconds(std::max<long long>(0, static_cast<long long>(delay)));
}

}  // namespace

double deterministic_uniform(std::uint64_t seed, std::string_view key) {
    std::uint64_t h = splitmix64(seed);
    for (unsigned char c : key) {
        h = (h ^ c) * 0x100000001b3ULL;
    }
    h = splitmix64(h);
    return static_cast<double>(h >> 11) * 0x1.0p-53;
}

std::string cache_key(std::string_view model_name, std::string_view system_prompt,
                      std::string_view prompt_text, const GenerationParams& params) {
    std::string canonical;
    canonical.reserve(model_name.size() + system_prompt.size() + prompt_text.size() + 64);
    append_field(canonical, model_name);
    append_field(canonical, system_prompt);
    append_field(canonical, prompt_text);
    append_field(canonical, shortest_double(params.temperature));
    append_field(canonical, std::to_string(params.max_tokens));
    return sha256_hex(canonical);
}

ProbeOutcome probe_instances(std::span<const PromptInstance> instances, Responder& responder,
                             const ProbeOptions& options) {
    if (instances.empty()) {
        throw ArgumentError("probe_instances: instance list is empty");
    }
    if (options.max_in_flight < 1) {
        throw ArgumentError("probe_instances: max_in_flight must be >= 1");
    }

    const std::string responder_name = responder.name();
    const bool use_cache = !options.cache_dir.empty();
    if (use_cache) {
        std::filesystem::create_directories(options.cache_dir);
    }

    const std::size_t n = instances.size();
    std::vector<RawResponse> results(n);
    std::vector<unsigned char> connect_failed(n, 0);
    std::atomic<std::uint64_t> cache_hits{0};

    std::mutex failure_mutex;
    std::exception_ptr failure;
    std::atomic<bool> aborted{false};

    auto process_one = [&](std::size_t i) {
        const PromptInstance& inst = instances[i];
        std::string key;
        if (use_cache) {
            key = cache_key(responder_name, options.params.system_prompt, inst.text,
                            options.params);
            if (auto hit = cache_read(options.cache_dir, key, inst.instance_id)) {
                results[i] = std::move(*hit);
                cache_hits.fetch_add(1, std::memory_order_relaxed);
                return;
            }
        }
        AttemptResult last;
        int attempts = 0;
        while (attempts < options.retry.max_attempts) {
            ++attempts;
            last = responder.respond(inst, options.params);
            if (last.ok || !last.transient) {
                break;
            }
            if (attempts < options.retry.max_attempts) {
                std::this_thread::sleep_for(backoff_delay(options.retry, attempts));
            }
        }
        RawResponse resp;
        resp.instance_id = inst.instance_id;
        resp.attempts = attempts;
        if (last.ok) {
            resp.text = std::move(last.text);
            resp.status = ResponseStatus::Ok;
            if (use_cache) {
                cache_write(options.cache_dir, key, responder_name, options.params, resp);
            }
        } else {
            resp.status = ResponseStatus::Failed;
            resp.error = std::move(last.error);
            connect_failed[i] = last.connect_failure ? 1 : 0;
        }
        results[i] = std::move(resp);
    };

    auto run_range = [&](std::size_t lo, std::size_t hi) {
        if (lo >= hi) {
            return;
        }
        std::atomic<std::size_t> next{lo};
        const std::size_t workers =
            std::min<std::size_t>(static_cast<std::size_t>(options.max_in_flight), hi - lo);
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                while (!aborted.load(std::memory_order_relaxed)) {
                    const std::size_t i = next.fetch_add(1, std::memory_order_relaxed);
                    if (i >= hi) {
                        return;
                    }
                    try {
                        process_one(i);
                    } catch (...) {
                        std::lock_guard<std::mutex> lock(failure_mutex);
                        if (!failure) {
                            failure = std::current_exception();
                        }
                        aborted.store(true, std::memory_order_relaxed);
                        return;
                    }
                }
            });
        }
        for (auto& t : pool) {
            t.join();
        }
        if (failure) {
            std::rethrow_exception(failure);
        }
    };

    // Canary batch: abort early when the endpoint is plainly unreachable.
    const std::size_t canary = std::min(kConnectivityCanary, n);
    run_range(0, canary);
    bool all_unreachable = true;
    for (std::size_t i = 0; i < canary; ++i) {
        if (results[i].status == ResponseStatus::Ok || !connect_failed[i]) {
            all_unreachable = false;
            break;
        }
    }
    if (all_unreachable) {
        throw ConnectivityError("endpoint unreachable for the first " +
                                std::to_string(canary) + " instances: " + results[0].error);
    }
    run_range(canary, n);

    ProbeOutcome outcome;
    outcome.summary.n_cache_hits = cache_hits.load();
    for (auto& resp : results) {
        if (resp.status == ResponseStatus::Ok) {
            ++outcome.summary.n_ok;
        } else {
            ++outcome.summary.n_failed;
        }
    }
    outcome.summary.n_live = n - outcome.summary.n_cache_hits;
    outcome.responses = std::move(results);
    return outcome;
}

std::unique_ptr<Responder> make_always_engage() {
    return std::make_unique<AlwaysEngageResponder>();
}

std::unique_ptr<Responder> make_always_decline() {
    return std::make_unique<AlwaysDeclineResponder>();
}

std::unique_ptr<Responder> make_contact_sensitive(ContactProbabilities probabilities,
                                                  std::uint64_t seed) {
    return std::make_unique<ContactSensitiveResponder>(probabilities, seed);
}

std::unique_ptr<Responder> make_fixed_map(std::map<std::string, std::string> by_instance_id) {
    return std::make_unique<FixedMapResponder>(std::move(by_instance_id));
}

std::unique_ptr<Responder> make_http_responder(ModelEndpoint endpoint) {
    return std::make_unique<HttpResponder>(std::move(endpoint));
}

void write_responses(std::span<const RawResponse> responses,
                     const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot open responses file for writing: " + path.string());
    }
    for (const RawResponse& resp : responses) {
        const json rec{
            {"instance_id", resp.instance_id},
            {"text", resp.text},
            {"status", resp.status == ResponseStatus::Ok ? "ok" : "failed"},
            {"attempts", resp.attempts},
            {"from_cache", resp.from_cache},
        };
        out << rec.dump() << '\n';
    }
    if (!out) {
        throw IoError("write failed: " + path.string());
    }
}

std::vector<RawResponse> read_responses(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open responses file: " + path.string());
    }
    std::vector<RawResponse> responses;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) {
            continue;
        }
        json rec;
        try {
            rec = json::parse(line);
        } catch (const json::parse_error& e) {
            throw ParseError("responses " + path.string() + " line " +
                             std::to_string(line_no) + ": " + e.what());
        }
        RawResponse resp;
        resp.instance_id = rec.at("instance_id").get<std::string>();
        resp.text = rec.value("text", "");
        resp.status =
            rec.value("status", "failed") == "ok" ? ResponseStatus::Ok : ResponseStatus::Failed;
        resp.attempts = rec.value("attempts", 0);
        resp.from_cache = rec.value("from_cache", false);
        responses.push_back(std::move(resp));
    }
    return responses;
}

}  // namespace scd

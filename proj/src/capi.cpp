#include <scd/scd.h>

#include <cstdlib>
#include <cstring>
#include <string>
#include <vector>

#include "engine.hpp"
#include "errors.hpp"
#include "templates.hpp"

namespace {

thread_local std::string g_last_error;

char* dup_string(const std::string& text) {
    char* out = static_cast<char*>(std::malloc(text.size() + 1));
    if (out != nullptr) {
        std::memcpy(out, text.c_str(), text.size() + 1);
    }
    return out;
}

std::string opt_string(const char* value, const char* fallback = "") {
    return value != nullptr ? value : fallback;
}

scd_status fail(scd_status status, const std::string& message) {
    g_last_error = message;
    return status;
}

template <typename Fn>
scd_status guarded(Fn&& fn) {
    try {
        return fn();
    } catch (const scd::ValidationError& e) {
        return fail(SCD_E_VALIDATION, e.what());
    } catch (const scd::ArgumentError& e) {  // includes CapabilityError
        return fail(SCD_E_ARGUMENT, e.what());
    } catch (const scd::ConnectivityError& e) {
        return fail(SCD_E_CONNECTIVITY, e.what());
    } catch (const scd::IoError& e) {  // includes ParseError
        return fail(SCD_E_IO, e.what());
    } catch (const std::exception& e) {
        return fail(SCD_E_INTERNAL, e.what());
    } catch (...) {
        return fail(SCD_E_INTERNAL, "unknown error");
    }
}

std::vector<std::string> split_csv_list(const std::string& text) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= text.size()) {
        const std::size_t comma = text.find(',', start);
        const std::size_t end = comma == std::string::npos ? text.size() : comma;
        std::string item = text.substr(start, end - start);
        // trim surrounding spaces
        while (!item.empty() && item.front() == ' ') item.erase(item.begin());
        while (!item.empty() && item.back() == ' ') item.pop_back();
        if (!item.empty()) {
            out.push_back(std::move(item));
        }
        if (comma == std::string::npos) {
            break;
        }
        start = comma + 1;
    }
    return out;
}

std::vector<scd::Scale> parse_scales(const char* scales) {
    std::vector<scd::Scale> out;
    for (const std::string& token : split_csv_list(opt_string(scales))) {
        const auto scale = scd::scale_from_tag(token);
        if (!scale) {
            throw scd::ArgumentError("unknown scale tag '" + token + "'");
        }
        out.push_back(*scale);
    }
    return out;
}

std::vector<scd::BiasDimension> parse_dimensions(const char* dims) {
    std::vector<scd::BiasDimension> out;
    for (const std::string& token : split_csv_list(opt_string(dims))) {
        const auto dim = scd::dimension_from_tag(token);
        if (!dim) {
            throw scd::ArgumentError("unknown dimension tag '" + token + "'");
        }
        out.push_back(*dim);
    }
    return out;
}

scd::ModelEndpoint endpoint_from(const char* base_url, const char* model,
                                 const char* api_key_env) {
    scd::ModelEndpoint endpoint;
    endpoint.base_url = opt_string(base_url);
    endpoint.model_name = opt_string(model);
    endpoint.auth_env = opt_string(api_key_env, "OPENAI_API_KEY");
    return endpoint;
}

double clamp_probability(double p) {
    return (p >= 0.0 && p <= 1.0) ? p : 0.5;
}

void store(uint64_t* slot, uint64_t value) {
    if (slot != nullptr) {
        *slot = value;
    }
}

}  // namespace

extern "C" {

struct scd_catalog {
    scd::Catalog catalog;
};

struct scd_corpus {
    scd::TemplateCorpus corpus;
};

const char* scd_last_error(void) { return g_last_error.c_str(); }

void scd_string_free(char* s) { std::free(s); }

scd_status scd_catalog_load(const char* path, scd_catalog** out) {
    if (path == nullptr || out == nullptr) {
        return fail(SCD_E_ARGUMENT, "scd_catalog_load: path and out must be non-null");
    }
    return guarded([&]() {
        auto* handle = new scd_catalog{scd::load_descriptor_catalog(path)};
        *out = handle;
        return SCD_OK;
    });
}

void scd_catalog_free(scd_catalog* catalog) { delete catalog; }

scd_status scd_catalog_count(const scd_catalog* catalog, uint64_t* count_out) {
    if (catalog == nullptr || count_out == nullptr) {
        return fail(SCD_E_ARGUMENT, "scd_catalog_count: catalog and out must be non-null");
    }
    *count_out = catalog->catalog.size();
    return SCD_OK;
}

scd_status scd_corpus_load(const char* path, scd_corpus** out) {
    if (path == nullptr || out == nullptr) {
        return fail(SCD_E_ARGUMENT, "scd_corpus_load: path and out must be non-null");
    }
    return guarded([&]() {
        auto* handle = new scd_corpus{scd::load_corpus(path)};
        *out = handle;
        return SCD_OK;
    });
}

void scd_corpus_free(scd_corpus* corpus) { delete corpus; }

scd_status scd_corpus_validate(const scd_corpus* corpus, char** report_out) {
    if (corpus == nullptr) {
        return fail(SCD_E_ARGUMENT, "scd_corpus_validate: corpus must be non-null");
    }
    return guarded([&]() {
        const scd::CoverageReport report = scd::validate_coverage(corpus->corpus);
        if (report_out != nullptr) {
            *report_out = dup_string(report.to_string());
        }
        if (!report.complete) {
            return fail(SCD_E_VALIDATION, "corpus incomplete:\n" + report.to_string());
        }
        return SCD_OK;
    });
}

scd_status scd_corpus_system_prompt(const scd_corpus* corpus, char** prompt_out) {
    if (corpus == nullptr || prompt_out == nullptr) {
        return fail(SCD_E_ARGUMENT,
                    "scd_corpus_system_prompt: corpus and out must be non-null");
    }
    *prompt_out = dup_string(corpus->corpus.system_prompt);
    return SCD_OK;
}

scd_status scd_generate(const scd_generate_opts* opts, uint64_t* n_sets_out,
                        uint64_t* n_instances_out) {
    if (opts == nullptr || opts->corpus_path == nullptr || opts->catalog_path == nullptr ||
        opts->out_path == nullptr) {
        return fail(SCD_E_ARGUMENT,
                    "scd_generate: opts, corpus_path, catalog_path, out_path are required");
    }
    return guarded([&]() {
        scd::GenerateJob job;
        job.corpus_path = opts->corpus_path;
        job.catalog_path = opts->catalog_path;
        job.scales = parse_scales(opts->scales);
        job.out_path = opts->out_path;
        const scd::GenerateReport report = scd::run_generate(job);
        store(n_sets_out, report.n_sets);
        store(n_instances_out, report.n_instances);
        return SCD_OK;
    });
}

scd_status scd_probe(const scd_probe_opts* opts, uint64_t* n_ok_out, uint64_t* n_failed_out,
                     uint64_t* n_cache_hits_out) {
    if (opts == nullptr || opts->dataset_path == nullptr || opts->out_path == nullptr) {
        return fail(SCD_E_ARGUMENT, "scd_probe: opts, dataset_path, out_path are required");
    }
    return guarded([&]() {
        scd::ProbeJob job;
        job.dataset_path = opts->dataset_path;
        job.out_path = opts->out_path;
        job.responder.mock = opt_string(opts->mock);
        job.responder.endpoint =
            endpoint_from(opts->base_url, opts->model, opts->api_key_env);
        job.responder.mock_seed = opts->seed;
        job.responder.probabilities.none = clamp_probability(opts->p_none);
        job.responder.probabilities.pos = clamp_probability(opts->p_pos);
        job.responder.probabilities.neg = clamp_probability(opts->p_neg);
        job.params.system_prompt = opt_string(opts->system_prompt);
        if (opts->temperature >= 0.0) {
            job.params.temperature = opts->temperature;
        }
        if (opts->max_tokens > 0) {
            job.params.max_tokens = opts->max_tokens;
        }
        if (opts->concurrency > 0) {
            job.concurrency = opts->concurrency;
        }
        job.cache_dir = opt_string(opts->cache_dir);
        if (opts->retry_attempts > 0) {
            job.retry.max_attempts = opts->retry_attempts;
        }
        if (opts->retry_base_ms > 0) {
            job.retry.base_delay = std::chrono::milliseconds(opts->retry_base_ms);
        }
        const scd::ProbeSummary summary = scd::run_probe(job);
        store(n_ok_out, summary.n_ok);
        store(n_failed_out, summary.n_failed);
        store(n_cache_hits_out, summary.n_cache_hits);
        if (summary.n_failed > 0) {
            return fail(SCD_E_PARTIAL, std::to_string(summary.n_failed) +
                                           " instances failed; responses file written");
        }
        return SCD_OK;
    });
}

scd_status scd_score(const scd_score_opts* opts, uint64_t* n_records_out,
                     uint64_t* skipped_failed_out) {
    if (opts == nullptr || opts->dataset_path == nullptr || opts->responses_path == nullptr ||
        opts->out_dir == nullptr) {
        return fail(SCD_E_ARGUMENT,
                    "scd_score: opts, dataset_path, responses_path, out_dir are required");
    }
    return guarded([&]() {
        scd::ScoreJob job;
        job.dataset_path = opts->dataset_path;
        job.responses_path = opts->responses_path;
        job.out_dir = opts->out_dir;
        job.group_by = split_csv_list(opt_string(opts->group_by));
        const std::string denominator = opt_string(opts->denominator, "determinate");
        const auto mode = scd::denominator_from_tag(denominator);
        if (!mode) {
            throw scd::ArgumentError("unknown denominator '" + denominator +
                                     "' (expected determinate or total)");
        }
        job.denominator = *mode;
        job.format = opt_string(opts->format, "csv");
        job.model_label = opt_string(opts->model_label);
        job.epsilon = opts->epsilon > 0.0 ? opts->epsilon : 0.0;
        const scd::ScoreReport report = scd::run_score(job);
        store(n_records_out, report.n_records);
        store(skipped_failed_out, report.skipped_failed);
        return SCD_OK;
    });
}

scd_status scd_split(const scd_split_opts* opts, uint64_t* train_out, uint64_t* val_out,
                     uint64_t* test_out) {
    if (opts == nullptr || opts->dataset_path == nullptr || opts->out_dir == nullptr) {
        return fail(SCD_E_ARGUMENT, "scd_split: opts, dataset_path, out_dir are required");
    }
    return guarded([&]() {
        scd::SplitJob job;
        job.dataset_path = opts->dataset_path;
        job.out_dir = opts->out_dir;
        const auto setting = scd::setting_from_number(opts->setting);
        if (!setting) {
            throw scd::ArgumentError("setting must be 1..8, got " +
                                     std::to_string(opts->setting));
        }
        job.setting = *setting;
        job.seed = opts->seed;
        if (opts->train_n >= 0) {
            job.train_n = static_cast<std::uint64_t>(opts->train_n);
        }
        if (opts->val_n >= 0) {
            job.val_n = static_cast<std::uint64_t>(opts->val_n);
        }
        job.alt_dataset_path = opt_string(opts->alt_dataset_path);
        job.train_dimensions = parse_dimensions(opts->train_dimensions);
        job.system_prompt = opt_string(opts->system_prompt);
        const scd::InstructionManifest manifest = scd::run_split(job);
        store(train_out, manifest.train_instances);
        store(val_out, manifest.val_instances);
        store(test_out, manifest.test_instances);
        return SCD_OK;
    });
}

scd_status scd_emit_training_config(const char* out_path) {
    if (out_path == nullptr) {
        return fail(SCD_E_ARGUMENT, "scd_emit_training_config: out_path is required");
    }
    return guarded([&]() {
        scd::emit_training_config(out_path);
        return SCD_OK;
    });
}

scd_status scd_compare(const scd_compare_opts* opts, uint64_t* n_groups_out) {
    if (opts == nullptr || opts->before_stats_path == nullptr ||
        opts->after_stats_path == nullptr || opts->out_path == nullptr) {
        return fail(SCD_E_ARGUMENT,
                    "scd_compare: opts, before_stats_path, after_stats_path, out_path are "
                    "required");
    }
    return guarded([&]() {
        scd::CompareJob job;
        job.before_stats_path = opts->before_stats_path;
        job.after_stats_path = opts->after_stats_path;
        job.out_path = opts->out_path;
        job.format = opt_string(opts->format, "csv");
        store(n_groups_out, scd::run_compare(job));
        return SCD_OK;
    });
}

scd_status scd_bbq(const scd_bbq_opts* opts, double* accuracy_out, uint64_t* n_items_out) {
    if (opts == nullptr || opts->items_path == nullptr || opts->out_path == nullptr) {
        return fail(SCD_E_ARGUMENT, "scd_bbq: opts, items_path, out_path are required");
    }
    return guarded([&]() {
        scd::BBQJob job;
        job.items_path = opts->items_path;
        job.out_path = opts->out_path;
        job.mock = opt_string(opts->mock);
        job.endpoint = endpoint_from(opts->base_url, opts->model, opts->api_key_env);
        job.mock_seed = opts->seed;
        const std::string mode_tag = opt_string(opts->mode, "letter");
        const auto mode = scd::bbq_mode_from_tag(mode_tag);
        if (!mode) {
            throw scd::ArgumentError("unknown bbq mode '" + mode_tag +
                                     "' (expected letter or option_score)");
        }
        job.mode = *mode;
        const std::string filter_tag = opt_string(opts->filter, "ambiguous");
        const auto filter = scd::bbq_filter_from_tag(filter_tag);
        if (!filter) {
            throw scd::ArgumentError("unknown bbq filter '" + filter_tag +
                                     "' (expected ambiguous, disambiguated, or all)");
        }
        job.filter = *filter;
        if (opts->concurrency > 0) {
            job.concurrency = opts->concurrency;
        }
        job.cache_dir = opt_string(opts->cache_dir);
        job.label = opt_string(opts->label, "run");
        job.format = opt_string(opts->format, "md");
        const scd::BBQResult result = scd::run_bbq(job);
        if (accuracy_out != nullptr) {
            *accuracy_out = result.overall.accuracy;
        }
        store(n_items_out, result.overall.n);
        return SCD_OK;
    });
}

}  // extern "C"

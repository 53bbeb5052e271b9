#include <cstdint>
#include <cstdio>
#include <string>

#include <CLI11.hpp>
#include <scd/scd.h>

namespace {

int exit_code_for(scd_status status) {
    switch (status) {
        case SCD_OK: return 0;
        case SCD_E_VALIDATION: return 1;
        case SCD_E_ARGUMENT: return 1;
        case SCD_E_IO: return 2;
        case SCD_E_CONNECTIVITY: return 3;
        case SCD_E_PARTIAL: return 4;
        case SCD_E_INTERNAL: return 2;
    }
    return 2;
}

int finish(scd_status status) {
    if (status != SCD_OK && status != SCD_E_PARTIAL) {
        std::fprintf(stderr, "error: %s\n", scd_last_error());
    }
    return exit_code_for(status);
}

const char* opt(const std::string& value) { return value.empty() ? nullptr : value.c_str(); }

struct ValidateArgs {
    std::string corpus, catalog;
};

int cmd_validate(const ValidateArgs& args) {
    scd_corpus* corpus = nullptr;
    scd_status status = scd_corpus_load(args.corpus.c_str(), &corpus);
    if (status != SCD_OK) {
        return finish(status);
    }
    char* report = nullptr;
    status = scd_corpus_validate(corpus, &report);
    if (report != nullptr) {
        std::printf("%s\n", report);
        scd_string_free(report);
    }
    scd_corpus_free(corpus);
    if (status != SCD_OK) {
        return finish(status);
    }
    scd_catalog* catalog = nullptr;
    status = scd_catalog_load(args.catalog.c_str(), &catalog);
    if (status != SCD_OK) {
        return finish(status);
    }
    uint64_t descriptors = 0;
    scd_catalog_count(catalog, &descriptors);
    scd_catalog_free(catalog);
    std::printf("catalog: %llu descriptors\n", static_cast<unsigned long long>(descriptors));
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Social-contact bias probing and debiasing toolkit"};
    app.require_subcommand(1);

    // validate ---------------------------------------------------------------
    ValidateArgs validate_args;
    CLI::App* validate = app.add_subcommand("validate", "Check corpus coverage and catalog");
    validate->add_option("--corpus", validate_args.corpus, "Template corpus JSON")->required();
    validate->add_option("--catalog", validate_args.catalog, "Descriptor catalog JSON")
        ->required();

    // generate ---------------------------------------------------------------
    std::string gen_corpus, gen_catalog, gen_scales, gen_out;
    CLI::App* generate = app.add_subcommand("generate", "Generate the prompt dataset");
    generate->add_option("--corpus", gen_corpus, "Template corpus JSON")->required();
    generate->add_option("--catalog", gen_catalog, "Descriptor catalog JSON")->required();
    generate->add_option("--scales", gen_scales,
                         "Comma-separated scale tags (default: all three)");
    generate->add_option("--out", gen_out, "Output dataset file")->required();

    // probe ------------------------------------------------------------------
    std::string pr_dataset, pr_out, pr_mock, pr_endpoint, pr_model, pr_key_env = "OPENAI_API_KEY";
    std::string pr_system, pr_cache;
    double pr_temperature = 0.2, pr_p_none = 0.5, pr_p_pos = 0.5, pr_p_neg = 0.5;
    int pr_max_tokens = 16, pr_concurrency = 8, pr_retry = 3, pr_retry_ms = 1000;
    std::uint64_t pr_seed = 42;
    CLI::App* probe = app.add_subcommand("probe", "Send dataset prompts to a responder");
    probe->add_option("--dataset", pr_dataset, "Dataset file from generate")->required();
    probe->add_option("--out", pr_out, "Output responses file")->required();
    probe->add_option("--mock", pr_mock,
                      "Offline policy: always_engage, always_decline, contact_sensitive");
    probe->add_option("--endpoint", pr_endpoint, "Chat-completions base URL");
    probe->add_option("--model", pr_model, "Model name sent to the endpoint");
    probe->add_option("--api-key-env", pr_key_env, "Env var holding the bearer token");
    probe->add_option("--system-prompt", pr_system, "System message for each request");
    probe->add_option("--temperature", pr_temperature, "Sampling temperature");
    probe->add_option("--max-tokens", pr_max_tokens, "Completion token cap");
    probe->add_option("--concurrency", pr_concurrency, "Max in-flight requests");
    probe->add_option("--cache-dir", pr_cache, "Response cache directory");
    probe->add_option("--seed", pr_seed, "Mock draw seed");
    probe->add_option("--p-none", pr_p_none, "contact_sensitive: engage p, no contact");
    probe->add_option("--p-pos", pr_p_pos, "contact_sensitive: engage p, positive contact");
    probe->add_option("--p-neg", pr_p_neg, "contact_sensitive: engage p, negative contact");
    probe->add_option("--retry-attempts", pr_retry, "Attempts per instance");
    probe->add_option("--retry-base-ms", pr_retry_ms, "Initial retry backoff (ms)");

    // score ------------------------------------------------------------------
    std::string sc_dataset, sc_responses, sc_out_dir, sc_group_by, sc_denominator = "determinate";
    std::string sc_format = "csv", sc_model_label;
    double sc_epsilon = 0.0;
    CLI::App* score = app.add_subcommand("score", "Classify responses and aggregate bias stats");
    score->add_option("--dataset", sc_dataset, "Dataset file")->required();
    score->add_option("--responses", sc_responses, "Responses file from probe")->required();
    score->add_option("--out-dir", sc_out_dir, "Output directory")->required();
    score->add_option("--group-by", sc_group_by,
                      "Comma-separated axes: scale, contact, scenario, dimension, principle, "
                      "action");
    score->add_option("--denominator", sc_denominator, "determinate (default) or total");
    score->add_option("--format", sc_format, "Stats table format: csv or md");
    score->add_option("--model-label", sc_model_label, "Label prefixed to every group");
    score->add_option("--epsilon", sc_epsilon, "Alignment margin in percentage points");

    // split ------------------------------------------------------------------
    std::string sp_dataset, sp_out_dir, sp_alt, sp_dims, sp_corpus, sp_system;
    int sp_setting = 0;
    std::uint64_t sp_seed = 42;
    std::int64_t sp_train_n = -1, sp_val_n = -1;
    CLI::App* split = app.add_subcommand("split", "Build a generalization split plus tuning data");
    split->add_option("--dataset", sp_dataset, "Dataset file")->required();
    split->add_option("--out-dir", sp_out_dir, "Output directory")->required();
    split->add_option("--setting", sp_setting, "Setting number 1..8")
        ->required()
        ->check(CLI::Range(1, 8));
    split->add_option("--seed", sp_seed, "Shuffle seed");
    split->add_option("--train-n", sp_train_n, "Train size (settings 1-2)");
    split->add_option("--val-n", sp_val_n, "Validation size (settings 1-2)");
    split->add_option("--alt-dataset", sp_alt, "Alternate-corpus dataset (setting 2)");
    split->add_option("--train-dimensions", sp_dims,
                      "Comma-separated train dimensions (setting 8)");
    split->add_option("--corpus", sp_corpus, "Corpus whose system prompt heads each example");
    split->add_option("--system-prompt", sp_system, "Literal system prompt (overrides --corpus)");

    // compare ----------------------------------------------------------------
    std::string cp_before, cp_after, cp_out, cp_format = "csv";
    CLI::App* compare = app.add_subcommand("compare", "Diff two scored runs");
    compare->add_option("--before", cp_before, "stats.json of the baseline run")->required();
    compare->add_option("--after", cp_after, "stats.json of the comparison run")->required();
    compare->add_option("--out", cp_out, "Output delta table")->required();
    compare->add_option("--format", cp_format, "csv or md");

    // bbq --------------------------------------------------------------------
    std::string bq_items, bq_out, bq_mock, bq_endpoint, bq_model, bq_key_env = "OPENAI_API_KEY";
    std::string bq_mode = "letter", bq_filter = "ambiguous", bq_cache, bq_label = "run";
    std::string bq_format = "md";
    int bq_concurrency = 8;
    std::uint64_t bq_seed = 42;
    CLI::App* bbq = app.add_subcommand("bbq", "Evaluate multiple-choice accuracy on BBQ items");
    bbq->add_option("--items", bq_items, "BBQ newline-delimited JSON")->required();
    bbq->add_option("--out", bq_out, "Output result table")->required();
    bbq->add_option("--mock", bq_mock, "Offline policy: gold or uniform");
    bbq->add_option("--endpoint", bq_endpoint, "Chat-completions base URL");
    bbq->add_option("--model", bq_model, "Model name sent to the endpoint");
    bbq->add_option("--api-key-env", bq_key_env, "Env var holding the bearer token");
    bbq->add_option("--mode", bq_mode, "letter (default) or option_score");
    bbq->add_option("--filter", bq_filter, "ambiguous (default), disambiguated, or all");
    bbq->add_option("--concurrency", bq_concurrency, "Max in-flight requests");
    bbq->add_option("--cache-dir", bq_cache, "Response cache directory");
    bbq->add_option("--seed", bq_seed, "Uniform mock seed");
    bbq->add_option("--label", bq_label, "Row label in the result table");
    bbq->add_option("--format", bq_format, "md (default) or csv");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    if (validate->parsed()) {
        return cmd_validate(validate_args);
    }

    if (generate->parsed()) {
        scd_generate_opts opts{};
        opts.corpus_path = gen_corpus.c_str();
        opts.catalog_path = gen_catalog.c_str();
        opts.scales = opt(gen_scales);
        opts.out_path = gen_out.c_str();
        uint64_t n_sets = 0, n_instances = 0;
        const scd_status status = scd_generate(&opts, &n_sets, &n_instances);
        if (status == SCD_OK) {
            std::printf("wrote %llu sets / %llu instances to %s\n",
                        static_cast<unsigned long long>(n_sets),
                        static_cast<unsigned long long>(n_instances), gen_out.c_str());
        }
        return finish(status);
    }

    if (probe->parsed()) {
        scd_probe_opts opts{};
        opts.dataset_path = pr_dataset.c_str();
        opts.out_path = pr_out.c_str();
        opts.mock = opt(pr_mock);
        opts.base_url = opt(pr_endpoint);
        opts.model = opt(pr_model);
        opts.api_key_env = pr_key_env.c_str();
        opts.system_prompt = opt(pr_system);
        opts.temperature = pr_temperature;
        opts.max_tokens = pr_max_tokens;
        opts.concurrency = pr_concurrency;
        opts.cache_dir = opt(pr_cache);
        opts.seed = pr_seed;
        opts.p_none = pr_p_none;
        opts.p_pos = pr_p_pos;
        opts.p_neg = pr_p_neg;
        opts.retry_attempts = pr_retry;
        opts.retry_base_ms = pr_retry_ms;
        uint64_t n_ok = 0, n_failed = 0, n_hits = 0;
        const scd_status status = scd_probe(&opts, &n_ok, &n_failed, &n_hits);
        if (status == SCD_OK || status == SCD_E_PARTIAL) {
            std::printf("probed: %llu ok, %llu failed, %llu cache hits\n",
                        static_cast<unsigned long long>(n_ok),
                        static_cast<unsigned long long>(n_failed),
                        static_cast<unsigned long long>(n_hits));
        }
        if (status == SCD_E_PARTIAL) {
            std::fprintf(stderr, "warning: %s\n", scd_last_error());
        }
        return finish(status);
    }

    if (score->parsed()) {
        scd_score_opts opts{};
        opts.dataset_path = sc_dataset.c_str();
        opts.responses_path = sc_responses.c_str();
        opts.out_dir = sc_out_dir.c_str();
        opts.group_by = opt(sc_group_by);
        opts.denominator = sc_denominator.c_str();
        opts.format = sc_format.c_str();
        opts.model_label = opt(sc_model_label);
        opts.epsilon = sc_epsilon;
        uint64_t n_records = 0, skipped = 0;
        const scd_status status = scd_score(&opts, &n_records, &skipped);
        if (status == SCD_OK) {
            std::printf("scored %llu records (%llu failed responses skipped) into %s\n",
                        static_cast<unsigned long long>(n_records),
                        static_cast<unsigned long long>(skipped), sc_out_dir.c_str());
        }
        return finish(status);
    }

    if (split->parsed()) {
        std::string system_prompt = sp_system;
        if (system_prompt.empty() && !sp_corpus.empty()) {
            scd_corpus* corpus = nullptr;
            const scd_status status = scd_corpus_load(sp_corpus.c_str(), &corpus);
            if (status != SCD_OK) {
                return finish(status);
            }
            char* prompt = nullptr;
            scd_corpus_system_prompt(corpus, &prompt);
            if (prompt != nullptr) {
                system_prompt = prompt;
                scd_string_free(prompt);
            }
            scd_corpus_free(corpus);
        }
        scd_split_opts opts{};
        opts.dataset_path = sp_dataset.c_str();
        opts.out_dir = sp_out_dir.c_str();
        opts.setting = sp_setting;
        opts.seed = sp_seed;
        opts.train_n = sp_train_n;
        opts.val_n = sp_val_n;
        opts.alt_dataset_path = opt(sp_alt);
        opts.train_dimensions = opt(sp_dims);
        opts.system_prompt = system_prompt.c_str();
        uint64_t train = 0, val = 0, test = 0;
        const scd_status status = scd_split(&opts, &train, &val, &test);
        if (status == SCD_OK) {
            std::printf("setting %d: %llu train / %llu val / %llu test instances in %s\n",
                        sp_setting, static_cast<unsigned long long>(train),
                        static_cast<unsigned long long>(val),
                        static_cast<unsigned long long>(test), sp_out_dir.c_str());
        }
        return finish(status);
    }

    if (compare->parsed()) {
        scd_compare_opts opts{};
        opts.before_stats_path = cp_before.c_str();
        opts.after_stats_path = cp_after.c_str();
        opts.out_path = cp_out.c_str();
        opts.format = cp_format.c_str();
        uint64_t n_groups = 0;
        const scd_status status = scd_compare(&opts, &n_groups);
        if (status == SCD_OK) {
            std::printf("compared %llu groups into %s\n",
                        static_cast<unsigned long long>(n_groups), cp_out.c_str());
        }
        return finish(status);
    }

    if (bbq->parsed()) {
        scd_bbq_opts opts{};
        opts.items_path = bq_items.c_str();
        opts.out_path = bq_out.c_str();
        opts.mock = opt(bq_mock);
        opts.base_url = opt(bq_endpoint);
        opts.model = opt(bq_model);
        opts.api_key_env = bq_key_env.c_str();
        opts.mode = bq_mode.c_str();
        opts.filter = bq_filter.c_str();
        opts.concurrency = bq_concurrency;
        opts.cache_dir = opt(bq_cache);
        opts.seed = bq_seed;
        opts.label = bq_label.c_str();
        opts.format = bq_format.c_str();
        double accuracy = 0.0;
        uint64_t n_items = 0;
        const scd_status status = scd_bbq(&opts, &accuracy, &n_items);
        if (status == SCD_OK) {
            std::printf("bbq: %llu items, overall accuracy %.3f\n",
                        static_cast<unsigned long long>(n_items), accuracy);
        }
        return finish(status);
    }

    return 1;
}

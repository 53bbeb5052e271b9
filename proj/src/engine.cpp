#include "engine.hpp"

#include <algorithm>
#include <ctime>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "classify.hpp"
#include "digest.hpp"
#include "errors.hpp"

namespace scd {

namespace {

using json = nlohmann::json;

std::string utc_timestamp() {
    const std::time_t now = std::time(nullptr);
    std::tm parts{};
    gmtime_r(&now, &parts);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &parts);
    return buf;
}

void add_input(RunManifest& manifest, const std::string& name,
               const std::filesystem::path& path) {
    manifest.inputs[name] = {path.string(), sha256_file_hex(path)};
}

void add_output(RunManifest& manifest, const std::string& name,
                const std::filesystem::path& path) {
    manifest.outputs[name] = {path.string(), sha256_file_hex(path)};
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot open file for writing: " + path.string());
    }
    out << text;
    if (!out) {
        throw IoError("write failed: " + path.string());
    }
}

std::string join_tags(const std::vector<std::string>& values) {
    std::string out;
    for (const std::string& value : values) {
        if (!out.empty()) {
            out += ',';
        }
        out += value;
    }
    return out;
}

void check_format(const std::string& format) {
    if (format != "csv" && format != "md") {
        throw ArgumentError("unknown output format '" + format + "' (expected csv or md)");
    }
}

}  // namespace

void write_run_manifest(const RunManifest& manifest, const std::filesystem::path& path) {
    json inputs = json::object();
    for (const auto& [name, entry] : manifest.inputs) {
        inputs[name] = json{{"path", entry.first}, {"sha256", entry.second}};
    }
    json outputs = json::object();
    for (const auto& [name, entry] : manifest.outputs) {
        outputs[name] = json{{"path", entry.first}, {"sha256", entry.second}};
    }
    const json doc{
        {"command", manifest.command}, {"timestamp", manifest.timestamp},
        {"params", manifest.params},   {"inputs", inputs},
        {"outputs", outputs},
    };
    write_text_file(path, doc.dump(2) + "\n");
}

GenerateReport run_generate(const GenerateJob& job) {
    const TemplateCorpus corpus = load_corpus(job.corpus_path);
    const CoverageReport coverage = validate_coverage(corpus);
    if (!coverage.complete) {
        throw ValidationError("corpus incomplete:\n" + coverage.to_string());
    }
    const Catalog catalog = load_descriptor_catalog(job.catalog_path);
    std::set<Scale> scales(job.scales.begin(), job.scales.end());
    if (scales.empty()) {
        scales.insert(all_scales().begin(), all_scales().end());
    }
    const Dataset dataset = generate_dataset(corpus, catalog, scales);
    write_dataset(dataset, job.out_path);

    GenerateReport report;
    report.n_sets = dataset.sets.size();
    report.n_instances = dataset.sets.size() * kContactCount;

    RunManifest manifest;
    manifest.command = "generate";
    manifest.timestamp = utc_timestamp();
    std::vector<std::string> scale_tags;
    for (Scale scale : scales) {
        scale_tags.emplace_back(tag(scale));
    }
    manifest.params["scales"] = join_tags(scale_tags);
    manifest.params["n_sets"] = std::to_string(report.n_sets);
    manifest.params["n_instances"] = std::to_string(report.n_instances);
    add_input(manifest, "corpus", job.corpus_path);
    add_input(manifest, "catalog", job.catalog_path);
    add_output(manifest, "dataset", job.out_path);
    write_run_manifest(manifest, job.out_path.string() + ".manifest.json");
    return report;
}

std::unique_ptr<Responder> make_responder(const ResponderSpec& spec) {
    if (spec.mock.empty()) {
        if (spec.endpoint.base_url.empty()) {
            throw ArgumentError("probe needs --endpoint or --mock");
        }
        return make_http_responder(spec.endpoint);
    }
    if (spec.mock == "always_engage") {
        return make_always_engage();
    }
    if (spec.mock == "always_decline") {
        return make_always_decline();
    }
    if (spec.mock == "contact_sensitive") {
        return make_contact_sensitive(spec.probabilities, spec.mock_seed);
    }
    throw ArgumentError("unknown mock policy '" + spec.mock +
                        "' (expected always_engage, always_decline, contact_sensitive)");
}

ProbeSummary run_probe(const ProbeJob& job) {
    const LoadedDataset dataset = read_dataset(job.dataset_path);
    if (dataset.instances.empty()) {
        throw ValidationError("dataset has no instances: " + job.dataset_path.string());
    }
    auto responder = make_responder(job.responder);
    ProbeOptions options;
    options.params = job.params;
    options.max_in_flight = job.concurrency;
    options.cache_dir = job.cache_dir;
    options.retry = job.retry;
    const ProbeOutcome outcome = probe_instances(dataset.instances, *responder, options);
    write_responses(outcome.responses, job.out_path);

    RunManifest manifest;
    manifest.command = "probe";
    manifest.timestamp = utc_timestamp();
    manifest.params["responder"] = responder->name();
    manifest.params["temperature"] = std::to_string(job.params.temperature);
    manifest.params["max_tokens"] = std::to_string(job.params.max_tokens);
    manifest.params["concurrency"] = std::to_string(job.concurrency);
    manifest.params["n_ok"] = std::to_string(outcome.summary.n_ok);
    manifest.params["n_failed"] = std::to_string(outcome.summary.n_failed);
    manifest.params["n_cache_hits"] = std::to_string(outcome.summary.n_cache_hits);
    if (!job.cache_dir.empty()) {
        manifest.params["cache_dir"] = job.cache_dir.string();
    }
    add_input(manifest, "dataset", job.dataset_path);
    add_output(manifest, "responses", job.out_path);
    write_run_manifest(manifest, job.out_path.string() + ".manifest.json");
    return outcome.summary;
}

ScoreReport run_score(const ScoreJob& job) {
    check_format(job.format);
    for (const std::string& axis : job.group_by) {
        if (!is_group_axis(axis)) {
            throw ArgumentError("unknown grouping axis: " + axis);
        }
    }
    const LoadedDataset dataset = read_dataset(job.dataset_path);
    const std::vector<RawResponse> responses = read_responses(job.responses_path);
    const ClassifyResult classified = classify_run(dataset.instances, responses);

    std::filesystem::create_directories(job.out_dir);
    const auto records_path = job.out_dir / "records.jsonl";
    write_records(classified.records, records_path);

    const StatsByGroup stats =
        aggregate(classified.records, job.group_by, job.denominator, job.model_label);
    StatsFile stats_file;
    stats_file.group_by = job.group_by;
    stats_file.mode = job.denominator;
    stats_file.stats = stats;
    const auto stats_json_path = job.out_dir / "stats.json";
    write_stats_json(stats_file, stats_json_path);
    const auto table_path = job.out_dir / ("stats." + job.format);
    write_text_file(table_path, job.format == "csv"
                                    ? render_stats_csv(stats, job.group_by)
                                    : render_stats_markdown(stats, job.group_by));

    // Contact-Hypothesis report: per base group (grouping minus contact) and,
    // when grouped, overall as well.
    std::vector<std::string> base_axes;
    for (const std::string& axis : job.group_by) {
        if (axis != "contact") {
            base_axes.push_back(axis);
        }
    }
    std::vector<std::string> with_contact = base_axes;
    with_contact.push_back("contact");
    const StatsByGroup by_contact =
        aggregate(classified.records, with_contact, job.denominator);
    std::map<GroupKey, std::map<ContactType, BiasStats>> grouped;
    for (const auto& [key, entry] : by_contact) {
        GroupKey base = key;
        const std::string contact_tag = base.parts.back().second;
        base.parts.pop_back();
        if (auto contact = contact_from_tag(contact_tag)) {
            grouped[base][*contact] = entry;
        }
    }
    json alignment_report = json::array();
    for (const auto& [base, stats_by_contact] : grouped) {
        json row{{"group", base.to_string()}};
        try {
            const AlignmentResult verdict = alignment_check(stats_by_contact, job.epsilon);
            row["pct_no_contact"] = verdict.pct_none;
            row["pct_positive_contact"] = verdict.pct_pos;
            row["pct_negative_contact"] = verdict.pct_neg;
            row["alignment"] = std::string(tag(verdict.value));
        } catch (const ArgumentError& e) {
            row["alignment"] = "undefined";
            row["reason"] = e.what();
        }
        alignment_report.push_back(std::move(row));
    }
    const auto alignment_path = job.out_dir / "alignment.json";
    write_text_file(alignment_path, alignment_report.dump(2) + "\n");

    RunManifest manifest;
    manifest.command = "score";
    manifest.timestamp = utc_timestamp();
    manifest.params["group_by"] = join_tags(job.group_by);
    manifest.params["denominator"] = std::string(tag(job.denominator));
    manifest.params["format"] = job.format;
    manifest.params["n_records"] = std::to_string(classified.records.size());
    manifest.params["skipped_failed"] = std::to_string(classified.skipped_failed);
    if (!job.model_label.empty()) {
        manifest.params["model"] = job.model_label;
    }
    add_input(manifest, "dataset", job.dataset_path);
    add_input(manifest, "responses", job.responses_path);
    add_output(manifest, "records", records_path);
    add_output(manifest, "stats_json", stats_json_path);
    add_output(manifest, "stats_table", table_path);
    add_output(manifest, "alignment", alignment_path);
    write_run_manifest(manifest, job.out_dir / "run.manifest.json");

    ScoreReport report;
    report.n_records = classified.records.size();
    report.skipped_failed = classified.skipped_failed;
    return report;
}

InstructionManifest run_split(const SplitJob& job) {
    const LoadedDataset dataset = read_dataset(job.dataset_path);
    SplitOptions options;
    options.train_n = job.train_n;
    options.val_n = job.val_n;
    options.train_dimensions = job.train_dimensions;
    LoadedDataset alternate;
    if (!job.alt_dataset_path.empty()) {
        alternate = read_dataset(job.alt_dataset_path);
        options.alternate = alternate.instances;
    }
    const Split split = make_split(dataset.instances, job.setting, job.seed, options);

    std::filesystem::create_directories(job.out_dir);
    const auto split_path = job.out_dir / "split.json";
    write_split(split, split_path);
    const auto instructions_path = job.out_dir / "instructions.jsonl";
    const InstructionManifest manifest =
        emit_instruction_data(split, dataset.instances, job.system_prompt, instructions_path);
    const auto instr_manifest_path = job.out_dir / "instructions.manifest.json";
    write_instruction_manifest(manifest, instr_manifest_path);
    const auto config_path = job.out_dir / "training_config.toml";
    emit_training_config(config_path);

    RunManifest run;
    run.command = "split";
    run.timestamp = utc_timestamp();
    run.params["setting"] = std::to_string(static_cast<int>(job.setting));
    run.params["setting_name"] = std::string(setting_name(job.setting));
    run.params["seed"] = std::to_string(job.seed);
    run.params["train_instances"] = std::to_string(manifest.train_instances);
    run.params["val_instances"] = std::to_string(manifest.val_instances);
    run.params["test_instances"] = std::to_string(manifest.test_instances);
    add_input(run, "dataset", job.dataset_path);
    if (!job.alt_dataset_path.empty()) {
        add_input(run, "alt_dataset", job.alt_dataset_path);
    }
    add_output(run, "split", split_path);
    add_output(run, "instructions", instructions_path);
    add_output(run, "instructions_manifest", instr_manifest_path);
    add_output(run, "training_config", config_path);
    write_run_manifest(run, job.out_dir / "run.manifest.json");
    return manifest;
}

std::uint64_t run_compare(const CompareJob& job) {
    check_format(job.format);
    const StatsFile before = read_stats_json(job.before_stats_path);
    const StatsFile after = read_stats_json(job.after_stats_path);
    const std::vector<CompareRow> rows = compare_runs(before.stats, after.stats);
    write_text_file(job.out_path, job.format == "csv" ? render_compare_csv(rows)
                                                      : render_compare_markdown(rows));

    RunManifest manifest;
    manifest.command = "compare";
    manifest.timestamp = utc_timestamp();
    manifest.params["format"] = job.format;
    manifest.params["n_groups"] = std::to_string(rows.size());
    add_input(manifest, "before", job.before_stats_path);
    add_input(manifest, "after", job.after_stats_path);
    add_output(manifest, "table", job.out_path);
    write_run_manifest(manifest, job.out_path.string() + ".manifest.json");
    return rows.size();
}

BBQResult run_bbq(const BBQJob& job) {
    check_format(job.format);
    const BBQLoadResult loaded = load_bbq(job.items_path);
    const std::vector<BBQItem> items = filter_bbq(loaded.items, job.filter);
    if (items.empty()) {
        throw ValidationError("no BBQ items left after the '" + std::string(tag(job.filter)) +
                              "' filter");
    }

    std::unique_ptr<Responder> responder;
    if (job.mock == "gold") {
        responder = make_gold_letter_responder(items);
    } else if (job.mock == "uniform") {
        responder = make_uniform_letter_responder(job.mock_seed);
    } else if (job.mock.empty()) {
        if (job.endpoint.base_url.empty()) {
            throw ArgumentError("bbq needs --endpoint or --mock");
        }
        responder = make_http_responder(job.endpoint);
    } else {
        throw ArgumentError("unknown bbq mock '" + job.mock + "' (expected gold or uniform)");
    }
    if (job.mode == BBQMode::OptionScore) {
        // No shipped responder exposes per-option likelihoods.
        throw CapabilityError(
            "option scoring is not supported by this endpoint; use letter mode");
    }

    ProbeOptions options;
    options.max_in_flight = job.concurrency;
    options.cache_dir = job.cache_dir;
    const BBQResult result = evaluate_bbq(items, *responder, job.mode, options);

    const std::vector<std::pair<std::string, BBQResult>> rows = {{job.label, result}};
    write_text_file(job.out_path,
                    job.format == "csv" ? render_bbq_csv(rows) : render_bbq_markdown(rows));

    RunManifest manifest;
    manifest.command = "bbq";
    manifest.timestamp = utc_timestamp();
    manifest.params["mode"] = std::string(tag(job.mode));
    manifest.params["filter"] = std::string(tag(job.filter));
    manifest.params["responder"] = responder->name();
    manifest.params["label"] = job.label;
    manifest.params["n_items"] = std::to_string(items.size());
    manifest.params["n_correct"] = std::to_string(result.overall.n_correct);
    if (!loaded.line_errors.empty()) {
        manifest.params["malformed_lines"] = std::to_string(loaded.line_errors.size());
    }
    add_input(manifest, "items", job.items_path);
    add_output(manifest, "table", job.out_path);
    write_run_manifest(manifest, job.out_path.string() + ".manifest.json");
    return result;
}

}  // namespace scd

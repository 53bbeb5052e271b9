#include <doctest.h>

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "digest.hpp"
#include "engine.hpp"
#include "errors.hpp"
#include "probe.hpp"
#include "splits.hpp"
#include "test_util.hpp"

using namespace scd;
using nlohmann::json;

namespace {

// A two-descriptor catalog keeps engine runs small: 360 sets, 1080 instances.
std::filesystem::path tiny_catalog(const scd_test::TempDir& tmp) {
    const auto path = tmp.path() / "catalog.json";
    if (!std::filesystem::exists(path)) {
        scd_test::write_file(path, R"({"nonce": ["wug", "dax"]})");
    }
    return path;
}

json parse_file(const std::filesystem::path& path) {
    return json::parse(scd_test::read_file(path));
}

struct Pipeline {
    scd_test::TempDir tmp;
    std::filesystem::path dataset = tmp.path() / "dataset.jsonl";
    std::filesystem::path responses = tmp.path() / "responses.jsonl";

    GenerateReport generate() {
        GenerateJob job;
        job.corpus_path = scd_test::data_dir() / "corpus.json";
        job.catalog_path = tiny_catalog(tmp);
        job.out_path = dataset;
        return run_generate(job);
    }

    ProbeSummary probe(const std::string& mock = "always_engage") {
        ProbeJob job;
        job.dataset_path = dataset;
        job.out_path = responses;
        job.responder.mock = mock;
        return run_probe(job);
    }
};

}  // namespace

TEST_CASE("write_run_manifest records command, params and digests") {
    scd_test::TempDir tmp;
    scd_test::write_file(tmp.file("in.txt"), "payload");

    RunManifest manifest;
    manifest.command = "demo";
    manifest.timestamp = "2026-01-01T00:00:00Z";
    manifest.params["alpha"] = "1";
    manifest.inputs["in"] = {tmp.file("in.txt").string(),
                             sha256_file_hex(tmp.file("in.txt"))};
    const auto path = tmp.file("run.manifest.json");
    write_run_manifest(manifest, path);

    const json doc = parse_file(path);
    CHECK(doc.at("command") == "demo");
    CHECK(doc.at("timestamp") == "2026-01-01T00:00:00Z");
    CHECK(doc.at("params").at("alpha") == "1");
    CHECK(doc.at("inputs").at("in").at("path") == tmp.file("in.txt").string());
    CHECK(doc.at("inputs").at("in").at("sha256") ==
          sha256_file_hex(tmp.file("in.txt")));
    CHECK(doc.at("outputs").is_object());
}

TEST_CASE("run_generate writes the dataset and its manifest") {
    Pipeline p;
    const GenerateReport report = p.generate();
    CHECK(report.n_sets == 360);
    CHECK(report.n_instances == 1080);
    CHECK(std::filesystem::exists(p.dataset));

    const json manifest = parse_file(p.dataset.string() + ".manifest.json");
    CHECK(manifest.at("command") == "generate");
    CHECK(manifest.at("params").at("scales") == "certainty,likelihood,frequency");
    CHECK(manifest.at("params").at("n_sets") == "360");
    CHECK(manifest.at("params").at("n_instances") == "1080");
    CHECK(manifest.at("inputs").at("corpus").at("sha256") ==
          sha256_file_hex(scd_test::data_dir() / "corpus.json"));
    CHECK(manifest.at("outputs").at("dataset").at("sha256") ==
          sha256_file_hex(p.dataset));

    const LoadedDataset loaded = read_dataset(p.dataset);
    CHECK(loaded.instances.size() == 1080);
    CHECK(loaded.header.n_sets == 360);

    SUBCASE("a single-scale job narrows the cross product") {
        GenerateJob job;
        job.corpus_path = scd_test::data_dir() / "corpus.json";
        job.catalog_path = tiny_catalog(p.tmp);
        job.scales = {Scale::Certainty};
        job.out_path = p.tmp.path() / "certainty.jsonl";
        const GenerateReport narrow = run_generate(job);
        CHECK(narrow.n_sets == 120);
        CHECK(narrow.n_instances == 360);
        const json m = parse_file(job.out_path.string() + ".manifest.json");
        CHECK(m.at("params").at("scales") == "certainty");
    }
    SUBCASE("a missing corpus is an io error") {
        GenerateJob job;
        job.corpus_path = p.tmp.path() / "absent.json";
        job.catalog_path = tiny_catalog(p.tmp);
        job.out_path = p.tmp.path() / "x.jsonl";
        CHECK_THROWS_AS(run_generate(job), IoError);
    }
}

TEST_CASE("run_probe answers every instance through the mock") {
    Pipeline p;
    p.generate();
    const ProbeSummary summary = p.probe();
    CHECK(summary.n_ok == 1080);
    CHECK(summary.n_failed == 0);
    CHECK(summary.n_cache_hits == 0);
    CHECK(summary.n_live == 1080);

    const std::vector<RawResponse> responses = read_responses(p.responses);
    REQUIRE(responses.size() == 1080);
    CHECK(responses.front().status == ResponseStatus::Ok);

    const json manifest = parse_file(p.responses.string() + ".manifest.json");
    CHECK(manifest.at("command") == "probe");
    CHECK(manifest.at("params").at("responder") == "mock:always_engage");
    CHECK(manifest.at("params").at("n_ok") == "1080");
    CHECK(manifest.at("outputs").at("responses").at("sha256") ==
          sha256_file_hex(p.responses));

    SUBCASE("a second cached run answers from disk") {
        ProbeJob job;
        job.dataset_path = p.dataset;
        job.out_path = p.tmp.path() / "cached.jsonl";
        job.responder.mock = "always_engage";
        job.cache_dir = p.tmp.path() / "cache";
        const ProbeSummary first = run_probe(job);
        CHECK(first.n_cache_hits == 0);
        job.out_path = p.tmp.path() / "cached2.jsonl";
        const ProbeSummary second = run_probe(job);
        CHECK(second.n_cache_hits == 1080);
        CHECK(second.n_live == 0);
        const json m = parse_file(job.out_path.string() + ".manifest.json");
        CHECK(m.at("params").at("n_cache_hits") == "1080");
        CHECK(m.at("params").at("cache_dir") == job.cache_dir.string());
    }
    SUBCASE("responder selection is validated") {
        ProbeJob job;
        job.dataset_path = p.dataset;
        job.out_path = p.tmp.path() / "x.jsonl";
        CHECK_THROWS_WITH_AS(run_probe(job), doctest::Contains("--endpoint or --mock"),
                             ArgumentError);
        job.responder.mock = "always_wrong";
        CHECK_THROWS_WITH_AS(run_probe(job), doctest::Contains("unknown mock policy"),
                             ArgumentError);
    }
}

TEST_CASE("make_responder builds each mock policy") {
    ResponderSpec spec;
    spec.mock = "always_engage";
    CHECK(make_responder(spec)->name() == "mock:always_engage");
    spec.mock = "always_decline";
    CHECK(make_responder(spec)->name() == "mock:always_decline");
    spec.mock = "contact_sensitive";
    spec.probabilities = {0.7, 0.9, 0.5};
    spec.mock_seed = 11;
    CHECK(make_responder(spec)->name().starts_with("mock:contact_sensitive"));
    spec.mock.clear();
    spec.endpoint.base_url = "http://127.0.0.1:9";
    spec.endpoint.model_name = "m";
    CHECK(make_responder(spec) != nullptr);
}

TEST_CASE("run_score produces the full report directory") {
    Pipeline p;
    p.generate();
    p.probe();

    ScoreJob job;
    job.dataset_path = p.dataset;
    job.responses_path = p.responses;
    job.out_dir = p.tmp.path() / "score";
    job.group_by = {"scale"};
    const ScoreReport report = run_score(job);
    CHECK(report.n_records == 1080);
    CHECK(report.skipped_failed == 0);

    for (const char* name :
         {"records.jsonl", "stats.json", "stats.csv", "alignment.json",
          "run.manifest.json"}) {
        CAPTURE(name);
        CHECK(std::filesystem::exists(job.out_dir / name));
    }

    // always_engage: positive actions unbiased, negative actions biased, so
    // every scale sits at exactly 50% and no group is contact-aligned.
    const StatsFile stats = read_stats_json(job.out_dir / "stats.json");
    CHECK(stats.group_by == std::vector<std::string>{"scale"});
    CHECK(stats.mode == DenominatorMode::Determinate);
    REQUIRE(stats.stats.size() == 3);
    for (const auto& [key, entry] : stats.stats) {
        CAPTURE(key.to_string());
        CHECK(entry.n_total == 360);
        CHECK(entry.n_biased == 180);
        REQUIRE(entry.pct_biased.has_value());
        CHECK(*entry.pct_biased == doctest::Approx(50.0));
    }

    const json alignment = parse_file(job.out_dir / "alignment.json");
    REQUIRE(alignment.size() == 3);
    for (const json& row : alignment) {
        CHECK(row.at("alignment") == "not_aligned");
        CHECK(row.at("pct_no_contact").get<double>() == doctest::Approx(50.0));
        CHECK(row.at("group").get<std::string>().starts_with("scale="));
    }

    const json manifest = parse_file(job.out_dir / "run.manifest.json");
    CHECK(manifest.at("command") == "score");
    CHECK(manifest.at("params").at("group_by") == "scale");
    CHECK(manifest.at("params").at("denominator") == "determinate");
    CHECK(manifest.at("params").at("n_records") == "1080");
    CHECK(manifest.at("outputs").size() == 4);

    SUBCASE("markdown format emits stats.md") {
        job.out_dir = p.tmp.path() / "score_md";
        job.format = "md";
        job.model_label = "mock-model";
        run_score(job);
        CHECK(std::filesystem::exists(job.out_dir / "stats.md"));
        const std::string table = scd_test::read_file(job.out_dir / "stats.md");
        CHECK(table.starts_with("| model | scale |"));
        CHECK(table.find("| mock-model | certainty |") != std::string::npos);
        const json m = parse_file(job.out_dir / "run.manifest.json");
        CHECK(m.at("params").at("model") == "mock-model");
    }
    SUBCASE("grouping by contact feeds the alignment check, not the base group") {
        job.out_dir = p.tmp.path() / "score_contact";
        job.group_by = {"contact"};
        run_score(job);
        const json rows = parse_file(job.out_dir / "alignment.json");
        REQUIRE(rows.size() == 1);
        CHECK(rows[0].at("group") == "(all)");
    }
    SUBCASE("job validation") {
        job.format = "html";
        CHECK_THROWS_WITH_AS(run_score(job), doctest::Contains("unknown output format"),
                             ArgumentError);
        job.format = "csv";
        job.group_by = {"flavor"};
        CHECK_THROWS_WITH_AS(run_score(job), doctest::Contains("unknown grouping axis"),
                             ArgumentError);
    }
}

TEST_CASE("run_split writes the split bundle") {
    Pipeline p;
    p.generate();

    SplitJob job;
    job.dataset_path = p.dataset;
    job.out_dir = p.tmp.path() / "split3";
    job.setting = SplitSetting::CrossCertainty;
    job.system_prompt = "You are a careful assistant.";
    const InstructionManifest manifest = run_split(job);
    CHECK(manifest.setting == 3);
    CHECK(manifest.seed == 42);
    CHECK(manifest.train_instances == 360);
    CHECK(manifest.test_instances == 720);
    CHECK(manifest.val_instances == 0);
    CHECK(manifest.train_sets == 120);

    for (const char* name : {"split.json", "instructions.jsonl",
                             "instructions.manifest.json", "training_config.toml",
                             "run.manifest.json"}) {
        CAPTURE(name);
        CHECK(std::filesystem::exists(job.out_dir / name));
    }
    CHECK(scd_test::read_file(job.out_dir / "training_config.toml") ==
          training_config_text());

    const Split split = read_split(job.out_dir / "split.json");
    CHECK(split.setting == SplitSetting::CrossCertainty);
    CHECK(split.train.size() == 360);

    std::ifstream in(job.out_dir / "instructions.jsonl");
    std::string line;
    REQUIRE(std::getline(in, line));
    const json first = json::parse(line);
    CHECK(first.at("messages")[0].at("content") == "You are a careful assistant.");

    const json run = parse_file(job.out_dir / "run.manifest.json");
    CHECK(run.at("command") == "split");
    CHECK(run.at("params").at("setting") == "3");
    CHECK(run.at("params").at("setting_name") == "CrossCertainty");
    CHECK(run.at("outputs").size() == 4);
    CHECK(run.at("outputs").at("instructions").at("sha256") == manifest.sha256);

    SUBCASE("setting 2 consumes the alternate dataset") {
        GenerateJob alt;
        alt.corpus_path = scd_test::data_dir() / "corpus_paraphrase.json";
        alt.catalog_path = tiny_catalog(p.tmp);
        alt.out_path = p.tmp.path() / "alt.jsonl";
        run_generate(alt);

        SplitJob cross;
        cross.dataset_path = p.dataset;
        cross.out_dir = p.tmp.path() / "split2";
        cross.setting = SplitSetting::CrossDataset;
        cross.train_n = 100;
        cross.alt_dataset_path = alt.out_path;
        const InstructionManifest m = run_split(cross);
        CHECK(m.train_instances == 100);
        CHECK(m.val_instances == 0);
        CHECK(m.test_instances == 1080);
        const json doc = parse_file(cross.out_dir / "run.manifest.json");
        CHECK(doc.at("inputs").contains("alt_dataset"));
    }
    SUBCASE("setting 2 without an alternate dataset fails") {
        SplitJob cross;
        cross.dataset_path = p.dataset;
        cross.out_dir = p.tmp.path() / "split2b";
        cross.setting = SplitSetting::CrossDataset;
        cross.train_n = 100;
        CHECK_THROWS_AS(run_split(cross), ArgumentError);
    }
}

TEST_CASE("run_compare tabulates two stats files") {
    scd_test::TempDir tmp;
    GroupKey key;
    key.parts = {{"scale", "certainty"}};
    BiasStats entry;
    entry.n_total = 100;
    entry.n_biased = 42;
    entry.n_unbiased = 58;
    entry.pct_biased = 41.64;

    StatsFile before;
    before.group_by = {"scale"};
    before.stats[key] = entry;
    entry.pct_biased = 2.4;
    StatsFile after;
    after.group_by = {"scale"};
    after.stats[key] = entry;

    write_stats_json(before, tmp.file("before.json"));
    write_stats_json(after, tmp.file("after.json"));

    CompareJob job;
    job.before_stats_path = tmp.file("before.json");
    job.after_stats_path = tmp.file("after.json");
    job.out_path = tmp.file("compare.csv");
    CHECK(run_compare(job) == 1);
    CHECK(scd_test::read_file(job.out_path) ==
          "group,pct_before,pct_after,delta\n"
          "scale=certainty,41.64,2.40,-39.24\n");
    const json manifest = parse_file(job.out_path.string() + ".manifest.json");
    CHECK(manifest.at("command") == "compare");
    CHECK(manifest.at("params").at("n_groups") == "1");

    job.format = "md";
    job.out_path = tmp.file("compare.md");
    CHECK(run_compare(job) == 1);
    CHECK(scd_test::read_file(job.out_path).starts_with("| group |"));

    job.format = "pdf";
    CHECK_THROWS_AS(run_compare(job), ArgumentError);
}

TEST_CASE("run_bbq scores the fixture") {
    scd_test::TempDir tmp;
    BBQJob job;
    job.items_path = scd_test::fixture_dir() / "bbq_33.jsonl";
    job.out_path = tmp.file("bbq.md");
    job.mock = "gold";
    job.label = "gold-run";

    const BBQResult result = run_bbq(job);
    CHECK(result.overall.n == 33);
    CHECK(result.overall.accuracy == doctest::Approx(1.0));

    const std::string table = scd_test::read_file(job.out_path);
    CHECK(table.starts_with("| | All | Age |"));
    CHECK(table.find("| gold-run | 1 |") != std::string::npos);

    const json manifest = parse_file(job.out_path.string() + ".manifest.json");
    CHECK(manifest.at("command") == "bbq");
    CHECK(manifest.at("params").at("mode") == "letter");
    CHECK(manifest.at("params").at("filter") == "ambiguous");
    CHECK(manifest.at("params").at("responder") == "mock:bbq_gold");
    CHECK(manifest.at("params").at("n_items") == "33");
    CHECK(manifest.at("params").at("n_correct") == "33");

    SUBCASE("csv format") {
        job.format = "csv";
        job.out_path = tmp.file("bbq.csv");
        run_bbq(job);
        CHECK(scd_test::read_file(job.out_path).starts_with("run,All,Age,"));
    }
    SUBCASE("uniform mock is seeded") {
        job.mock = "uniform";
        job.mock_seed = 3;
        job.out_path = tmp.file("u1.md");
        const BBQResult a = run_bbq(job);
        job.out_path = tmp.file("u2.md");
        const BBQResult b = run_bbq(job);
        CHECK(a.overall.n_correct == b.overall.n_correct);
        CHECK(scd_test::read_file(tmp.file("u1.md")) ==
              scd_test::read_file(tmp.file("u2.md")));
    }
    SUBCASE("option scoring is reported as unsupported before any probing") {
        job.mode = BBQMode::OptionScore;
        CHECK_THROWS_WITH_AS(run_bbq(job),
                             doctest::Contains("option scoring is not supported"),
                             CapabilityError);
    }
    SUBCASE("an over-aggressive filter is an error") {
        job.filter = BBQFilter::DisambiguatedOnly;  // the fixture is all ambiguous
        CHECK_THROWS_WITH_AS(run_bbq(job), doctest::Contains("no BBQ items left"),
                             ValidationError);
    }
    SUBCASE("mock and endpoint validation") {
        job.mock = "silver";
        CHECK_THROWS_WITH_AS(run_bbq(job), doctest::Contains("unknown bbq mock"),
                             ArgumentError);
        job.mock.clear();
        CHECK_THROWS_WITH_AS(run_bbq(job), doctest::Contains("--endpoint or --mock"),
                             ArgumentError);
    }
}

#include <doctest.h>

#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <string>

#include "test_util.hpp"

namespace {

struct CliResult {
    int code = -1;
    std::string output;  // stdout and stderr, interleaved
};

CliResult run_cli(const std::string& args) {
    const std::string command = "\"" SCD_CLI_PATH "\" " + args + " 2>&1";
    CliResult result;
    FILE* pipe = popen(command.c_str(), "r");
    REQUIRE(pipe != nullptr);
    char buffer[4096];
    std::size_t n = 0;
    while ((n = fread(buffer, 1, sizeof(buffer), pipe)) > 0) {
        result.output.append(buffer, n);
    }
    const int status = pclose(pipe);
    REQUIRE(WIFEXITED(status));
    result.code = WEXITSTATUS(status);
    return result;
}

std::string quoted(const std::filesystem::path& path) {
    return "\"" + path.string() + "\"";
}

// One shared workspace: tiny dataset + mock responses, built on first use.
struct Workspace {
    scd_test::TempDir tmp;
    std::filesystem::path catalog = tmp.path() / "catalog.json";
    std::filesystem::path dataset = tmp.path() / "dataset.jsonl";
    std::filesystem::path responses = tmp.path() / "responses.jsonl";

    Workspace() {
        scd_test::write_file(catalog, R"({"nonce": ["wug", "dax"]})");
        const CliResult gen = run_cli(
            "generate --corpus " + quoted(scd_test::data_dir() / "corpus.json") +
            " --catalog " + quoted(catalog) + " --scales certainty --out " +
            quoted(dataset));
        REQUIRE(gen.code == 0);
        const CliResult probe = run_cli("probe --dataset " + quoted(dataset) +
                                        " --mock always_engage --out " + quoted(responses));
        REQUIRE(probe.code == 0);
    }
};

Workspace& ws() {
    static Workspace workspace;
    return workspace;
}

}  // namespace

TEST_CASE("argument parsing exit codes") {
    CHECK(run_cli("").code == 1);
    CHECK(run_cli("frobnicate").code == 1);
    CHECK(run_cli("probe --dataset x").code == 1);  // --out is required

    const CliResult help = run_cli("--help");
    CHECK(help.code == 0);
    CHECK(help.output.find("validate") != std::string::npos);
    CHECK(help.output.find("generate") != std::string::npos);
    CHECK(help.output.find("bbq") != std::string::npos);
    CHECK(run_cli("probe --help").code == 0);
}

TEST_CASE("validate reports coverage and catalog size") {
    const CliResult ok = run_cli(
        "validate --corpus " + quoted(scd_test::data_dir() / "corpus.json") +
        " --catalog " + quoted(scd_test::data_dir() / "catalog.json"));
    CHECK(ok.code == 0);
    CHECK(ok.output.find("coverage complete (540 keys)") != std::string::npos);
    CHECK(ok.output.find("catalog: 600 descriptors") != std::string::npos);

    const CliResult missing = run_cli(
        "validate --corpus /nonexistent/corpus.json --catalog " +
        quoted(scd_test::data_dir() / "catalog.json"));
    CHECK(missing.code == 2);
    CHECK(missing.output.find("error:") != std::string::npos);
}

TEST_CASE("generate writes the dataset and reports counts") {
    CHECK(ws().tmp.path() != "");  // force the workspace build
    CHECK(std::filesystem::exists(ws().dataset));

    scd_test::TempDir tmp;
    const CliResult full = run_cli(
        "generate --corpus " + quoted(scd_test::data_dir() / "corpus.json") +
        " --catalog " + quoted(ws().catalog) + " --out " + quoted(tmp.file("all.jsonl")));
    CHECK(full.code == 0);
    CHECK(full.output.find("wrote 360 sets / 1080 instances") != std::string::npos);

    const CliResult bad_scale = run_cli(
        "generate --corpus " + quoted(scd_test::data_dir() / "corpus.json") +
        " --catalog " + quoted(ws().catalog) + " --scales weekly --out " +
        quoted(tmp.file("x.jsonl")));
    CHECK(bad_scale.code == 1);
    CHECK(bad_scale.output.find("unknown scale tag") != std::string::npos);
}

TEST_CASE("probe reports the summary line") {
    scd_test::TempDir tmp;
    const CliResult probe = run_cli("probe --dataset " + quoted(ws().dataset) +
                                    " --mock always_decline --out " +
                                    quoted(tmp.file("r.jsonl")));
    CHECK(probe.code == 0);
    CHECK(probe.output.find("probed: 360 ok, 0 failed, 0 cache hits") != std::string::npos);

    const CliResult unreachable = run_cli(
        "probe --dataset " + quoted(ws().dataset) +
        " --endpoint http://127.0.0.1:9/v1 --model m --retry-attempts 2 "
        "--retry-base-ms 1 --out " +
        quoted(tmp.file("x.jsonl")));
    CHECK(unreachable.code == 3);
    CHECK(unreachable.output.find("error:") != std::string::npos);

    const CliResult bad_mock = run_cli("probe --dataset " + quoted(ws().dataset) +
                                       " --mock sometimes --out " +
                                       quoted(tmp.file("y.jsonl")));
    CHECK(bad_mock.code == 1);
}

TEST_CASE("score emits the report directory") {
    scd_test::TempDir tmp;
    const auto out_dir = tmp.path() / "score";
    const CliResult score = run_cli(
        "score --dataset " + quoted(ws().dataset) + " --responses " +
        quoted(ws().responses) + " --group-by scale,contact --format md --out-dir " +
        quoted(out_dir));
    CHECK(score.code == 0);
    CHECK(score.output.find("scored 360 records (0 failed responses skipped)") !=
          std::string::npos);
    for (const char* name :
         {"records.jsonl", "stats.json", "stats.md", "alignment.json",
          "run.manifest.json"}) {
        CAPTURE(name);
        CHECK(std::filesystem::exists(out_dir / name));
    }

    const CliResult bad_axis = run_cli(
        "score --dataset " + quoted(ws().dataset) + " --responses " +
        quoted(ws().responses) + " --group-by flavor --out-dir " +
        quoted(tmp.path() / "x"));
    CHECK(bad_axis.code == 1);
    CHECK(bad_axis.output.find("unknown grouping axis") != std::string::npos);

    const CliResult bad_responses = run_cli(
        "score --dataset " + quoted(ws().dataset) +
        " --responses /nonexistent/r.jsonl --out-dir " + quoted(tmp.path() / "y"));
    CHECK(bad_responses.code == 2);
}

TEST_CASE("split builds the bundle and honours the corpus system prompt") {
    scd_test::TempDir tmp;
    const auto out_dir = tmp.path() / "split";
    const CliResult split = run_cli(
        "split --dataset " + quoted(ws().dataset) + " --setting 1 --train-n 100 "
        "--val-n 20 --corpus " + quoted(scd_test::data_dir() / "corpus.json") +
        " --out-dir " + quoted(out_dir));
    CHECK(split.code == 0);
    CHECK(split.output.find("setting 1: 100 train / 20 val / 240 test instances") !=
          std::string::npos);
    for (const char* name : {"split.json", "instructions.jsonl",
                             "instructions.manifest.json", "training_config.toml"}) {
        CAPTURE(name);
        CHECK(std::filesystem::exists(out_dir / name));
    }
    const std::string instructions = scd_test::read_file(out_dir / "instructions.jsonl");
    CHECK(instructions.find("helpful, respectful and honest") != std::string::npos);

    CHECK(run_cli("split --dataset " + quoted(ws().dataset) +
                  " --setting 9 --out-dir " + quoted(tmp.path() / "x"))
              .code == 1);
    // Setting 2 without an alternate dataset is rejected past parsing.
    const CliResult no_alt = run_cli("split --dataset " + quoted(ws().dataset) +
                                     " --setting 2 --train-n 10 --out-dir " +
                                     quoted(tmp.path() / "y"));
    CHECK(no_alt.code == 1);
    CHECK(no_alt.output.find("alternate") != std::string::npos);
}

TEST_CASE("compare diffs two scored runs") {
    scd_test::TempDir tmp;
    // Score the same responses twice with different denominators to get two
    // stats files with the same groups.
    const auto dir_a = tmp.path() / "a";
    const auto dir_b = tmp.path() / "b";
    REQUIRE(run_cli("score --dataset " + quoted(ws().dataset) + " --responses " +
                    quoted(ws().responses) + " --group-by scale --out-dir " +
                    quoted(dir_a))
                .code == 0);
    REQUIRE(run_cli("score --dataset " + quoted(ws().dataset) + " --responses " +
                    quoted(ws().responses) + " --group-by scale --denominator total "
                    "--out-dir " +
                    quoted(dir_b))
                .code == 0);

    const CliResult compare = run_cli(
        "compare --before " + quoted(dir_a / "stats.json") + " --after " +
        quoted(dir_b / "stats.json") + " --out " + quoted(tmp.file("delta.csv")));
    CHECK(compare.code == 0);
    CHECK(compare.output.find("compared 1 groups") != std::string::npos);
    const std::string table = scd_test::read_file(tmp.file("delta.csv"));
    CHECK(table.find("group,pct_before,pct_after,delta") != std::string::npos);
    CHECK(table.find("scale=certainty,50.00,50.00,0.00") != std::string::npos);

    CHECK(run_cli("compare --before /nonexistent.json --after " +
                  quoted(dir_b / "stats.json") + " --out " + quoted(tmp.file("x.csv")))
              .code == 2);
}

TEST_CASE("bbq evaluates the fixture") {
    scd_test::TempDir tmp;
    const CliResult gold = run_cli(
        "bbq --items " + quoted(scd_test::fixture_dir() / "bbq_33.jsonl") +
        " --mock gold --label gold-run --out " + quoted(tmp.file("bbq.md")));
    CHECK(gold.code == 0);
    CHECK(gold.output.find("bbq: 33 items, overall accuracy 1.000") != std::string::npos);
    CHECK(scd_test::read_file(tmp.file("bbq.md")).find("| gold-run | 1 |") !=
          std::string::npos);

    const CliResult unsupported = run_cli(
        "bbq --items " + quoted(scd_test::fixture_dir() / "bbq_33.jsonl") +
        " --mock gold --mode option_score --out " + quoted(tmp.file("x.md")));
    CHECK(unsupported.code == 1);
    CHECK(unsupported.output.find("option scoring is not supported") != std::string::npos);

    CHECK(run_cli("bbq --items " + quoted(scd_test::fixture_dir() / "bbq_33.jsonl") +
                  " --mock gold --filter disambiguated --out " + quoted(tmp.file("y.md")))
              .code == 1);
    CHECK(run_cli("bbq --items /nonexistent.jsonl --mock gold --out " +
                  quoted(tmp.file("z.md")))
              .code == 2);
}

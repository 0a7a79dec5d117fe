#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include <sys/wait.h>

#include "commands.hpp"
#include "lexigrad/checkpoint.hpp"
#include "support/test_util.hpp"

using namespace lexigrad;

namespace {

ExperimentSpec tiny_spec(const std::string& out_dir) {
    ExperimentSpec spec;
    apply_config_entry(spec, "dataset", "synthetic-blobs");
    apply_config_entry(spec, "data_train_n", "48");
    apply_config_entry(spec, "data_test_n", "48");
    apply_config_entry(spec, "data_noise", "0.6");
    apply_config_entry(spec, "generations", "2");
    apply_config_entry(spec, "population", "2");
    apply_config_entry(spec, "batch_size", "16");
    apply_config_entry(spec, "mlp_hidden", "4");
    apply_config_entry(spec, "seed", "3");
    apply_config_entry(spec, "out", out_dir);
    validate_spec(spec);
    return spec;
}

std::size_t count_lines(const std::string& path) {
    std::ifstream in(path);
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line))
        if (!line.empty()) ++n;
    return n;
}

std::vector<std::string> read_csv_rows(const std::string& path) {
    std::ifstream in(path);
    std::vector<std::string> rows;
    std::string line;
    while (std::getline(in, line))
        if (!line.empty()) rows.push_back(line);
    return rows;
}

int run_binary(const std::string& args) {
    const std::string cmd = std::string(LEXIGRAD_BIN) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    REQUIRE(status != -1);
    return WEXITSTATUS(status);
}

}  // namespace

TEST_CASE("train writes one metrics line per generation plus artifacts") {
    testsupport::TmpDir dir("train");
    cli::TrainArgs args;
    args.spec = tiny_spec(dir.file("run"));
    apply_config_entry(args.spec, "strategy", "sgd-baseline");
    apply_config_entry(args.spec, "generations", "5");
    validate_spec(args.spec);
    CHECK(cli::cmd_train(args) == cli::kExitOk);
    CHECK(count_lines(dir.file("run/metrics.jsonl")) == 5);
    CHECK(std::filesystem::exists(dir.file("run/model.lxgd")));
    CHECK(std::filesystem::exists(dir.file("run/eval.json")));
    CHECK(std::filesystem::exists(dir.file("run/config.txt")));
}

TEST_CASE("the echoed config reparses to the identical spec") {
    testsupport::TmpDir dir("echo");
    cli::TrainArgs args;
    args.spec = tiny_spec(dir.file("run"));
    CHECK(cli::cmd_train(args) == cli::kExitOk);
    const ExperimentSpec reparsed = parse_config_file(dir.file("run/config.txt"));
    CHECK(reparsed == args.spec);
}

TEST_CASE("seed overrides change the checkpoint, reruns reproduce it") {
    testsupport::TmpDir dir("seeds");
    cli::TrainArgs a;
    a.spec = tiny_spec(dir.file("a"));
    CHECK(cli::cmd_train(a) == cli::kExitOk);

    cli::TrainArgs b;
    b.spec = tiny_spec(dir.file("b"));
    CHECK(cli::cmd_train(b) == cli::kExitOk);
    CHECK(testsupport::slurp(dir.file("a/model.lxgd")) == testsupport::slurp(dir.file("b/model.lxgd")));

    cli::TrainArgs c;
    c.spec = tiny_spec(dir.file("c"));
    apply_config_entry(c.spec, "seed", "4");
    CHECK(cli::cmd_train(c) == cli::kExitOk);
    CHECK(testsupport::slurp(dir.file("a/model.lxgd")) != testsupport::slurp(dir.file("c/model.lxgd")));
}

TEST_CASE("resume continues from the checkpointed generation") {
    testsupport::TmpDir dir("resume");
    cli::TrainArgs first;
    first.spec = tiny_spec(dir.file("first"));
    apply_config_entry(first.spec, "strategy", "sgd-baseline");
    apply_config_entry(first.spec, "generations", "2");
    validate_spec(first.spec);
    CHECK(cli::cmd_train(first) == cli::kExitOk);

    cli::TrainArgs second;
    second.spec = first.spec;
    second.spec.out_dir = dir.file("second");
    second.resume = dir.file("first/model.lxgd");
    CHECK(cli::cmd_train(second) == cli::kExitOk);
    const auto ckpt = load_checkpoint(dir.file("second/model.lxgd"));
    CHECK(ckpt.generation == 4);
    CHECK(count_lines(dir.file("second/metrics.jsonl")) == 2);
}

TEST_CASE("compare emits one summary row per strategy over the seed grid") {
    testsupport::TmpDir dir("compare");
    ExperimentSpec spec = tiny_spec(dir.file("cmp"));
    apply_config_entry(spec, "strategies", "sgd-baseline,lexicase");
    apply_config_entry(spec, "replicates", "3");
    validate_spec(spec);
    CHECK(cli::cmd_compare(spec) == cli::kExitOk);

    const auto rows = read_csv_rows(dir.file("cmp/summary.csv"));
    REQUIRE(rows.size() == 3);  // header + 2 strategies
    CHECK(rows[0] == "strategy,replicates,acc_mean,acc_std");
    CHECK(rows[1].rfind("sgd-baseline,3,", 0) == 0);
    CHECK(rows[2].rfind("lexicase,3,", 0) == 0);

    // 6 run directories
    std::size_t run_dirs = 0;
    for (const auto& e : std::filesystem::directory_iterator(dir.file("cmp/runs"))) {
        (void)e;
        ++run_dirs;
    }
    CHECK(run_dirs == 6);
}

TEST_CASE("compare std matches a manual recomputation") {
    testsupport::TmpDir dir("std");
    ExperimentSpec spec = tiny_spec(dir.file("cmp"));
    apply_config_entry(spec, "strategies", "random");
    apply_config_entry(spec, "replicates", "3");
    validate_spec(spec);
    CHECK(cli::cmd_compare(spec) == cli::kExitOk);

    // recompute from the per-run eval reports
    std::vector<double> accs;
    for (std::uint64_t seed : spec.resolved_seeds()) {
        std::ifstream in(dir.file("cmp/runs/random-seed" + std::to_string(seed) + "/eval.json"));
        std::stringstream ss;
        ss << in.rdbuf();
        const auto j = ss.str();
        const auto pos = j.find("\"accuracy\": ");
        REQUIRE(pos != std::string::npos);
        accs.push_back(std::stod(j.substr(pos + 12)));
    }
    double mean = 0;
    for (double a : accs) mean += a;
    mean /= 3.0;
    double var = 0;
    for (double a : accs) var += (a - mean) * (a - mean);
    const double sd = std::sqrt(var / 2.0);

    const auto rows = read_csv_rows(dir.file("cmp/summary.csv"));
    std::stringstream row(rows[1]);
    std::string cell;
    std::getline(row, cell, ',');  // strategy
    std::getline(row, cell, ',');  // n
    std::getline(row, cell, ',');
    CHECK(std::stod(cell) == doctest::Approx(mean).epsilon(1e-12));
    std::getline(row, cell, ',');
    CHECK(std::stod(cell) == doctest::Approx(sd).epsilon(1e-12));
}

TEST_CASE("single replicate reports zero std") {
    testsupport::TmpDir dir("one");
    ExperimentSpec spec = tiny_spec(dir.file("cmp"));
    apply_config_entry(spec, "strategies", "random");
    apply_config_entry(spec, "replicates", "1");
    validate_spec(spec);
    CHECK(cli::cmd_compare(spec) == cli::kExitOk);
    const auto rows = read_csv_rows(dir.file("cmp/summary.csv"));
    CHECK(rows[1].substr(rows[1].rfind(',') + 1) == "0");
}

TEST_CASE("population sweep rows and the p=1 degeneracy") {
    testsupport::TmpDir dir("sweep");
    ExperimentSpec spec = tiny_spec(dir.file("sweep"));
    apply_config_entry(spec, "sweep_sizes", "1,2");
    apply_config_entry(spec, "replicates", "1");
    validate_spec(spec);
    CHECK(cli::cmd_sweep_population(spec) == cli::kExitOk);
    const auto rows = read_csv_rows(dir.file("sweep/summary.csv"));
    REQUIRE(rows.size() == 3);  // header + 2 sizes

    // p=1 lexicase equals an sgd-baseline run with the same seed and budget
    ExperimentSpec base = tiny_spec(dir.file("base"));
    apply_config_entry(base, "strategy", "sgd-baseline");
    validate_spec(base);
    cli::TrainArgs args;
    args.spec = base;
    CHECK(cli::cmd_train(args) == cli::kExitOk);
    CHECK(testsupport::slurp(dir.file("sweep/runs/p1-seed3/model.lxgd")) ==
          testsupport::slurp(dir.file("base/model.lxgd")));
}

TEST_CASE("eval reports the checkpoint accuracy on the chosen split") {
    testsupport::TmpDir dir("eval");
    cli::TrainArgs train;
    train.spec = tiny_spec(dir.file("run"));
    CHECK(cli::cmd_train(train) == cli::kExitOk);

    cli::EvalArgs eval;
    eval.spec = train.spec;
    eval.spec.out_dir = dir.file("eval");
    eval.checkpoint = dir.file("run/model.lxgd");
    eval.split = "train";
    CHECK(cli::cmd_eval(eval) == cli::kExitOk);
    CHECK(std::filesystem::exists(dir.file("eval/eval-train.json")));
}

TEST_CASE("profile writes csv rows per sample-channel and a json summary") {
    testsupport::TmpDir dir("profile");
    ExperimentSpec spec = tiny_spec(dir.file("run"));
    apply_config_entry(spec, "model", "conv-small");
    apply_config_entry(spec, "data_image", "1x8x8");
    apply_config_entry(spec, "generations", "1");
    validate_spec(spec);
    cli::TrainArgs train;
    train.spec = spec;
    CHECK(cli::cmd_train(train) == cli::kExitOk);

    cli::ProfileArgs prof;
    prof.spec = spec;
    prof.spec.out_dir = dir.file("prof");
    prof.spec.profile_k = 1;
    prof.checkpoint = dir.file("run/model.lxgd");
    CHECK(cli::cmd_profile(prof) == cli::kExitOk);
    // K=1: header + one row per channel of the final conv block (16)
    CHECK(count_lines(dir.file("prof/profile.csv")) == 17);
    CHECK(std::filesystem::exists(dir.file("prof/profile.json")));

    // reproducible across reruns
    const auto first = testsupport::slurp(dir.file("prof/profile.csv"));
    CHECK(cli::cmd_profile(prof) == cli::kExitOk);
    CHECK(testsupport::slurp(dir.file("prof/profile.csv")) == first);
}

TEST_CASE("idx files train end to end through the cli") {
    testsupport::TmpDir dir("idxcli");
    // 8x8 synthetic digit-like fixtures in idx format: 40 train, 16 test
    auto write_idx_pair = [&](const std::string& img, const std::string& lbl, std::uint32_t n,
                              std::uint64_t seed) {
        Rng rng(seed);
        std::vector<std::uint8_t> ib{0, 0, 8, 3};
        for (std::uint32_t v : {n, 8u, 8u})
            for (int s = 24; s >= 0; s -= 8) ib.push_back(static_cast<std::uint8_t>(v >> s));
        std::vector<std::uint8_t> lb{0, 0, 8, 1};
        for (int s = 24; s >= 0; s -= 8) lb.push_back(static_cast<std::uint8_t>(n >> s));
        for (std::uint32_t i = 0; i < n; ++i) {
            const std::uint8_t label = i % 2;
            lb.push_back(label);
            // class 0 bright on the left half, class 1 on the right
            for (int y = 0; y < 8; ++y)
                for (int x = 0; x < 8; ++x) {
                    const bool bright = label == 0 ? x < 4 : x >= 4;
                    ib.push_back(static_cast<std::uint8_t>(
                        (bright ? 180 : 30) + static_cast<int>(rng.bounded(40))));
                }
        }
        testsupport::write_bytes(img, ib);
        testsupport::write_bytes(lbl, lb);
    };
    write_idx_pair(dir.file("train-img"), dir.file("train-lbl"), 40, 1);
    write_idx_pair(dir.file("test-img"), dir.file("test-lbl"), 16, 2);

    ExperimentSpec spec;
    apply_config_entry(spec, "dataset", "idx");
    apply_config_entry(spec, "data_train_images", dir.file("train-img"));
    apply_config_entry(spec, "data_train_labels", dir.file("train-lbl"));
    apply_config_entry(spec, "data_test_images", dir.file("test-img"));
    apply_config_entry(spec, "data_test_labels", dir.file("test-lbl"));
    apply_config_entry(spec, "model", "conv-small");
    apply_config_entry(spec, "population", "2");
    apply_config_entry(spec, "generations", "2");
    apply_config_entry(spec, "batch_size", "8");
    apply_config_entry(spec, "augment", "true");
    apply_config_entry(spec, "crop_padding", "1");
    apply_config_entry(spec, "out", dir.file("run"));
    validate_spec(spec);
    CHECK(spec.run.augment.hflip_prob == 0.0);  // digits: flips default off

    cli::TrainArgs args;
    args.spec = spec;
    CHECK(cli::cmd_train(args) == cli::kExitOk);
    CHECK(count_lines(dir.file("run/metrics.jsonl")) == 2);
    CHECK(std::filesystem::exists(dir.file("run/model.lxgd")));
}

TEST_CASE("binary exit codes: 0 success, 1 runtime, 2 config") {
    testsupport::TmpDir dir("exit");
    const std::string common =
        " --set dataset=synthetic-blobs --set data_train_n=32 --set data_test_n=32"
        " --set generations=1 --set population=2 --set batch_size=16 --set mlp_hidden=4";
    CHECK(run_binary("train --out " + dir.file("ok") + common) == 0);
    CHECK(run_binary("train --set poplation=4 --out " + dir.file("bad") + common) == 2);
    CHECK(run_binary("eval --ckpt " + dir.file("missing.lxgd") + common) == 1);
}

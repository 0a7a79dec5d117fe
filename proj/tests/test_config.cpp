#include <doctest.h>

#include "lexigrad/config.hpp"

using namespace lexigrad;

TEST_CASE("defaults mirror the documented experiment protocol") {
    const ExperimentSpec spec = parse_config_text("", "empty");
    CHECK(spec.run.population == 4);
    CHECK(spec.run.momentum == 0.9);
    CHECK(spec.run.momentum_policy == MomentumPolicy::ResetEachGeneration);
    CHECK(spec.run.lr_max == 0.1);
    CHECK(spec.run.lr_min == 0.0);
    CHECK(spec.run.batch_size == 128);
    CHECK(spec.run.strategy == Strategy::Lexicase);
    CHECK(spec.run.selection_mode == SelectionMode::Modified);
    CHECK(spec.replicates == 3);
    CHECK(spec.sweep_sizes == std::vector<std::int64_t>{2, 4, 6, 8});
    CHECK(spec.profile_k == 100);
}

TEST_CASE("full round trip: render then parse is the identity") {
    ExperimentSpec spec = parse_config_text(R"(
# comment line
strategy = tournament
population = 6
generations = 17
batch_size = 32
momentum = 0.85
momentum_policy = inherit
lr_max = 0.2
lr_min = 0.01
selection_mode = original
selection_case_cap = 500
selection_window = 7
seed = 99
workers = 3
model = conv-small
augment = true
crop_padding = 2
hflip_prob = 0.25
dataset = idx
data_train_images = /data/train-images
data_train_labels = /data/train-labels
data_test_images = /data/test-images
data_test_labels = /data/test-labels
out = runs/exp7
replicates = 5
replicate_seeds = 3, 5, 8
strategies = sgd-baseline, random, lexicase
sweep_sizes = 2, 4
profile_k = 64
profile_bins = 40
)",
                                            "inline");
    const ExperimentSpec reparsed = parse_config_text(render_config(spec), "echo");
    CHECK(reparsed == spec);

    // and a second spec with other sources round-trips too
    ExperimentSpec moons;
    apply_config_entry(moons, "dataset", "synthetic-moons");
    apply_config_entry(moons, "data_noise", "0.17");
    apply_config_entry(moons, "data_train_n", "1000");
    apply_config_entry(moons, "epochs", "10");
    apply_config_entry(moons, "budget", "plus-one");
    validate_spec(moons);
    CHECK(parse_config_text(render_config(moons), "echo2") == moons);
}

TEST_CASE("unknown keys are named") {
    CHECK_THROWS_WITH_AS(parse_config_text("poplation = 4\n", "cfg"),
                         doctest::Contains("unknown config key \"poplation\""), ConfigError);
}

TEST_CASE("malformed values are rejected with the key") {
    CHECK_THROWS_WITH_AS(parse_config_text("population = four\n", "cfg"),
                         doctest::Contains("population"), ConfigError);
    CHECK_THROWS_WITH_AS(parse_config_text("momentum = 1.5\n", "cfg"), doctest::Contains("momentum"),
                         ConfigError);
    CHECK_THROWS_WITH_AS(parse_config_text("strategy = greedy\n", "cfg"),
                         doctest::Contains("unknown strategy"), ConfigError);
    CHECK_THROWS_AS(parse_config_text("just a line\n", "cfg"), ConfigError);
}

TEST_CASE("sgd-baseline coerces the population to one") {
    const auto spec = parse_config_text("strategy = sgd-baseline\npopulation = 8\n", "cfg");
    CHECK(spec.run.population == 1);
}

TEST_CASE("epoch budgets resolve generations") {
    ExperimentSpec spec;
    apply_config_entry(spec, "epochs", "10");
    CHECK(spec.resolved_generations(4) == 40);  // parity
    apply_config_entry(spec, "budget", "plus-one");
    CHECK(spec.resolved_generations(4) == 50);
    apply_config_entry(spec, "epochs", "0");
    apply_config_entry(spec, "generations", "23");
    CHECK(spec.resolved_generations(4) == 23);
}

TEST_CASE("replicate seeds default to consecutive seeds") {
    ExperimentSpec spec;
    apply_config_entry(spec, "seed", "11");
    apply_config_entry(spec, "replicates", "3");
    CHECK(spec.resolved_seeds() == std::vector<std::uint64_t>{11, 12, 13});
    apply_config_entry(spec, "replicate_seeds", "4,9");
    CHECK(spec.resolved_seeds() == std::vector<std::uint64_t>{4, 9});
}

TEST_CASE("hflip defaults off except for photographic sources") {
    const auto moons = parse_config_text("dataset = synthetic-moons\naugment = true\n", "cfg");
    CHECK(moons.run.augment.hflip_prob == 0.0);
    const auto idx = parse_config_text("dataset = idx\naugment = true\n", "cfg");
    CHECK(idx.run.augment.hflip_prob == 0.0);
    const auto cifar = parse_config_text("dataset = cifar10\naugment = true\n", "cfg");
    CHECK(cifar.run.augment.hflip_prob == 0.5);
    // explicit values win over the auto rule
    const auto forced = parse_config_text("dataset = cifar10\nhflip_prob = 0.1\n", "cfg");
    CHECK(forced.run.augment.hflip_prob == 0.1);
}

TEST_CASE("blob image shapes parse as CxHxW") {
    ExperimentSpec spec;
    apply_config_entry(spec, "data_image", "1x8x8");
    CHECK(spec.run.data.image_c == 1);
    CHECK(spec.run.data.image_h == 8);
    CHECK(spec.run.data.image_w == 8);
    CHECK_THROWS_AS(apply_config_entry(spec, "data_image", "8x8"), ConfigError);
}

#include <doctest.h>

#include <numeric>
#include <set>
#include <stdexcept>

#include "lexigrad/evolution.hpp"
#include "support/direct_loop.hpp"
#include "support/test_util.hpp"

using namespace lexigrad;

namespace {

RunConfig tiny_cfg() {
    RunConfig cfg;
    cfg.population = 4;
    cfg.generations = 4;
    cfg.strategy = Strategy::Lexicase;
    cfg.momentum_policy = MomentumPolicy::ResetEachGeneration;
    cfg.batch_size = 16;
    cfg.lr_max = 0.1;
    cfg.seed = 21;
    cfg.model = "mlp-small";
    cfg.mlp_hidden = 8;
    cfg.workers = 1;
    return cfg;
}

Dataset moons(std::int64_t n, std::uint64_t seed = 5) {
    SyntheticSpec spec;
    spec.kind = SyntheticSpec::Kind::TwoMoons;
    spec.n = n;
    spec.noise = 0.15;
    spec.seed = seed;
    Dataset ds = make_synthetic(spec);
    ds.channel_means = compute_channel_means(ds);
    return ds;
}

Dataset blobs(std::int64_t n, std::uint64_t seed = 9) {
    SyntheticSpec spec;
    spec.kind = SyntheticSpec::Kind::GaussianBlobs;
    spec.n = n;
    spec.classes = 2;
    spec.noise = 0.5;
    spec.seed = seed;
    Dataset ds = make_synthetic(spec);
    ds.channel_means = compute_channel_means(ds);
    return ds;
}

}  // namespace

TEST_CASE("clone_parent copies params and applies the policy") {
    const Dataset ds = moons(64);
    RunConfig cfg = tiny_cfg();
    Candidate parent;
    parent.model = build_model(cfg, ds);
    parent.opt = OptimizerState::zeros_like(parent.model, 0.9);
    parent.opt.velocity[0][0] = 0.5;

    const auto clones = clone_parent(parent, 4, MomentumPolicy::Inherit, 0.9, cfg.seed, 3);
    REQUIRE(clones.size() == 4);
    std::set<std::uint64_t> seeds;
    for (const auto& c : clones) {
        CHECK(testsupport::params_identical(c.model, parent.model));
        CHECK(c.opt.velocity[0][0] == 0.5);
        seeds.insert(c.rng_seed);
    }
    CHECK(seeds.size() == 4);  // derived seeds distinct

    const auto reset = clone_parent(parent, 2, MomentumPolicy::ResetEachGeneration, 0.9, cfg.seed, 3);
    CHECK(reset[0].opt.velocity[0][0] == 0.0);
    CHECK(reset[0].rng_seed == clones[0].rng_seed);  // same stream, same generation
}

TEST_CASE("budget helpers") {
    CHECK(budget_generations(10, 4, BudgetRule::StepParity) == 40);
    CHECK(budget_generations(10, 4, BudgetRule::PlusOne) == 50);
    CHECK(budget_generations(200, 1, BudgetRule::StepParity) == 200);
}

TEST_CASE("zero generations returns the untouched initial model") {
    const Dataset ds = moons(32);
    RunConfig cfg = tiny_cfg();
    cfg.generations = 0;
    const auto res = run_training(cfg, ds);
    CHECK(res.records.empty());
    CHECK(testsupport::params_identical(res.parent.model, build_model(cfg, ds)));
}

TEST_CASE("sgd-baseline through the evolution loop equals a direct loop") {
    const Dataset ds = blobs(60);
    RunConfig cfg = tiny_cfg();
    cfg.strategy = Strategy::SgdBaseline;
    cfg.population = 1;
    cfg.generations = 5;
    const auto res = run_training(cfg, ds);
    const ModelState direct = testsupport::direct_baseline_loop(cfg, ds);
    CHECK(testsupport::params_identical(res.parent.model, direct));
}

TEST_CASE("population 1 degenerates every strategy to the same trajectory") {
    const Dataset ds = moons(48);
    RunConfig base = tiny_cfg();
    base.population = 1;
    base.generations = 3;

    RunConfig sgd = base;
    sgd.strategy = Strategy::SgdBaseline;
    const auto want = run_training(sgd, ds);

    for (Strategy s : {Strategy::Random, Strategy::Tournament, Strategy::Lexicase}) {
        RunConfig cfg = base;
        cfg.strategy = s;
        const auto got = run_training(cfg, ds);
        CHECK(testsupport::params_identical(got.parent.model, want.parent.model));
    }
}

TEST_CASE("zero learning rate keeps candidates identical to the parent") {
    const Dataset ds = moons(40);
    RunConfig cfg = tiny_cfg();
    cfg.population = 2;
    cfg.generations = 1;
    cfg.lr_max = 0.0;
    cfg.lr_min = 0.0;
    Candidate parent;
    parent.model = build_model(cfg, ds);
    parent.opt = OptimizerState::zeros_like(parent.model, cfg.momentum);
    const LrSchedule sched = make_schedule(cfg, ds.size(), cfg.generations);
    const auto gen = run_generation(parent, cfg, ds, sched, 0);
    CHECK(testsupport::params_identical(gen.parent.model, parent.model));
    CHECK((gen.record.termination == "exhausted-random" || gen.record.termination == "all-fail-random"));
}

TEST_CASE("training is deterministic and worker-count independent") {
    const Dataset ds = moons(120);
    RunConfig cfg = tiny_cfg();
    cfg.generations = 5;

    const auto a = run_training(cfg, ds);
    const auto b = run_training(cfg, ds);
    CHECK(testsupport::params_identical(a.parent.model, b.parent.model));
    REQUIRE(a.records.size() == b.records.size());
    for (std::size_t g = 0; g < a.records.size(); ++g) {
        CHECK(a.records[g].selected == b.records[g].selected);
        CHECK(a.records[g].train_accuracy == b.records[g].train_accuracy);
        CHECK(a.records[g].cases_consumed == b.records[g].cases_consumed);
        CHECK(a.records[g].termination == b.records[g].termination);
        CHECK(a.records[g].steps_per_candidate == b.records[g].steps_per_candidate);
    }

    RunConfig threaded = cfg;
    threaded.workers = 4;
    const auto c = run_training(threaded, ds);
    CHECK(testsupport::params_identical(a.parent.model, c.parent.model));
    for (std::size_t g = 0; g < a.records.size(); ++g) {
        CHECK(a.records[g].selected == c.records[g].selected);
        CHECK(a.records[g].train_accuracy == c.records[g].train_accuracy);
    }
}

TEST_CASE("candidates consume disjoint sample sets within a generation") {
    const Dataset ds = moons(50);
    RunConfig cfg = tiny_cfg();
    cfg.generations = 2;
    cfg.record_consumed_indices = true;
    const auto res = run_training(cfg, ds);
    for (const auto& rec : res.records) {
        std::set<std::int64_t> seen;
        std::size_t total = 0;
        for (const auto& consumed : rec.consumed_indices) {
            for (auto i : consumed) {
                CHECK(!seen.count(i));
                seen.insert(i);
            }
            total += consumed.size();
        }
        CHECK(total == static_cast<std::size_t>(ds.size()));
    }
}

TEST_CASE("per-candidate step counts match the analytic batch count") {
    const Dataset ds = moons(53);  // odd size: subsets 14,13,13,13
    RunConfig cfg = tiny_cfg();
    cfg.generations = 3;
    cfg.batch_size = 4;
    const auto res = run_training(cfg, ds);
    const std::int64_t base = ds.size() / cfg.population;
    const std::int64_t rem = ds.size() % cfg.population;
    std::int64_t lineage_steps = 0;
    for (const auto& rec : res.records) {
        for (std::int64_t i = 0; i < cfg.population; ++i) {
            const std::int64_t size = base + (i < rem ? 1 : 0);
            const std::int64_t steps = (size + cfg.batch_size - 1) / cfg.batch_size;
            CHECK(rec.steps_per_candidate[static_cast<std::size_t>(i)] == steps);
        }
        lineage_steps += rec.steps_per_candidate[static_cast<std::size_t>(rec.selected)];
    }
    CHECK(res.parent.opt.step_counter == lineage_steps);
}

TEST_CASE("momentum policies yield different trajectories") {
    const Dataset ds = moons(80);
    RunConfig cfg = tiny_cfg();
    cfg.generations = 4;

    auto run_with = [&](MomentumPolicy policy) {
        RunConfig c = cfg;
        c.momentum_policy = policy;
        return run_training(c, ds);
    };
    const auto none = run_with(MomentumPolicy::NoMomentum);
    const auto reset = run_with(MomentumPolicy::ResetEachGeneration);
    const auto inherit = run_with(MomentumPolicy::Inherit);
    CHECK(!testsupport::params_identical(none.parent.model, reset.parent.model));
    CHECK(!testsupport::params_identical(none.parent.model, inherit.parent.model));
    CHECK(!testsupport::params_identical(reset.parent.model, inherit.parent.model));
}

TEST_CASE("a non-finite candidate aborts the run naming the candidate") {
    const Dataset ds = moons(16);
    RunConfig cfg = tiny_cfg();
    cfg.population = 2;
    Candidate parent;
    parent.model = build_model(cfg, ds);
    parent.opt = OptimizerState::zeros_like(parent.model, cfg.momentum);
    parent.model.params[0].values[0] = std::numeric_limits<double>::infinity();
    const LrSchedule sched = make_schedule(cfg, ds.size(), 1);
    CHECK_THROWS_WITH_AS(run_generation(parent, cfg, ds, sched, 0), doctest::Contains("candidate"),
                         std::runtime_error);
}

TEST_CASE("sgd-baseline refuses a population other than 1") {
    const Dataset ds = moons(16);
    RunConfig cfg = tiny_cfg();
    cfg.strategy = Strategy::SgdBaseline;
    cfg.population = 4;
    CHECK_THROWS_AS(run_training(cfg, ds), std::invalid_argument);
}

TEST_CASE("weight decay changes the trajectory only when nonzero") {
    const Dataset ds = moons(48);
    RunConfig cfg = tiny_cfg();
    cfg.generations = 2;
    const auto plain = run_training(cfg, ds);
    RunConfig decayed = cfg;
    decayed.weight_decay = 0.01;
    const auto wd = run_training(decayed, ds);
    CHECK(!testsupport::params_identical(plain.parent.model, wd.parent.model));
    RunConfig zero = cfg;
    zero.weight_decay = 0.0;
    CHECK(testsupport::params_identical(plain.parent.model, run_training(zero, ds).parent.model));
}

TEST_CASE("augmented training stays deterministic") {
    SyntheticSpec spec;
    spec.kind = SyntheticSpec::Kind::GaussianBlobs;
    spec.n = 64;
    spec.classes = 2;
    spec.noise = 2.0;
    spec.seed = 13;
    spec.image_c = 1;
    spec.image_h = 8;
    spec.image_w = 8;
    Dataset ds = make_synthetic(spec);
    ds.channel_means = compute_channel_means(ds);

    RunConfig cfg = tiny_cfg();
    cfg.model = "conv-small";
    cfg.generations = 2;
    cfg.augment.enabled = true;
    cfg.augment.crop_padding = 1;
    cfg.augment.hflip_prob = 0.5;

    const auto a = run_training(cfg, ds);
    const auto b = run_training(cfg, ds);
    CHECK(testsupport::params_identical(a.parent.model, b.parent.model));

    // augmentation must change the trajectory relative to the raw pipeline
    RunConfig raw = cfg;
    raw.augment.enabled = false;
    const auto c = run_training(raw, ds);
    CHECK(!testsupport::params_identical(a.parent.model, c.parent.model));
}

TEST_CASE("selection case cap limits the eval universe") {
    const Dataset ds = moons(64);
    RunConfig cfg = tiny_cfg();
    cfg.generations = 1;
    cfg.selection_case_cap = 10;
    const auto res = run_training(cfg, ds);
    CHECK(res.records[0].cases_consumed <= 10);
}

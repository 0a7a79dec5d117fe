#include <benchmark/benchmark.h>

#include <numeric>

#include "lexigrad/evolution.hpp"
#include "support_fixtures.hpp"

using namespace lexigrad;

namespace {

void BM_ForwardMlp(benchmark::State& state) {
    const auto fix = bench::mlp_fixture(static_cast<std::int64_t>(state.range(0)));
    for (auto _ : state) {
        auto out = forward(fix.model, fix.batch);
        benchmark::DoNotOptimize(out.values.data());
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ForwardMlp)->Arg(32)->Arg(128)->Arg(512);

void BM_LossAndGradMlp(benchmark::State& state) {
    const auto fix = bench::mlp_fixture(static_cast<std::int64_t>(state.range(0)));
    for (auto _ : state) {
        auto lg = loss_and_grad(fix.model, fix.batch, fix.labels);
        benchmark::DoNotOptimize(lg.grads.data());
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_LossAndGradMlp)->Arg(32)->Arg(128);

void BM_LossAndGradConv(benchmark::State& state) {
    const auto fix = bench::conv_fixture(static_cast<std::int64_t>(state.range(0)));
    for (auto _ : state) {
        auto lg = loss_and_grad(fix.model, fix.batch, fix.labels);
        benchmark::DoNotOptimize(lg.grads.data());
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_LossAndGradConv)->Arg(16)->Arg(64);

void BM_SgdStep(benchmark::State& state) {
    const auto fix = bench::conv_fixture(8);
    auto opt = OptimizerState::zeros_like(fix.model, 0.9);
    const auto lg = loss_and_grad(fix.model, fix.batch, fix.labels);
    ModelState model = fix.model;
    for (auto _ : state) {
        auto step = sgd_step(model, opt, lg.grads, 0.01);
        benchmark::DoNotOptimize(step.model.params.data());
    }
}
BENCHMARK(BM_SgdStep);

void BM_Partition(benchmark::State& state) {
    Rng rng(7);
    for (auto _ : state) {
        auto part = partition(static_cast<std::int64_t>(state.range(0)), 8, rng);
        benchmark::DoNotOptimize(part.assignments.data());
    }
}
BENCHMARK(BM_Partition)->Arg(1000)->Arg(50000);

void BM_LexicaseSelect(benchmark::State& state) {
    // matrix-backed pool: p candidates x 4096 cases, 70% per-case accuracy
    const int p = static_cast<int>(state.range(0));
    Rng gen(13);
    std::vector<std::vector<std::uint8_t>> m(static_cast<std::size_t>(p),
                                             std::vector<std::uint8_t>(4096));
    for (auto& row : m)
        for (auto& cell : row) cell = gen.bernoulli(0.7) ? 1 : 0;
    std::vector<int> pool(static_cast<std::size_t>(p));
    std::iota(pool.begin(), pool.end(), 0);

    std::uint64_t round = 0;
    for (auto _ : state) {
        CorrectnessCache cache(
            p, 4096, [&m](std::span<const int> cands, std::span<const std::int64_t> cases) {
                std::vector<std::uint8_t> block;
                block.reserve(cands.size() * cases.size());
                for (int c : cands)
                    for (auto k : cases)
                        block.push_back(m[static_cast<std::size_t>(c)][static_cast<std::size_t>(k)]);
                return block;
            });
        Rng rng(derive_seed(3, round++));
        const auto seq = shuffle_cases(4096, rng);
        auto out = lexicase_select(cache, pool, seq, rng, SelectionMode::Modified, 32);
        benchmark::DoNotOptimize(out.selected);
    }
}
BENCHMARK(BM_LexicaseSelect)->Arg(4)->Arg(8);

void BM_GenerationTwoMoons(benchmark::State& state) {
    SyntheticSpec spec;
    spec.kind = SyntheticSpec::Kind::TwoMoons;
    spec.n = 400;
    spec.noise = 0.2;
    spec.seed = 5;
    Dataset ds = make_synthetic(spec);
    ds.channel_means = compute_channel_means(ds);

    RunConfig cfg;
    cfg.strategy = Strategy::Lexicase;
    cfg.population = 4;
    cfg.generations = 1;
    cfg.batch_size = 16;
    cfg.mlp_hidden = 16;
    cfg.workers = static_cast<int>(state.range(0));

    Candidate parent;
    parent.model = build_model(cfg, ds);
    parent.opt = OptimizerState::zeros_like(parent.model, cfg.momentum);
    const LrSchedule sched = make_schedule(cfg, ds.size(), 100);

    std::int64_t g = 0;
    for (auto _ : state) {
        auto res = run_generation(parent, cfg, ds, sched, g++ % 100);
        benchmark::DoNotOptimize(res.record.selected);
    }
}
BENCHMARK(BM_GenerationTwoMoons)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();

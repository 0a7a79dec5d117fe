#include "lexigrad/evolution.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include <json.hpp>

#include "lexigrad/parallel.hpp"

namespace lexigrad {

namespace {

struct TrainStats {
    std::int64_t steps = 0;
    double lr_last = 0.0;
    std::vector<std::int64_t> consumed;
    std::string error;
};

// One pass of mini-batch SGD over the candidate's subset. Augmentation (when
// enabled) draws from the candidate's private stream; the subset order is
// already a random slice of a fresh permutation.
TrainStats train_candidate(Candidate& cand, const std::vector<std::int64_t>& subset,
                           const Dataset& train, const RunConfig& cfg, const LrSchedule& sched,
                           bool record_consumed) {
    TrainStats stats;
    Rng rng(cand.rng_seed);
    try {
        const std::int64_t m = static_cast<std::int64_t>(subset.size());
        for (std::int64_t pos = 0; pos < m; pos += cfg.batch_size) {
            const std::int64_t len = std::min(cfg.batch_size, m - pos);
            const std::span<const std::int64_t> idx(subset.data() + pos, static_cast<std::size_t>(len));
            const Tensor batch = gather_train_batch(train, idx, cfg.augment, rng);
            const std::vector<int> labels = gather_labels(train, idx);
            auto lg = loss_and_grad(cand.model, batch, labels);
            if (cfg.weight_decay > 0.0) {
                for (std::size_t p = 0; p < lg.grads.size(); ++p)
                    for (std::size_t i = 0; i < lg.grads[p].values.size(); ++i)
                        lg.grads[p].values[i] += cfg.weight_decay * cand.model.params[p].values[i];
            }
            const double eta = cosine_lr(sched, cand.opt.step_counter);
            auto step = sgd_step(cand.model, cand.opt, lg.grads, eta);
            cand.model = std::move(step.model);
            cand.opt = std::move(step.opt);
            ++stats.steps;
            stats.lr_last = eta;
            if (record_consumed) stats.consumed.insert(stats.consumed.end(), idx.begin(), idx.end());
        }
    } catch (const std::exception& e) {
        stats.error = e.what();
    }
    return stats;
}

}  // namespace

const char* strategy_name(Strategy s) {
    switch (s) {
        case Strategy::SgdBaseline: return "sgd-baseline";
        case Strategy::Random: return "random";
        case Strategy::Tournament: return "tournament";
        case Strategy::Lexicase: return "lexicase";
    }
    return "?";
}

std::string generation_record_json(const GenerationRecord& rec) {
    nlohmann::json j;
    j["generation"] = rec.generation;
    j["selected"] = rec.selected;
    j["train_accuracy"] = rec.train_accuracy;
    j["cases_consumed"] = rec.cases_consumed;
    j["termination"] = rec.termination;
    j["steps"] = rec.steps_per_candidate;
    j["lr_last"] = rec.lr_last;
    j["wall_ms"] = rec.wall_ms;
    if (!rec.selection_json.empty()) j["selection"] = nlohmann::json::parse(rec.selection_json);
    return j.dump();
}

std::int64_t budget_generations(std::int64_t epochs, std::int64_t p, BudgetRule rule) {
    if (epochs < 0 || p < 1) throw std::invalid_argument("bad epoch budget");
    return rule == BudgetRule::StepParity ? epochs * p : epochs * (p + 1);
}

std::int64_t effective_population(const RunConfig& cfg) {
    return cfg.strategy == Strategy::SgdBaseline ? 1 : cfg.population;
}

std::int64_t eval_case_count(const RunConfig& cfg, std::int64_t train_size) {
    if (cfg.selection_case_cap > 0) return std::min(cfg.selection_case_cap, train_size);
    return train_size;
}

LrSchedule make_schedule(const RunConfig& cfg, std::int64_t train_size, std::int64_t total_generations) {
    const std::int64_t p = effective_population(cfg);
    const std::int64_t max_subset = (train_size + p - 1) / p;
    const std::int64_t steps_per_gen = (max_subset + cfg.batch_size - 1) / cfg.batch_size;
    LrSchedule sched;
    sched.eta_max = cfg.lr_max;
    sched.eta_min = cfg.lr_min;
    sched.horizon = std::max<std::int64_t>(1, total_generations * steps_per_gen);
    return sched;
}

ModelState build_model(const RunConfig& cfg, const Dataset& ds) {
    Rng rng(stream::init_seed(cfg.seed));
    const auto shape = ds.sample_shape();
    std::vector<LayerSpec> layers;
    if (cfg.model == "mlp-small") {
        layers = mlp_small(shape, cfg.mlp_hidden, ds.num_classes);
    } else if (cfg.model == "conv-small") {
        layers = conv_small(shape, ds.num_classes);
    } else {
        throw std::invalid_argument("unknown model \"" + cfg.model + "\" (want mlp-small or conv-small)");
    }
    return init_params(std::move(layers), shape, ds.num_classes, rng);
}

std::vector<Candidate> clone_parent(const Candidate& parent, std::int64_t p, MomentumPolicy policy,
                                    double momentum, std::uint64_t run_seed, std::int64_t generation) {
    if (p < 1) throw std::invalid_argument("population must be >= 1");
    std::vector<Candidate> offspring;
    offspring.reserve(static_cast<std::size_t>(p));
    for (std::int64_t i = 0; i < p; ++i) {
        Candidate c;
        c.id = static_cast<int>(i);
        c.model = parent.model;
        c.opt = apply_momentum_policy(policy, parent.opt, parent.model, momentum);
        c.rng_seed = stream::candidate_seed(run_seed, generation, i);
        offspring.push_back(std::move(c));
    }
    return offspring;
}

GenerationResult run_generation(const Candidate& parent, const RunConfig& cfg, const Dataset& train,
                                const LrSchedule& sched, std::int64_t generation) {
    const auto t0 = std::chrono::steady_clock::now();
    const std::int64_t p = effective_population(cfg);
    if (train.size() < p)
        throw std::invalid_argument("dataset size " + std::to_string(train.size()) +
                                    " smaller than population " + std::to_string(p));

    auto candidates = clone_parent(parent, p, cfg.momentum_policy, cfg.momentum, cfg.seed, generation);

    Rng part_rng(stream::partition_seed(cfg.seed, generation));
    const auto part = partition(train.size(), p, part_rng);

    std::vector<TrainStats> stats(static_cast<std::size_t>(p));
    parallel_for(p, cfg.workers, [&](std::int64_t i) {
        stats[static_cast<std::size_t>(i)] =
            train_candidate(candidates[static_cast<std::size_t>(i)], part.assignments[static_cast<std::size_t>(i)],
                            train, cfg, sched, cfg.record_consumed_indices);
    });
    for (std::int64_t i = 0; i < p; ++i) {
        if (!stats[static_cast<std::size_t>(i)].error.empty())
            throw std::runtime_error("candidate " + std::to_string(i) + " failed in generation " +
                                     std::to_string(generation) + ": " + stats[static_cast<std::size_t>(i)].error);
    }

    // selection on the original training data, normalized, never augmented
    Rng sel_rng(stream::selection_seed(cfg.seed, generation));
    const std::int64_t eval_n = eval_case_count(cfg, train.size());
    std::vector<const ModelState*> models;
    models.reserve(static_cast<std::size_t>(p));
    for (const auto& c : candidates) models.push_back(&c.model);
    auto cache = make_model_correctness(models, train, eval_n, cfg.workers);

    GenerationRecord rec;
    rec.generation = generation;
    rec.termination = "-";
    int selected = 0;
    if (p == 1) {
        selected = 0;
        if (cfg.strategy == Strategy::Lexicase) rec.termination = termination_name(Termination::SingleSurvivor);
    } else {
        switch (cfg.strategy) {
            case Strategy::SgdBaseline: selected = 0; break;
            case Strategy::Random: selected = random_select(static_cast<std::size_t>(p), sel_rng); break;
            case Strategy::Tournament: {
                const auto acc = cache.full_accuracies();
                selected = tournament_select(acc, sel_rng);
                break;
            }
            case Strategy::Lexicase: {
                std::vector<int> pool(static_cast<std::size_t>(p));
                std::iota(pool.begin(), pool.end(), 0);
                const auto seq = shuffle_cases(eval_n, sel_rng);
                const auto outcome =
                    lexicase_select(cache, pool, seq, sel_rng, cfg.selection_mode, cfg.selection_window);
                selected = outcome.selected;
                rec.cases_consumed = outcome.cases_consumed;
                rec.termination = termination_name(outcome.termination);
                rec.selection_json = selection_event_json(strategy_name(cfg.strategy), cfg.selection_mode,
                                                          outcome, cfg.trace_cap);
                break;
            }
        }
    }

    rec.selected = selected;
    rec.train_accuracy = cache.full_accuracies();
    for (const auto& s : stats) {
        rec.steps_per_candidate.push_back(s.steps);
        if (cfg.record_consumed_indices) rec.consumed_indices.push_back(s.consumed);
    }
    rec.lr_last = stats[static_cast<std::size_t>(selected)].lr_last;
    if (rec.selection_json.empty()) {
        nlohmann::json j;
        j["strategy"] = strategy_name(cfg.strategy);
        j["selected"] = selected;
        rec.selection_json = j.dump();
    }

    GenerationResult res;
    res.parent = std::move(candidates[static_cast<std::size_t>(selected)]);
    res.parent.id = selected;
    rec.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    res.record = std::move(rec);
    return res;
}

TrainingResult run_training(const RunConfig& cfg, const Dataset& train, const MetricsSink& sink,
                            const Candidate* resume_from, std::int64_t start_generation) {
    if (cfg.population < 1) throw std::invalid_argument("population must be >= 1");
    if (cfg.strategy == Strategy::SgdBaseline && cfg.population != 1)
        throw std::invalid_argument("sgd-baseline requires population 1");
    if (cfg.generations < 0) throw std::invalid_argument("generations must be >= 0");
    if (cfg.batch_size < 1) throw std::invalid_argument("batch size must be >= 1");

    TrainingResult res;
    if (resume_from) {
        res.parent = *resume_from;
    } else {
        res.parent.id = 0;
        res.parent.model = build_model(cfg, train);
        const double mu = cfg.momentum_policy == MomentumPolicy::NoMomentum ? 0.0 : cfg.momentum;
        res.parent.opt = OptimizerState::zeros_like(res.parent.model, mu);
        res.parent.rng_seed = stream::candidate_seed(cfg.seed, -1, 0);
    }
    res.schedule = make_schedule(cfg, train.size(), start_generation + cfg.generations);

    for (std::int64_t g = start_generation; g < start_generation + cfg.generations; ++g) {
        auto gen = run_generation(res.parent, cfg, train, res.schedule, g);
        res.parent = std::move(gen.parent);
        if (sink) sink(gen.record);
        res.records.push_back(std::move(gen.record));
    }
    return res;
}

}  // namespace lexigrad

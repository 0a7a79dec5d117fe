#pragma once

// Classical momentum-SGD epoch loop written directly against the data, nn
// and optim primitives, bypassing the population scaffolding entirely. It
// shares only the public seed-stream derivations with the evolution loop it
// cross-checks.

#include <algorithm>

#include "lexigrad/evolution.hpp"

namespace testsupport {

inline lexigrad::ModelState direct_baseline_loop(const lexigrad::RunConfig& cfg,
                                                 const lexigrad::Dataset& train) {
    using namespace lexigrad;
    Rng init_rng(stream::init_seed(cfg.seed));
    ModelState model = init_params(mlp_small(train.sample_shape(), cfg.mlp_hidden, train.num_classes),
                                   train.sample_shape(), train.num_classes, init_rng);
    const std::int64_t steps_per_epoch = (train.size() + cfg.batch_size - 1) / cfg.batch_size;
    LrSchedule sched{cfg.lr_max, cfg.lr_min,
                     std::max<std::int64_t>(1, cfg.generations * steps_per_epoch)};

    OptimizerState opt = OptimizerState::zeros_like(model, cfg.momentum);
    for (std::int64_t epoch = 0; epoch < cfg.generations; ++epoch) {
        Rng part_rng(stream::partition_seed(cfg.seed, epoch));
        const auto subset = partition(train.size(), 1, part_rng).assignments[0];
        // reset policy: fresh velocity each epoch, step counter carried over
        OptimizerState fresh = OptimizerState::zeros_like(model, cfg.momentum);
        fresh.step_counter = opt.step_counter;
        opt = std::move(fresh);
        Rng rng(stream::candidate_seed(cfg.seed, epoch, 0));
        for (std::int64_t pos = 0; pos < train.size(); pos += cfg.batch_size) {
            const std::int64_t len = std::min(cfg.batch_size, train.size() - pos);
            const std::span<const std::int64_t> idx(subset.data() + pos, static_cast<std::size_t>(len));
            const Tensor batch = gather_train_batch(train, idx, cfg.augment, rng);
            const auto lg = loss_and_grad(model, batch, gather_labels(train, idx));
            const double eta = cosine_lr(sched, opt.step_counter);
            auto step = sgd_step(model, opt, lg.grads, eta);
            model = std::move(step.model);
            opt = std::move(step.opt);
        }
    }
    return model;
}

}  // namespace testsupport

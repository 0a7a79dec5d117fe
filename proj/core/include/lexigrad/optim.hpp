#pragma once

#include <cstdint>
#include <vector>

#include "lexigrad/nn.hpp"
#include "lexigrad/tensor.hpp"

namespace lexigrad {

// Momentum lifecycle across generations: none at all, re-zeroed at every
// generation start, or deep-copied from the selected parent.
enum class MomentumPolicy { NoMomentum, ResetEachGeneration, Inherit };

const char* momentum_policy_name(MomentumPolicy policy);

struct OptimizerState {
    std::vector<Tensor> velocity;  // congruent with ModelState::params
    double momentum_coef = 0.0;    // in [0, 1)
    std::int64_t step_counter = 0;

    static OptimizerState zeros_like(const ModelState& model, double momentum_coef);
};

struct LrSchedule {
    double eta_max = 0.1;
    double eta_min = 0.0;
    std::int64_t horizon = 1;  // total scheduled steps T
};

// eta(t) = eta_min + (eta_max - eta_min) * (1 + cos(pi * t / T)) / 2.
// t > T clamps to eta_min and emits a one-time overrun warning on stderr.
double cosine_lr(const LrSchedule& sched, std::int64_t t);

// v <- mu * v + g; w <- w - eta * v. Pure: returns updated copies.
struct StepResult {
    ModelState model;
    OptimizerState opt;
};
StepResult sgd_step(const ModelState& model, const OptimizerState& opt, const Gradients& grads,
                    double eta);

// Offspring optimizer state at generation start, per policy. momentum_coef is
// the configured coefficient used by Reset/Inherit (NoMomentum forces 0).
OptimizerState apply_momentum_policy(MomentumPolicy policy, const OptimizerState& parent_opt,
                                     const ModelState& model, double momentum_coef);

}  // namespace lexigrad

#include "lexigrad/optim.hpp"

#include <atomic>
#include <cmath>
#include <iostream>
#include <stdexcept>

namespace lexigrad {

const char* momentum_policy_name(MomentumPolicy policy) {
    switch (policy) {
        case MomentumPolicy::NoMomentum: return "none";
        case MomentumPolicy::ResetEachGeneration: return "reset";
        case MomentumPolicy::Inherit: return "inherit";
    }
    return "?";
}

OptimizerState OptimizerState::zeros_like(const ModelState& model, double momentum_coef) {
    OptimizerState opt;
    opt.momentum_coef = momentum_coef;
    opt.velocity.reserve(model.params.size());
    for (const auto& p : model.params) opt.velocity.push_back(Tensor::zeros(p.shape));
    return opt;
}

double cosine_lr(const LrSchedule& sched, std::int64_t t) {
    if (t < 0) throw std::invalid_argument("schedule step must be nonnegative");
    if (t > sched.horizon) {
        static std::atomic<bool> warned{false};
        if (!warned.exchange(true))
            std::cerr << "warning: lr schedule overrun (t=" << t << " > T=" << sched.horizon
                      << "), clamping to eta_min\n";
        return sched.eta_min;
    }
    const double frac = static_cast<double>(t) / static_cast<double>(sched.horizon);
    return sched.eta_min +
           0.5 * (sched.eta_max - sched.eta_min) * (1.0 + std::cos(3.14159265358979323846 * frac));
}

StepResult sgd_step(const ModelState& model, const OptimizerState& opt, const Gradients& grads,
                    double eta) {
    if (grads.size() != model.params.size() || opt.velocity.size() != model.params.size())
        throw std::invalid_argument("gradients/velocity not congruent with model parameters");
    StepResult res{model, opt};
    for (std::size_t p = 0; p < model.params.size(); ++p) {
        if (!grads[p].same_shape(model.params[p]))
            throw std::invalid_argument("gradient tensor " + std::to_string(p) + " has shape " +
                                        shape_str(grads[p].shape) + ", expected " +
                                        shape_str(model.params[p].shape));
        auto& w = res.model.params[p].values;
        auto& v = res.opt.velocity[p].values;
        const auto& g = grads[p].values;
        for (std::size_t i = 0; i < w.size(); ++i) {
            if (!std::isfinite(g[i]))
                throw std::runtime_error("non-finite gradient in parameter tensor " + std::to_string(p) +
                                         " at element " + std::to_string(i));
            v[i] = opt.momentum_coef * v[i] + g[i];
            w[i] -= eta * v[i];
        }
    }
    res.opt.step_counter = opt.step_counter + 1;
    return res;
}

OptimizerState apply_momentum_policy(MomentumPolicy policy, const OptimizerState& parent_opt,
                                     const ModelState& model, double momentum_coef) {
    switch (policy) {
        case MomentumPolicy::NoMomentum: {
            auto opt = OptimizerState::zeros_like(model, 0.0);
            opt.step_counter = parent_opt.step_counter;
            return opt;
        }
        case MomentumPolicy::ResetEachGeneration: {
            auto opt = OptimizerState::zeros_like(model, momentum_coef);
            opt.step_counter = parent_opt.step_counter;
            return opt;
        }
        case MomentumPolicy::Inherit: {
            OptimizerState opt = parent_opt;  // deep copy, velocity included
            opt.momentum_coef = momentum_coef;
            return opt;
        }
    }
    throw std::invalid_argument("unknown momentum policy");
}

}  // namespace lexigrad

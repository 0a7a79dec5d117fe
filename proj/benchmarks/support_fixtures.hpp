#pragma once

#include "lexigrad/nn.hpp"

namespace bench {

struct Fixture {
    lexigrad::ModelState model;
    lexigrad::Tensor batch;
    std::vector<int> labels;
};

inline Fixture mlp_fixture(std::int64_t batch_size) {
    using namespace lexigrad;
    Rng rng(1);
    Fixture fix;
    fix.model = init_params(mlp_small({1, 1, 2}, 32, 2), {1, 1, 2}, 2, rng);
    fix.batch = Tensor::zeros({batch_size, 1, 1, 2});
    for (auto& v : fix.batch.values) v = rng.uniform(-1, 1);
    fix.labels.resize(static_cast<std::size_t>(batch_size));
    for (auto& l : fix.labels) l = static_cast<int>(rng.bounded(2));
    return fix;
}

inline Fixture conv_fixture(std::int64_t batch_size) {
    using namespace lexigrad;
    Rng rng(2);
    Fixture fix;
    fix.model = init_params(conv_small({1, 8, 8}, 2), {1, 8, 8}, 2, rng);
    fix.batch = Tensor::zeros({batch_size, 1, 8, 8});
    for (auto& v : fix.batch.values) v = rng.uniform(-1, 1);
    fix.labels.resize(static_cast<std::size_t>(batch_size));
    for (auto& l : fix.labels) l = static_cast<int>(rng.bounded(2));
    return fix;
}

}  // namespace bench

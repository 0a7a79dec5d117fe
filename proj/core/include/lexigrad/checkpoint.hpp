#pragma once

#include <string>

#include "lexigrad/nn.hpp"
#include "lexigrad/optim.hpp"

namespace lexigrad {

// Little-endian "LXGD" container: magic, version, flags, layer-spec table,
// parameter tensors in declaration order, optional optimizer trailer
// (momentum coefficient, step counter, generation, velocity tensors).
// Byte-exact layout in docs/formats.md; round-trips bit-exactly.
struct Checkpoint {
    ModelState model;
    bool has_optimizer = false;
    bool has_velocity = false;
    OptimizerState opt;
    std::int64_t generation = 0;
};

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace lexigrad

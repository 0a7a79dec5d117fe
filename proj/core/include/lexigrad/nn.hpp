#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lexigrad/rng.hpp"
#include "lexigrad/tensor.hpp"

namespace lexigrad {

enum class LayerKind { Dense, Relu, Conv2d, MaxPool2d, Flatten };

std::string layer_kind_name(LayerKind kind);

struct LayerSpec {
    LayerKind kind = LayerKind::Relu;

    // dense
    std::int64_t in_features = 0;
    std::int64_t out_features = 0;

    // conv2d
    std::int64_t in_channels = 0;
    std::int64_t out_channels = 0;
    std::int64_t kernel = 0;
    std::int64_t stride = 1;
    std::int64_t padding = 0;

    // maxpool2d
    std::int64_t window = 0;
    std::int64_t pool_stride = 0;

    static LayerSpec dense(std::int64_t in, std::int64_t out);
    static LayerSpec relu();
    static LayerSpec conv2d(std::int64_t in_ch, std::int64_t out_ch, std::int64_t kernel,
                            std::int64_t stride = 1, std::int64_t padding = 0);
    static LayerSpec maxpool2d(std::int64_t window, std::int64_t stride);
    static LayerSpec flatten();

    bool parametric() const { return kind == LayerKind::Dense || kind == LayerKind::Conv2d; }
    bool operator==(const LayerSpec&) const = default;
};

// Ordered layer chain plus parameter tensors (weight then bias per parametric
// layer, in declaration order). Treated as an immutable value; the optimizer
// returns updated copies rather than mutating in place.
struct ModelState {
    std::vector<LayerSpec> layers;
    std::vector<Tensor> params;
    std::int64_t num_classes = 0;
};

// Same tree shape as ModelState::params.
using Gradients = std::vector<Tensor>;

// Output shape of one layer given its input shape (shapes exclude the batch
// dim handling: these operate on full batch shapes, i.e. [n, ...]).
std::vector<std::int64_t> infer_output_shape(const LayerSpec& spec,
                                             const std::vector<std::int64_t>& in_shape);

// Shapes after every layer; index 0 is the input batch shape. Throws on an
// incompatible chain.
std::vector<std::vector<std::int64_t>> trace_shapes(const std::vector<LayerSpec>& layers,
                                                    const std::vector<std::int64_t>& batch_shape);

// Index into ModelState::params of each layer's weight tensor (-1 for
// non-parametric layers); bias follows at +1.
std::vector<int> param_offsets(const std::vector<LayerSpec>& layers);

// Glorot-uniform weights, zero biases. sample_shape is one sample's shape
// (no batch dim), e.g. [C, H, W] or [features]. Validates the whole chain and
// that the final output width equals num_classes.
ModelState init_params(std::vector<LayerSpec> layers, const std::vector<std::int64_t>& sample_shape,
                       std::int64_t num_classes, Rng& rng);

// Checks params are shape-congruent with layers and the chain composes.
void validate_model(const ModelState& model, const std::vector<std::int64_t>& sample_shape);

// Pure inference pass; returns logits [n, num_classes].
Tensor forward(const ModelState& model, const Tensor& batch);

// Output of layers[0..layer_index] inclusive; used for activation profiling.
Tensor forward_to_layer(const ModelState& model, const Tensor& batch, int layer_index);

// Argmax class per sample; ties resolve to the lowest class index.
std::vector<int> predict(const ModelState& model, const Tensor& batch);

struct LossGrad {
    double loss = 0.0;
    Gradients grads;
};

// Softmax cross-entropy averaged over the batch, with reverse-mode gradients
// for every parameter tensor.
LossGrad loss_and_grad(const ModelState& model, const Tensor& batch, const std::vector<int>& labels);

// Loss only (no gradients); same forward path as loss_and_grad.
double loss_value(const ModelState& model, const Tensor& batch, const std::vector<int>& labels);

// Reference models. Input sample_shape is [C, H, W].
std::vector<LayerSpec> mlp_small(const std::vector<std::int64_t>& sample_shape, std::int64_t hidden,
                                 std::int64_t num_classes);
std::vector<LayerSpec> conv_small(const std::vector<std::int64_t>& sample_shape, std::int64_t num_classes);

}  // namespace lexigrad

#include "lexigrad/nn.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace lexigrad {

namespace {

[[noreturn]] void shape_error(const std::string& what) { throw std::invalid_argument(what); }

void check_finite(const Tensor& t, int layer_index, LayerKind kind) {
    if (!t.all_finite()) {
        throw std::runtime_error("layer " + std::to_string(layer_index) + " (" +
                                 layer_kind_name(kind) + ") produced non-finite values");
    }
}

// Forward result of one layer. argmax holds the flat input index chosen per
// output element for maxpool2d (first max in scan order on ties).
struct LayerOut {
    Tensor out;
    std::vector<std::int64_t> argmax;
};

LayerOut apply_dense(const LayerSpec& spec, const Tensor& w, const Tensor& b, const Tensor& x) {
    const std::int64_t n = x.dim(0);
    const std::int64_t in = spec.in_features;
    const std::int64_t out = spec.out_features;
    Tensor y = Tensor::zeros({n, out});
    for (std::int64_t r = 0; r < n; ++r) {
        const double* xr = x.data() + r * in;
        double* yr = y.data() + r * out;
        for (std::int64_t o = 0; o < out; ++o) {
            const double* wo = w.data() + o * in;
            double acc = b[o];
            for (std::int64_t i = 0; i < in; ++i) acc += xr[i] * wo[i];
            yr[o] = acc;
        }
    }
    return {std::move(y), {}};
}

LayerOut apply_relu(const Tensor& x) {
    Tensor y = x;
    for (double& v : y.values) v = v > 0.0 ? v : 0.0;
    return {std::move(y), {}};
}

LayerOut apply_conv2d(const LayerSpec& spec, const Tensor& w, const Tensor& b, const Tensor& x) {
    const std::int64_t n = x.dim(0), ci_n = spec.in_channels, h = x.dim(2), wd = x.dim(3);
    const std::int64_t co_n = spec.out_channels, k = spec.kernel, s = spec.stride, p = spec.padding;
    const std::int64_t oh = (h + 2 * p - k) / s + 1;
    const std::int64_t ow = (wd + 2 * p - k) / s + 1;
    Tensor y = Tensor::zeros({n, co_n, oh, ow});
    for (std::int64_t im = 0; im < n; ++im) {
        for (std::int64_t co = 0; co < co_n; ++co) {
            for (std::int64_t oy = 0; oy < oh; ++oy) {
                for (std::int64_t ox = 0; ox < ow; ++ox) {
                    double acc = b[co];
                    for (std::int64_t ci = 0; ci < ci_n; ++ci) {
                        for (std::int64_t ky = 0; ky < k; ++ky) {
                            const std::int64_t iy = oy * s + ky - p;
                            if (iy < 0 || iy >= h) continue;
                            for (std::int64_t kx = 0; kx < k; ++kx) {
                                const std::int64_t ix = ox * s + kx - p;
                                if (ix < 0 || ix >= wd) continue;
                                acc += x[((im * ci_n + ci) * h + iy) * wd + ix] *
                                       w[((co * ci_n + ci) * k + ky) * k + kx];
                            }
                        }
                    }
                    y[((im * co_n + co) * oh + oy) * ow + ox] = acc;
                }
            }
        }
    }
    return {std::move(y), {}};
}

LayerOut apply_maxpool2d(const LayerSpec& spec, const Tensor& x) {
    const std::int64_t n = x.dim(0), c_n = x.dim(1), h = x.dim(2), wd = x.dim(3);
    const std::int64_t win = spec.window, s = spec.pool_stride;
    const std::int64_t oh = (h - win) / s + 1;
    const std::int64_t ow = (wd - win) / s + 1;
    Tensor y = Tensor::zeros({n, c_n, oh, ow});
    std::vector<std::int64_t> argmax(static_cast<std::size_t>(y.size()));
    for (std::int64_t im = 0; im < n; ++im) {
        for (std::int64_t c = 0; c < c_n; ++c) {
            for (std::int64_t oy = 0; oy < oh; ++oy) {
                for (std::int64_t ox = 0; ox < ow; ++ox) {
                    double best = -1e308;
                    std::int64_t best_idx = -1;
                    for (std::int64_t ky = 0; ky < win; ++ky) {
                        for (std::int64_t kx = 0; kx < win; ++kx) {
                            const std::int64_t iy = oy * s + ky;
                            const std::int64_t ix = ox * s + kx;
                            const std::int64_t idx = ((im * c_n + c) * h + iy) * wd + ix;
                            if (x[idx] > best) {
                                best = x[idx];
                                best_idx = idx;
                            }
                        }
                    }
                    const std::int64_t oidx = ((im * c_n + c) * oh + oy) * ow + ox;
                    y[oidx] = best;
                    argmax[static_cast<std::size_t>(oidx)] = best_idx;
                }
            }
        }
    }
    return {std::move(y), std::move(argmax)};
}

LayerOut apply_flatten(const Tensor& x) {
    const std::int64_t n = x.dim(0);
    Tensor y(std::vector<std::int64_t>{n, x.size() / n}, x.values);
    return {std::move(y), {}};
}

LayerOut apply_layer(const LayerSpec& spec, const Tensor* w, const Tensor* b, const Tensor& x) {
    switch (spec.kind) {
        case LayerKind::Dense: return apply_dense(spec, *w, *b, x);
        case LayerKind::Relu: return apply_relu(x);
        case LayerKind::Conv2d: return apply_conv2d(spec, *w, *b, x);
        case LayerKind::MaxPool2d: return apply_maxpool2d(spec, x);
        case LayerKind::Flatten: return apply_flatten(x);
    }
    shape_error("unknown layer kind");
}

void backward_dense(const LayerSpec& spec, const Tensor& w, const Tensor& x, const Tensor& gout,
                    Tensor& gw, Tensor& gb, Tensor& gin) {
    const std::int64_t n = x.dim(0), in = spec.in_features, out = spec.out_features;
    for (std::int64_t r = 0; r < n; ++r) {
        const double* xr = x.data() + r * in;
        const double* gr = gout.data() + r * out;
        double* gir = gin.data() + r * in;
        for (std::int64_t o = 0; o < out; ++o) {
            const double g = gr[o];
            gb[o] += g;
            const double* wo = w.data() + o * in;
            double* gwo = gw.data() + o * in;
            for (std::int64_t i = 0; i < in; ++i) {
                gwo[i] += g * xr[i];
                gir[i] += g * wo[i];
            }
        }
    }
}

void backward_conv2d(const LayerSpec& spec, const Tensor& w, const Tensor& x, const Tensor& gout,
                     Tensor& gw, Tensor& gb, Tensor& gin) {
    const std::int64_t n = x.dim(0), ci_n = spec.in_channels, h = x.dim(2), wd = x.dim(3);
    const std::int64_t co_n = spec.out_channels, k = spec.kernel, s = spec.stride, p = spec.padding;
    const std::int64_t oh = gout.dim(2), ow = gout.dim(3);
    for (std::int64_t im = 0; im < n; ++im) {
        for (std::int64_t co = 0; co < co_n; ++co) {
            for (std::int64_t oy = 0; oy < oh; ++oy) {
                for (std::int64_t ox = 0; ox < ow; ++ox) {
                    const double g = gout[((im * co_n + co) * oh + oy) * ow + ox];
                    gb[co] += g;
                    for (std::int64_t ci = 0; ci < ci_n; ++ci) {
                        for (std::int64_t ky = 0; ky < k; ++ky) {
                            const std::int64_t iy = oy * s + ky - p;
                            if (iy < 0 || iy >= h) continue;
                            for (std::int64_t kx = 0; kx < k; ++kx) {
                                const std::int64_t ix = ox * s + kx - p;
                                if (ix < 0 || ix >= wd) continue;
                                const std::int64_t xi = ((im * ci_n + ci) * h + iy) * wd + ix;
                                const std::int64_t wi = ((co * ci_n + ci) * k + ky) * k + kx;
                                gw[wi] += g * x[xi];
                                gin[xi] += g * w[wi];
                            }
                        }
                    }
                }
            }
        }
    }
}

}  // namespace

std::string layer_kind_name(LayerKind kind) {
    switch (kind) {
        case LayerKind::Dense: return "dense";
        case LayerKind::Relu: return "relu";
        case LayerKind::Conv2d: return "conv2d";
        case LayerKind::MaxPool2d: return "maxpool2d";
        case LayerKind::Flatten: return "flatten";
    }
    return "?";
}

LayerSpec LayerSpec::dense(std::int64_t in, std::int64_t out) {
    if (in < 1 || out < 1) shape_error("dense widths must be positive");
    LayerSpec s;
    s.kind = LayerKind::Dense;
    s.in_features = in;
    s.out_features = out;
    return s;
}

LayerSpec LayerSpec::relu() {
    LayerSpec s;
    s.kind = LayerKind::Relu;
    return s;
}

LayerSpec LayerSpec::conv2d(std::int64_t in_ch, std::int64_t out_ch, std::int64_t kernel,
                            std::int64_t stride, std::int64_t padding) {
    if (in_ch < 1 || out_ch < 1) shape_error("conv2d channel counts must be positive");
    if (kernel < 1) shape_error("conv2d kernel size must be >= 1");
    if (stride < 1) shape_error("conv2d stride must be >= 1");
    if (padding < 0) shape_error("conv2d padding must be >= 0");
    LayerSpec s;
    s.kind = LayerKind::Conv2d;
    s.in_channels = in_ch;
    s.out_channels = out_ch;
    s.kernel = kernel;
    s.stride = stride;
    s.padding = padding;
    return s;
}

LayerSpec LayerSpec::maxpool2d(std::int64_t window, std::int64_t stride) {
    if (window < 1) shape_error("maxpool2d window must be >= 1");
    if (stride < 1) shape_error("maxpool2d stride must be >= 1");
    LayerSpec s;
    s.kind = LayerKind::MaxPool2d;
    s.window = window;
    s.pool_stride = stride;
    return s;
}

LayerSpec LayerSpec::flatten() {
    LayerSpec s;
    s.kind = LayerKind::Flatten;
    return s;
}

std::vector<std::int64_t> infer_output_shape(const LayerSpec& spec,
                                             const std::vector<std::int64_t>& in) {
    switch (spec.kind) {
        case LayerKind::Dense:
            if (in.size() != 2)
                shape_error("dense expects a [batch, features] input, got " + shape_str(in));
            if (in[1] != spec.in_features)
                shape_error("dense expects " + std::to_string(spec.in_features) + " input features, got " +
                            shape_str(in));
            return {in[0], spec.out_features};
        case LayerKind::Relu:
            return in;
        case LayerKind::Conv2d: {
            if (in.size() != 4)
                shape_error("conv2d expects a [batch, channels, h, w] input, got " + shape_str(in));
            if (in[1] != spec.in_channels)
                shape_error("conv2d expects " + std::to_string(spec.in_channels) + " input channels, got " +
                            shape_str(in));
            const std::int64_t oh = (in[2] + 2 * spec.padding - spec.kernel) / spec.stride + 1;
            const std::int64_t ow = (in[3] + 2 * spec.padding - spec.kernel) / spec.stride + 1;
            if (in[2] + 2 * spec.padding < spec.kernel || in[3] + 2 * spec.padding < spec.kernel)
                shape_error("conv2d kernel " + std::to_string(spec.kernel) + " larger than padded input " +
                            shape_str(in));
            return {in[0], spec.out_channels, oh, ow};
        }
        case LayerKind::MaxPool2d: {
            if (in.size() != 4)
                shape_error("maxpool2d expects a [batch, channels, h, w] input, got " + shape_str(in));
            if (in[2] < spec.window || in[3] < spec.window)
                shape_error("maxpool2d window " + std::to_string(spec.window) + " larger than input " +
                            shape_str(in));
            const std::int64_t oh = (in[2] - spec.window) / spec.pool_stride + 1;
            const std::int64_t ow = (in[3] - spec.window) / spec.pool_stride + 1;
            return {in[0], in[1], oh, ow};
        }
        case LayerKind::Flatten: {
            if (in.size() < 2) shape_error("flatten expects a batched input, got " + shape_str(in));
            std::int64_t rest = 1;
            for (std::size_t i = 1; i < in.size(); ++i) rest *= in[i];
            return {in[0], rest};
        }
    }
    shape_error("unknown layer kind");
}

std::vector<std::vector<std::int64_t>> trace_shapes(const std::vector<LayerSpec>& layers,
                                                    const std::vector<std::int64_t>& batch_shape) {
    std::vector<std::vector<std::int64_t>> shapes{batch_shape};
    for (std::size_t i = 0; i < layers.size(); ++i) {
        try {
            shapes.push_back(infer_output_shape(layers[i], shapes.back()));
        } catch (const std::invalid_argument& e) {
            shape_error("layer " + std::to_string(i) + " (" + layer_kind_name(layers[i].kind) +
                        "): " + e.what());
        }
    }
    return shapes;
}

std::vector<int> param_offsets(const std::vector<LayerSpec>& layers) {
    std::vector<int> offsets(layers.size(), -1);
    int next = 0;
    for (std::size_t i = 0; i < layers.size(); ++i) {
        if (layers[i].parametric()) {
            offsets[i] = next;
            next += 2;
        }
    }
    return offsets;
}

ModelState init_params(std::vector<LayerSpec> layers, const std::vector<std::int64_t>& sample_shape,
                       std::int64_t num_classes, Rng& rng) {
    if (num_classes < 1) shape_error("num_classes must be positive");
    std::vector<std::int64_t> batch_shape{1};
    batch_shape.insert(batch_shape.end(), sample_shape.begin(), sample_shape.end());
    const auto shapes = trace_shapes(layers, batch_shape);
    const auto& out = shapes.back();
    if (out.size() != 2 || out[1] != num_classes)
        shape_error("model output shape " + shape_str(out) + " does not produce " +
                    std::to_string(num_classes) + " class logits");

    ModelState model;
    model.layers = std::move(layers);
    model.num_classes = num_classes;
    for (const auto& spec : model.layers) {
        if (spec.kind == LayerKind::Dense) {
            const double s = std::sqrt(6.0 / static_cast<double>(spec.in_features + spec.out_features));
            Tensor w = Tensor::zeros({spec.out_features, spec.in_features});
            for (double& v : w.values) v = rng.uniform(-s, s);
            model.params.push_back(std::move(w));
            model.params.push_back(Tensor::zeros({spec.out_features}));
        } else if (spec.kind == LayerKind::Conv2d) {
            const double fan_in = static_cast<double>(spec.in_channels * spec.kernel * spec.kernel);
            const double fan_out = static_cast<double>(spec.out_channels * spec.kernel * spec.kernel);
            const double s = std::sqrt(6.0 / (fan_in + fan_out));
            Tensor w = Tensor::zeros({spec.out_channels, spec.in_channels, spec.kernel, spec.kernel});
            for (double& v : w.values) v = rng.uniform(-s, s);
            model.params.push_back(std::move(w));
            model.params.push_back(Tensor::zeros({spec.out_channels}));
        }
    }
    return model;
}

void validate_model(const ModelState& model, const std::vector<std::int64_t>& sample_shape) {
    std::vector<std::int64_t> batch_shape{1};
    batch_shape.insert(batch_shape.end(), sample_shape.begin(), sample_shape.end());
    trace_shapes(model.layers, batch_shape);
    const auto offsets = param_offsets(model.layers);
    std::size_t expected = 0;
    for (auto o : offsets)
        if (o >= 0) expected += 2;
    if (model.params.size() != expected)
        shape_error("model has " + std::to_string(model.params.size()) + " parameter tensors, expected " +
                    std::to_string(expected));
    for (std::size_t i = 0; i < model.layers.size(); ++i) {
        const auto& spec = model.layers[i];
        if (offsets[i] < 0) continue;
        const auto& w = model.params[static_cast<std::size_t>(offsets[i])];
        const auto& b = model.params[static_cast<std::size_t>(offsets[i]) + 1];
        std::vector<std::int64_t> wshape, bshape;
        if (spec.kind == LayerKind::Dense) {
            wshape = {spec.out_features, spec.in_features};
            bshape = {spec.out_features};
        } else {
            wshape = {spec.out_channels, spec.in_channels, spec.kernel, spec.kernel};
            bshape = {spec.out_channels};
        }
        if (w.shape != wshape || b.shape != bshape)
            shape_error("layer " + std::to_string(i) + " parameter shapes do not match its spec");
    }
}

namespace {

// Forward pass keeping every layer input; needed for backprop and profiling.
struct ForwardTrace {
    std::vector<Tensor> activations;  // activations[i] = input of layer i; back() = logits
    std::vector<std::vector<std::int64_t>> argmax;
};

ForwardTrace run_forward(const ModelState& model, const Tensor& batch, int upto) {
    if (batch.rank() < 2) shape_error("batch must have a leading batch dimension");
    const auto offsets = param_offsets(model.layers);
    ForwardTrace trace;
    trace.activations.reserve(model.layers.size() + 1);
    trace.argmax.resize(model.layers.size());
    trace.activations.push_back(batch);
    check_finite(batch, -1, LayerKind::Flatten);
    const int last = upto < 0 ? static_cast<int>(model.layers.size()) - 1 : upto;
    for (int i = 0; i <= last; ++i) {
        const auto& spec = model.layers[static_cast<std::size_t>(i)];
        // validates this layer's input shape
        infer_output_shape(spec, trace.activations.back().shape);
        const Tensor* w = nullptr;
        const Tensor* b = nullptr;
        if (offsets[static_cast<std::size_t>(i)] >= 0) {
            w = &model.params[static_cast<std::size_t>(offsets[static_cast<std::size_t>(i)])];
            b = &model.params[static_cast<std::size_t>(offsets[static_cast<std::size_t>(i)]) + 1];
        }
        auto out = apply_layer(spec, w, b, trace.activations.back());
        check_finite(out.out, i, spec.kind);
        trace.argmax[static_cast<std::size_t>(i)] = std::move(out.argmax);
        trace.activations.push_back(std::move(out.out));
    }
    return trace;
}

struct SoftmaxCE {
    double loss = 0.0;
    Tensor dlogits;
};

SoftmaxCE softmax_cross_entropy(const Tensor& logits, const std::vector<int>& labels) {
    const std::int64_t n = logits.dim(0);
    const std::int64_t k = logits.dim(1);
    if (n == 0) shape_error("batch must be nonempty");
    if (static_cast<std::int64_t>(labels.size()) != n)
        shape_error("labels size " + std::to_string(labels.size()) + " does not match batch size " +
                    std::to_string(n));
    SoftmaxCE res;
    res.dlogits = Tensor::zeros(logits.shape);
    double total = 0.0;
    for (std::int64_t r = 0; r < n; ++r) {
        const int label = labels[static_cast<std::size_t>(r)];
        if (label < 0 || label >= k)
            throw std::invalid_argument("label " + std::to_string(label) + " out of range [0, " +
                                        std::to_string(k) + ")");
        const double* row = logits.data() + r * k;
        double m = row[0];
        for (std::int64_t j = 1; j < k; ++j) m = std::max(m, row[j]);
        double sum = 0.0;
        for (std::int64_t j = 0; j < k; ++j) sum += std::exp(row[j] - m);
        const double lse = m + std::log(sum);
        total += lse - row[label];
        double* drow = res.dlogits.data() + r * k;
        for (std::int64_t j = 0; j < k; ++j) {
            const double p = std::exp(row[j] - m) / sum;
            drow[j] = (p - (j == label ? 1.0 : 0.0)) / static_cast<double>(n);
        }
    }
    res.loss = total / static_cast<double>(n);
    return res;
}

}  // namespace

Tensor forward(const ModelState& model, const Tensor& batch) {
    auto trace = run_forward(model, batch, -1);
    return std::move(trace.activations.back());
}

Tensor forward_to_layer(const ModelState& model, const Tensor& batch, int layer_index) {
    if (layer_index < 0 || layer_index >= static_cast<int>(model.layers.size()))
        throw std::invalid_argument("layer index " + std::to_string(layer_index) + " out of range");
    auto trace = run_forward(model, batch, layer_index);
    return std::move(trace.activations.back());
}

std::vector<int> predict(const ModelState& model, const Tensor& batch) {
    const Tensor logits = forward(model, batch);
    const std::int64_t n = logits.dim(0), k = logits.dim(1);
    std::vector<int> out(static_cast<std::size_t>(n));
    for (std::int64_t r = 0; r < n; ++r) {
        const double* row = logits.data() + r * k;
        int best = 0;
        for (std::int64_t j = 1; j < k; ++j)
            if (row[j] > row[best]) best = static_cast<int>(j);
        out[static_cast<std::size_t>(r)] = best;
    }
    return out;
}

LossGrad loss_and_grad(const ModelState& model, const Tensor& batch, const std::vector<int>& labels) {
    auto trace = run_forward(model, batch, -1);
    auto ce = softmax_cross_entropy(trace.activations.back(), labels);

    const auto offsets = param_offsets(model.layers);
    LossGrad res;
    res.loss = ce.loss;
    res.grads.reserve(model.params.size());
    for (const auto& p : model.params) res.grads.push_back(Tensor::zeros(p.shape));

    Tensor grad = std::move(ce.dlogits);
    for (int i = static_cast<int>(model.layers.size()) - 1; i >= 0; --i) {
        const auto& spec = model.layers[static_cast<std::size_t>(i)];
        const Tensor& x = trace.activations[static_cast<std::size_t>(i)];
        Tensor gin = Tensor::zeros(x.shape);
        switch (spec.kind) {
            case LayerKind::Dense: {
                const int off = offsets[static_cast<std::size_t>(i)];
                backward_dense(spec, model.params[static_cast<std::size_t>(off)], x, grad,
                               res.grads[static_cast<std::size_t>(off)],
                               res.grads[static_cast<std::size_t>(off) + 1], gin);
                break;
            }
            case LayerKind::Relu: {
                for (std::int64_t j = 0; j < x.size(); ++j) gin[j] = x[j] > 0.0 ? grad[j] : 0.0;
                break;
            }
            case LayerKind::Conv2d: {
                const int off = offsets[static_cast<std::size_t>(i)];
                backward_conv2d(spec, model.params[static_cast<std::size_t>(off)], x, grad,
                                res.grads[static_cast<std::size_t>(off)],
                                res.grads[static_cast<std::size_t>(off) + 1], gin);
                break;
            }
            case LayerKind::MaxPool2d: {
                const auto& amax = trace.argmax[static_cast<std::size_t>(i)];
                for (std::int64_t j = 0; j < grad.size(); ++j)
                    gin[amax[static_cast<std::size_t>(j)]] += grad[j];
                break;
            }
            case LayerKind::Flatten: {
                gin.values = grad.values;
                break;
            }
        }
        grad = std::move(gin);
    }
    return res;
}

double loss_value(const ModelState& model, const Tensor& batch, const std::vector<int>& labels) {
    auto trace = run_forward(model, batch, -1);
    return softmax_cross_entropy(trace.activations.back(), labels).loss;
}

std::vector<LayerSpec> mlp_small(const std::vector<std::int64_t>& sample_shape, std::int64_t hidden,
                                 std::int64_t num_classes) {
    std::int64_t features = 1;
    for (auto d : sample_shape) features *= d;
    return {LayerSpec::flatten(), LayerSpec::dense(features, hidden), LayerSpec::relu(),
            LayerSpec::dense(hidden, num_classes)};
}

std::vector<LayerSpec> conv_small(const std::vector<std::int64_t>& sample_shape, std::int64_t num_classes) {
    if (sample_shape.size() != 3)
        shape_error("conv-small needs [channels, h, w] samples, got " + shape_str(sample_shape));
    const std::int64_t c = sample_shape[0];
    std::vector<LayerSpec> layers{
        LayerSpec::conv2d(c, 8, 3, 1, 1),  LayerSpec::relu(), LayerSpec::maxpool2d(2, 2),
        LayerSpec::conv2d(8, 16, 3, 1, 1), LayerSpec::relu(), LayerSpec::maxpool2d(2, 2),
        LayerSpec::flatten()};
    std::vector<std::int64_t> batch_shape{1};
    batch_shape.insert(batch_shape.end(), sample_shape.begin(), sample_shape.end());
    const auto shapes = trace_shapes(layers, batch_shape);
    layers.push_back(LayerSpec::dense(shapes.back()[1], num_classes));
    return layers;
}

}  // namespace lexigrad

#include "lexigrad/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include <json.hpp>

namespace lexigrad {

EvalReport evaluate(const ModelState& model, const Dataset& split, std::int64_t batch_size) {
    if (split.size() < 1) throw std::invalid_argument("split must be nonempty");
    EvalReport rep;
    rep.split = split.name;
    rep.samples = split.size();
    rep.per_class_counts.assign(static_cast<std::size_t>(split.num_classes), 0);
    std::vector<std::int64_t> per_class_correct(static_cast<std::size_t>(split.num_classes), 0);

    std::vector<std::int64_t> idx(static_cast<std::size_t>(split.size()));
    std::iota(idx.begin(), idx.end(), 0);
    for (std::int64_t pos = 0; pos < split.size(); pos += batch_size) {
        const std::int64_t len = std::min(batch_size, split.size() - pos);
        const std::span<const std::int64_t> ids(idx.data() + pos, static_cast<std::size_t>(len));
        const Tensor batch = gather_eval_batch(split, ids);
        const auto preds = predict(model, batch);
        for (std::int64_t j = 0; j < len; ++j) {
            const int label = split.labels[static_cast<std::size_t>(pos + j)];
            ++rep.per_class_counts[static_cast<std::size_t>(label)];
            if (preds[static_cast<std::size_t>(j)] == label) {
                ++rep.correct;
                ++per_class_correct[static_cast<std::size_t>(label)];
            }
        }
    }
    rep.accuracy = static_cast<double>(rep.correct) / static_cast<double>(rep.samples);
    rep.per_class_accuracy.resize(per_class_correct.size(), 0.0);
    for (std::size_t c = 0; c < per_class_correct.size(); ++c) {
        if (rep.per_class_counts[c] > 0)
            rep.per_class_accuracy[c] =
                static_cast<double>(per_class_correct[c]) / static_cast<double>(rep.per_class_counts[c]);
    }
    return rep;
}

ActivationProfile activation_profile(const ModelState& model, const Dataset& split, int layer_index,
                                     std::int64_t samples, int bins) {
    if (bins < 1) throw std::invalid_argument("bins must be >= 1");
    if (layer_index < 0 || layer_index >= static_cast<int>(model.layers.size()))
        throw std::invalid_argument("layer index " + std::to_string(layer_index) + " out of range");
    const std::int64_t k = std::min<std::int64_t>(samples, split.size());
    if (k < 1) throw std::invalid_argument("need at least one sample");

    std::vector<std::int64_t> idx(static_cast<std::size_t>(k));
    std::iota(idx.begin(), idx.end(), 0);
    const Tensor batch = gather_eval_batch(split, idx);
    const Tensor out = forward_to_layer(model, batch, layer_index);
    if (out.rank() != 4)
        throw std::invalid_argument("layer " + std::to_string(layer_index) + " (" +
                                    layer_kind_name(model.layers[static_cast<std::size_t>(layer_index)].kind) +
                                    ") has no spatial feature maps; output shape " + shape_str(out.shape));

    ActivationProfile prof;
    prof.layer_index = layer_index;
    prof.layer_kind = layer_kind_name(model.layers[static_cast<std::size_t>(layer_index)].kind);
    prof.samples = k;
    prof.channels = out.dim(1);
    prof.bins = bins;
    const std::int64_t plane = out.dim(2) * out.dim(3);
    prof.values.reserve(static_cast<std::size_t>(k * prof.channels));
    for (std::int64_t s = 0; s < k; ++s) {
        for (std::int64_t c = 0; c < prof.channels; ++c) {
            const double* base = out.data() + (s * prof.channels + c) * plane;
            double m = base[0];
            for (std::int64_t i = 1; i < plane; ++i) m = std::max(m, base[i]);
            prof.values.push_back(m);
        }
    }

    double vmax = 0.0;
    for (double v : prof.values) vmax = std::max(vmax, v);
    prof.range_max = vmax;
    prof.counts.assign(static_cast<std::size_t>(bins), 0);
    for (double v : prof.values) {
        std::int64_t bin = 0;
        if (vmax > 0.0) {
            bin = static_cast<std::int64_t>(std::floor(v / vmax * bins));
            bin = std::clamp<std::int64_t>(bin, 0, bins - 1);
        }
        ++prof.counts[static_cast<std::size_t>(bin)];
    }
    return prof;
}

int default_profile_layer(const ModelState& model, const std::vector<std::int64_t>& sample_shape) {
    std::vector<std::int64_t> batch_shape{1};
    batch_shape.insert(batch_shape.end(), sample_shape.begin(), sample_shape.end());
    const auto shapes = trace_shapes(model.layers, batch_shape);
    int best = -1;
    for (std::size_t i = 0; i < model.layers.size(); ++i)
        if (shapes[i + 1].size() == 4) best = static_cast<int>(i);
    return best;
}

DiversitySummary profile_summary(const ActivationProfile& profile) {
    DiversitySummary sum;
    std::int64_t zeros = 0;
    for (double v : profile.values)
        if (v == 0.0) ++zeros;
    sum.zero_fraction = static_cast<double>(zeros) / static_cast<double>(profile.values.size());

    const double total = static_cast<double>(
        std::accumulate(profile.counts.begin(), profile.counts.end(), std::int64_t{0}));
    double h = 0.0;
    for (auto c : profile.counts) {
        if (c <= 0) continue;
        const double p = static_cast<double>(c) / total;
        h -= p * std::log(p);
    }
    sum.entropy = h;
    sum.entropy_normalized = profile.bins > 1 ? h / std::log(static_cast<double>(profile.bins)) : 0.0;
    return sum;
}

ProfileComparison compare_profiles(const ActivationProfile& a, const ActivationProfile& b) {
    if (a.channels != b.channels)
        throw std::invalid_argument("profiles have different channel counts (" + std::to_string(a.channels) +
                                    " vs " + std::to_string(b.channels) + ")");
    if (a.layer_index != b.layer_index)
        throw std::invalid_argument("profiles taken from different layers");
    ProfileComparison cmp;
    cmp.a = profile_summary(a);
    cmp.b = profile_summary(b);
    cmp.entropy_delta = cmp.b.entropy - cmp.a.entropy;
    cmp.zero_fraction_delta = cmp.b.zero_fraction - cmp.a.zero_fraction;
    return cmp;
}

void write_profile_csv(const std::string& path, const ActivationProfile& profile) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "sample,channel,value\n";
    out.precision(17);
    for (std::int64_t s = 0; s < profile.samples; ++s)
        for (std::int64_t c = 0; c < profile.channels; ++c)
            out << s << "," << c << ","
                << profile.values[static_cast<std::size_t>(s * profile.channels + c)] << "\n";
    if (!out) throw std::runtime_error("write failed for " + path);
}

std::string profile_summary_json(const ActivationProfile& profile) {
    const auto sum = profile_summary(profile);
    nlohmann::json j;
    j["layer_index"] = profile.layer_index;
    j["layer_kind"] = profile.layer_kind;
    j["samples"] = profile.samples;
    j["channels"] = profile.channels;
    j["bins"] = profile.bins;
    j["range_max"] = profile.range_max;
    j["counts"] = profile.counts;
    j["zero_fraction"] = sum.zero_fraction;
    j["entropy"] = sum.entropy;
    j["entropy_normalized"] = sum.entropy_normalized;
    return j.dump(2);
}

std::string eval_report_json(const EvalReport& report) {
    nlohmann::json j;
    j["split"] = report.split;
    j["samples"] = report.samples;
    j["correct"] = report.correct;
    j["accuracy"] = report.accuracy;
    j["per_class_counts"] = report.per_class_counts;
    j["per_class_accuracy"] = report.per_class_accuracy;
    return j.dump(2);
}

}  // namespace lexigrad

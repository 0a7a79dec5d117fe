#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lexigrad/data.hpp"
#include "lexigrad/nn.hpp"

namespace lexigrad {

struct EvalReport {
    std::string split;
    std::int64_t samples = 0;
    std::int64_t correct = 0;
    double accuracy = 0.0;  // exactly correct / samples
    std::vector<std::int64_t> per_class_counts;
    std::vector<double> per_class_accuracy;
};

// Exact counting accuracy with predict; normalization applied, never
// augmentation. Pure and repeatable.
EvalReport evaluate(const ModelState& model, const Dataset& split, std::int64_t batch_size = 256);

// Channel-wise activations of one layer via global max pooling over the
// first `samples` split samples, plus a fixed-range histogram.
struct ActivationProfile {
    int layer_index = -1;
    std::string layer_kind;
    std::int64_t samples = 0;
    std::int64_t channels = 0;
    std::vector<double> values;  // [samples x channels], row-major
    int bins = 50;
    double range_max = 0.0;  // histogram range is [0, range_max]
    std::vector<std::int64_t> counts;
};

ActivationProfile activation_profile(const ModelState& model, const Dataset& split, int layer_index,
                                     std::int64_t samples, int bins = 50);

// Last layer with a spatial (4-d) output; -1 when none exists.
int default_profile_layer(const ModelState& model, const std::vector<std::int64_t>& sample_shape);

struct DiversitySummary {
    double zero_fraction = 0.0;
    double entropy = 0.0;  // nats over histogram bins
    double entropy_normalized = 0.0;
};

DiversitySummary profile_summary(const ActivationProfile& profile);

struct ProfileComparison {
    DiversitySummary a;
    DiversitySummary b;
    double entropy_delta = 0.0;        // b - a
    double zero_fraction_delta = 0.0;  // b - a
};

// Higher entropy and lower zero-fraction read as more diverse activations.
ProfileComparison compare_profiles(const ActivationProfile& a, const ActivationProfile& b);

void write_profile_csv(const std::string& path, const ActivationProfile& profile);
std::string profile_summary_json(const ActivationProfile& profile);

std::string eval_report_json(const EvalReport& report);

}  // namespace lexigrad

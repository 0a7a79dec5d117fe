#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "lexigrad/rng.hpp"
#include "lexigrad/tensor.hpp"

namespace lexigrad {

// One split. Immutable after load; shared read-only across candidate
// trainers. channel_means always come from the training split, including on
// the test split that shares them.
struct Dataset {
    Tensor images;  // [N, C, H, W]
    std::vector<int> labels;
    std::vector<double> channel_means;
    std::int64_t num_classes = 0;
    std::string name;

    std::int64_t size() const { return images.rank() ? images.dim(0) : 0; }
    std::int64_t channels() const { return images.dim(1); }
    std::vector<std::int64_t> sample_shape() const {
        return {images.dim(1), images.dim(2), images.dim(3)};
    }
};

struct TrainTest {
    Dataset train;
    Dataset test;
};

// p disjoint index lists covering [0, n); sizes differ by at most one, the
// extra samples landing in the lowest-indexed subsets. Redrawn every
// generation.
struct SubsetPartition {
    std::vector<std::vector<std::int64_t>> assignments;
};

struct CaseSequence {
    std::vector<std::int64_t> order;  // permutation of [0, n)
};

struct AugmentConfig {
    bool enabled = false;
    std::int64_t crop_padding = 4;
    double hflip_prob = 0.5;

    bool operator==(const AugmentConfig&) const = default;
};

SubsetPartition partition(std::int64_t n, std::int64_t p, Rng& rng);
CaseSequence shuffle_cases(std::int64_t n, Rng& rng);

// Zero-pad by crop_padding per spatial side, crop a random same-size window,
// then mirror horizontally with probability hflip_prob. Disabled config
// returns the input untouched without consuming randomness.
Tensor augment(const Tensor& image, const AugmentConfig& cfg, Rng& rng);

// Subtract the per-channel mean; accepts one image [C,H,W] or a batch
// [N,C,H,W]. Applied on the training and the selection/eval path alike.
Tensor normalize(const Tensor& t, std::span<const double> means);

std::vector<double> compute_channel_means(const Dataset& ds);

// --- loaders -------------------------------------------------------------
// Raw splits; channel_means left empty (assigned by load_dataset from the
// training split). Byte layouts are documented in docs/formats.md.

Dataset load_idx(const std::string& images_path, const std::string& labels_path);
Dataset load_cifar10(const std::vector<std::string>& batch_files);
Dataset load_csv(const std::string& path);

struct SyntheticSpec {
    enum class Kind { GaussianBlobs, TwoMoons };
    Kind kind = Kind::GaussianBlobs;
    std::int64_t n = 200;
    std::int64_t classes = 2;   // blobs only
    std::int64_t dims = 2;      // blobs only; feature count
    double noise = 0.1;
    std::uint64_t seed = 1;
    // blobs can be shaped as images for convolutional models; zero means
    // [1, 1, dims]
    std::int64_t image_c = 0, image_h = 0, image_w = 0;
};

Dataset make_synthetic(const SyntheticSpec& spec);

struct DataSpec {
    enum class Source { SyntheticBlobs, SyntheticMoons, Idx, Cifar10, Csv };
    Source source = Source::SyntheticBlobs;

    // synthetic
    std::int64_t train_n = 200, test_n = 200;
    std::int64_t classes = 2;
    std::int64_t dims = 2;
    double noise = 0.1;
    std::uint64_t seed = 1;
    std::int64_t image_c = 0, image_h = 0, image_w = 0;

    // idx
    std::string train_images, train_labels, test_images, test_labels;
    // cifar10 binary
    std::vector<std::string> train_files;
    std::string test_file;
    // csv
    std::string train_csv, test_csv;

    bool operator==(const DataSpec&) const = default;
};

// Loads train and test splits; computes channel means over the training
// split and attaches them to both.
TrainTest load_dataset(const DataSpec& spec);

// --- batch assembly --------------------------------------------------------

Tensor gather_raw(const Dataset& ds, std::span<const std::int64_t> indices);

// Selection/eval path: normalized raw samples, never augmented.
Tensor gather_eval_batch(const Dataset& ds, std::span<const std::int64_t> indices);

// Training path: per-sample augmentation (candidate-private rng), then
// normalization.
Tensor gather_train_batch(const Dataset& ds, std::span<const std::int64_t> indices,
                          const AugmentConfig& cfg, Rng& rng);

std::vector<int> gather_labels(const Dataset& ds, std::span<const std::int64_t> indices);

}  // namespace lexigrad

#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace lexigrad {

// Dense n-dimensional array of doubles, row-major. Value type: copyable,
// immutable by convention once handed to the network/optimizer interfaces.
struct Tensor {
    std::vector<std::int64_t> shape;
    std::vector<double> values;

    Tensor() = default;
    Tensor(std::vector<std::int64_t> s, std::vector<double> v);

    static Tensor zeros(std::vector<std::int64_t> shape);
    static Tensor full(std::vector<std::int64_t> shape, double value);

    std::int64_t size() const { return static_cast<std::int64_t>(values.size()); }
    int rank() const { return static_cast<int>(shape.size()); }
    std::int64_t dim(int i) const { return shape[static_cast<std::size_t>(i)]; }

    double* data() { return values.data(); }
    const double* data() const { return values.data(); }

    // flat access
    double& operator[](std::int64_t i) { return values[static_cast<std::size_t>(i)]; }
    double operator[](std::int64_t i) const { return values[static_cast<std::size_t>(i)]; }

    bool same_shape(const Tensor& other) const { return shape == other.shape; }
    bool all_finite() const;
};

std::int64_t shape_size(const std::vector<std::int64_t>& shape);
std::string shape_str(const std::vector<std::int64_t>& shape);

}  // namespace lexigrad

#include "lexigrad/tensor.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace lexigrad {

std::int64_t shape_size(const std::vector<std::int64_t>& shape) {
    std::int64_t n = 1;
    for (auto d : shape) n *= d;
    return n;
}

std::string shape_str(const std::vector<std::int64_t>& shape) {
    std::ostringstream os;
    os << "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) os << ", ";
        os << shape[i];
    }
    os << "]";
    return os.str();
}

Tensor::Tensor(std::vector<std::int64_t> s, std::vector<double> v)
    : shape(std::move(s)), values(std::move(v)) {
    for (auto d : shape) {
        if (d <= 0) throw std::invalid_argument("tensor dims must be positive, got " + shape_str(shape));
    }
    if (shape_size(shape) != static_cast<std::int64_t>(values.size())) {
        throw std::invalid_argument("tensor value count " + std::to_string(values.size()) +
                                    " does not match shape " + shape_str(shape));
    }
}

Tensor Tensor::zeros(std::vector<std::int64_t> shape) {
    auto n = shape_size(shape);
    return Tensor(std::move(shape), std::vector<double>(static_cast<std::size_t>(n), 0.0));
}

Tensor Tensor::full(std::vector<std::int64_t> shape, double value) {
    auto n = shape_size(shape);
    return Tensor(std::move(shape), std::vector<double>(static_cast<std::size_t>(n), value));
}

bool Tensor::all_finite() const {
    for (double v : values) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

}  // namespace lexigrad

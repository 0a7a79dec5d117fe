#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace lexigrad {

// splitmix64 finalizer; used to derive independent seed streams.
inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

// Derives a child seed from (base, a, b). Every independent random stream in
// a run is seeded this way, never by sharing generator state, so results do
// not depend on execution order or worker count.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0) {
    return mix64(mix64(mix64(base) ^ a) ^ b);
}

// Seeded generator with pinned sampling algorithms. std:: distributions are
// implementation-defined, so uniform/bounded/gaussian are implemented here
// to keep outputs reproducible byte-for-byte.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next_u64() { return gen_(); }

    // unbiased integer in [0, n)
    std::uint64_t bounded(std::uint64_t n) {
        if (n <= 1) return 0;
        const std::uint64_t min = (0ULL - n) % n;
        std::uint64_t x = next_u64();
        while (x < min) x = next_u64();
        return x % n;
    }

    // [0, 1) with 53 bits of precision
    double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    bool bernoulli(double p) { return uniform01() < p; }

    // Box-Muller; two uniforms per draw, no cached state
    double gaussian() {
        double u1 = uniform01();
        while (u1 <= 0.0) u1 = uniform01();
        const double u2 = uniform01();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
    }

    // Fisher-Yates
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            const std::size_t j = static_cast<std::size_t>(bounded(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::mt19937_64 gen_;
};

}  // namespace lexigrad

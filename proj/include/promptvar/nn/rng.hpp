#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

#include "promptvar/nn/tensor.hpp"

namespace promptvar::nn {

// Counter-based generator: output k of stream `seed` is mix(seed, k), so the
// sequence only depends on the seed and the number of draws. The mixer is the
// SplitMix64 finalizer. Distributions are implemented here rather than taken
// from <random>, whose distribution algorithms differ between standard
// libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0) : seed_(seed) {}

    std::uint64_t seed() const { return seed_; }
    std::uint64_t counter() const { return counter_; }

    std::uint64_t next_u64() { return mix(seed_ + 0x9E3779B97F4A7C15ULL * (++counter_)); }

    // Uniform in [0, 1) with 53 bits of resolution.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [0, n) by rejection; n must be > 0.
    std::uint64_t below(std::uint64_t n) {
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t x = next_u64();
        while (x >= limit) x = next_u64();
        return x % n;
    }

    // Standard normal via Box-Muller; each call consumes two draws so the
    // stream position is independent of call history parity.
    double normal() {
        double u1 = uniform();
        const double u2 = uniform();
        if (u1 < 0x1.0p-60) u1 = 0x1.0p-60;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

    Tensor2 normal_tensor(std::size_t rows, std::size_t cols, double stddev = 1.0) {
        Tensor2 t(rows, cols);
        for (double& v : t.data()) v = stddev * normal();
        return t;
    }

    Tensor2 uniform_tensor(std::size_t rows, std::size_t cols, double lo, double hi) {
        Tensor2 t(rows, cols);
        for (double& v : t.data()) v = uniform(lo, hi);
        return t;
    }

    // Independent child stream; does not advance this generator.
    Rng split(std::uint64_t stream) const { return Rng(mix(seed_ ^ mix(stream + 0xD1B54A32D192ED03ULL))); }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            const std::size_t j = static_cast<std::size_t>(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

    static std::uint64_t mix(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

private:
    std::uint64_t seed_;
    std::uint64_t counter_ = 0;
};

}  // namespace promptvar::nn

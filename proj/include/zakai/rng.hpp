#pragma once

#include <cstdint>
#include <random>
#include <span>

namespace zakai {

/// SplitMix64 finaliser.
std::uint64_t mix64(std::uint64_t x) noexcept;

/// Seed of sample `index` at level pair (l1, l2). Corners of one sample share
/// this seed; different samples and levels get unrelated streams.
std::uint64_t derive_seed(std::uint64_t global_seed, int l1, int l2, std::uint64_t index) noexcept;

/// Standard normal stream for one path.
class NormalStream {
public:
    explicit NormalStream(std::uint64_t seed) : engine_(seed) {}

    double next() { return dist_(engine_); }
    void fill(std::span<double> out);

private:
    std::mt19937_64 engine_;
    std::normal_distribution<double> dist_{0.0, 1.0};
};

}  // namespace zakai

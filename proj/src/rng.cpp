#include "zakai/rng.hpp"

namespace zakai {

std::uint64_t mix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t global_seed, int l1, int l2, std::uint64_t index) noexcept {
    std::uint64_t s = mix64(global_seed);
    s = mix64(s ^ static_cast<std::uint64_t>(static_cast<std::uint32_t>(l1)));
    s = mix64(s ^ (static_cast<std::uint64_t>(static_cast<std::uint32_t>(l2)) << 32));
    return mix64(s ^ index);
}

void NormalStream::fill(std::span<double> out) {
    for (double& v : out) v = dist_(engine_);
}

}  // namespace zakai

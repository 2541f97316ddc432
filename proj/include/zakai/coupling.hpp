#pragma once

#include "zakai/model.hpp"

#include <array>
#include <compare>
#include <cstdint>
#include <span>
#include <vector>

namespace zakai {

struct LevelPair {
    int l1 = 0;
    int l2 = 0;

    friend bool operator==(const LevelPair&, const LevelPair&) = default;
    /// Orders by total level l1 + l2, then by l1.
    friend std::strong_ordering operator<=>(const LevelPair& a, const LevelPair& b) {
        if (auto c = (a.l1 + a.l2) <=> (b.l1 + b.l2); c != 0) return c;
        return a.l1 <=> b.l1;
    }
};

/// Sums of four consecutive fine normals divided by 2, i.e. the standard
/// normal driving one coarse timestep. Throws if the length is not a multiple of 4.
std::vector<double> coarsen_normals(std::span<const double> fine);

/// The draws of one sample on its finest timestep.
struct BrownianPath {
    std::vector<double> fine_normals;
    std::uint64_t seed = 0;

    static BrownianPath generate(std::uint64_t seed, std::size_t steps);
    std::vector<double> coarsened() const { return coarsen_normals(fine_normals); }
};

/// Which corners enter a difference.
enum class DifferenceKind {
    Mixed,     ///< L(l1,l2) - L(l1,l2-1) - L(l1-1,l2) + L(l1-1,l2-1)
    Space,     ///< L(l1,l2) - L(l1-1,l2)
    Time,      ///< L(l1,l2) - L(l1,l2-1)
    Diagonal,  ///< L(l,l) - L(l-1,l-1), the single-index hierarchy
};

enum class Direction { Space, Time };

/// One sample of a difference. corners[] holds L at (l1,l2), (l1,l2-1),
/// (l1-1,l2), (l1-1,l2-1); corners that are not evaluated stay 0.
/// For Diagonal, corners[3] is L(l-1,l-1).
struct CoupledIncrement {
    double delta = 0.0;
    std::array<double, 4> corners{};
    double cost = 0.0;
};

/// Everything fixed across samples.
struct SamplerSetup {
    ModelParams params;
    BaseGrid base;
    Scheme scheme = Scheme::A;
    Functional functional = Functional::Trapezoidal;
};

/// Work units of one sample (nodes x timesteps over the evaluated corners).
double difference_cost(DifferenceKind kind, LevelPair pair, const SamplerSetup& setup);

/// Evaluates the difference driven by `fine_normals` (one per timestep of level l2).
CoupledIncrement difference_from_normals(DifferenceKind kind, LevelPair pair,
                                         const SamplerSetup& setup,
                                         std::span<const double> fine_normals);

CoupledIncrement sample_mixed_difference(LevelPair pair, const SamplerSetup& setup,
                                         std::uint64_t rng_seed);

CoupledIncrement sample_first_difference(LevelPair pair, Direction direction,
                                         const SamplerSetup& setup, std::uint64_t rng_seed);

/// Samples first_index .. first_index + count - 1 at `pair`, each seeded by
/// derive_seed(global_seed, l1, l2, index). Same values as the one-at-a-time
/// functions, computed several paths at a time.
std::vector<CoupledIncrement> sample_batch(DifferenceKind kind, LevelPair pair,
                                           const SamplerSetup& setup, std::uint64_t global_seed,
                                           std::uint64_t first_index, std::size_t count);

/// |sum of mixed differences over [0,l1_max]x[0,l2_max] - L(l1_max,l2_max)|
/// along one Brownian path generated at level l2_max.
double telescoping_check(int l1_max, int l2_max, std::uint64_t seed, const SamplerSetup& setup);

}  // namespace zakai

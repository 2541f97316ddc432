#pragma once

#include "zakai/coupling.hpp"

#include <cstdint>

namespace zakai {

/// Running moments of the samples at one level (Welford update, Chan merge).
struct LevelStats {
    LevelPair pair;
    std::int64_t count = 0;
    double mean = 0.0;
    double m2 = 0.0;        ///< sum of squared deviations from the mean
    double cost_sum = 0.0;  ///< work units spent on these samples

    void add(double x, double cost);
    /// Unbiased sample variance; 0 with fewer than two samples.
    double variance() const noexcept;
    double avg_cost() const noexcept;

    /// Stats of the pooled sample. Pairs must agree.
    static LevelStats merge(const LevelStats& a, const LevelStats& b);
};

}  // namespace zakai

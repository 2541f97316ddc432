#pragma once

#include "zakai/coupling.hpp"

#include <array>
#include <vector>

namespace zakai {

/// 2^-(a1 l1 + a2 l2)
struct RateTerm {
    double a1 = 0.0;
    double a2 = 0.0;
    double log2_at(LevelPair l) const noexcept { return -(a1 * l.l1 + a2 * l.l2); }
};

/// Asymptotic model of the mixed differences: |E| ~ bias, V ~ sum of the
/// variance terms, W ~ 2^(l1 + 2 l2).
struct RateModel {
    RateTerm bias;
    std::vector<RateTerm> variance;
    RateTerm work{-1.0, -2.0};

    static RateModel for_method(Scheme scheme, Functional functional);

    double log2_bias(LevelPair l) const noexcept { return bias.log2_at(l); }
    /// log2 of the dominant variance term.
    double log2_variance(LevelPair l) const noexcept;
    /// log2 of the sum of the variance terms.
    double log2_variance_sum(LevelPair l) const noexcept;
    double log2_work(LevelPair l) const noexcept { return work.log2_at(l); }
    /// -log2 of E / sqrt(V W) with unit constants.
    double profit_exponent(LevelPair l) const noexcept;
    /// Profit weights (w1, w2); for a single variance term P ~ 2^-(w1 l1 + w2 l2).
    /// Undefined for piecewise models.
    std::array<double, 2> weights() const noexcept;
    bool piecewise() const noexcept { return variance.size() > 1; }
};

enum class IndexShape { Triangular, Union, Rectangle, Diagonal };

struct IndexSet {
    std::vector<LevelPair> members;  ///< sorted by LevelPair ordering
    IndexShape shape = IndexShape::Rectangle;
    double delta1 = 0.0;  ///< triangular only
    double delta2 = 0.0;
    double level = 0.0;   ///< l* (triangular) or the profit threshold (union)
    int cap1 = 0;
    int cap2 = 0;

    bool contains(LevelPair l) const;
    bool downward_closed() const;
    /// Pairs outside the set whose lower neighbours in both directions are
    /// members (or off the grid), restricted to the caps.
    std::vector<LevelPair> exterior_layer() const;
    int max_l1() const;
    int max_l2() const;
};

/// {delta1 l1 + delta2 l2 <= l_star} within the caps, delta = w / (w1 + w2).
IndexSet build_triangular_index_set(double w1, double w2, double l_star, int cap1, int cap2);

IndexSet build_rectangle_index_set(int cap1, int cap2);

/// {profit_exponent <= threshold} within the caps, closed downward. For a
/// two-term variance model this is the union of one triangle per half
/// l1 <= l2 / l1 > l2.
IndexSet build_union_index_set(const RateModel& model, double threshold, int cap1, int cap2);

/// Adds every pair dominated by a member.
std::vector<LevelPair> downward_closure(const std::vector<LevelPair>& pairs);

/// Diagonal pairs (0,0) .. (L,L) for the single-index hierarchy.
IndexSet build_diagonal_levels(int top);

}  // namespace zakai

#include "zakai/index_set.hpp"

#include "zakai/error.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace zakai {

RateModel RateModel::for_method(Scheme scheme, Functional functional) {
    RateModel m;
    if (functional == Functional::Trapezoidal) {
        m.bias = {2.0, 2.0};
        m.variance = {scheme == Scheme::A ? RateTerm{4.0, 4.0} : RateTerm{4.0, 2.0}};
    } else {
        m.bias = {1.0, 2.0};
        if (scheme == Scheme::A) {
            m.variance = {{2.0, 4.0}};
        } else {
            m.variance = {{4.0, 2.0}, {2.0, 4.0}};
        }
    }
    return m;
}

double RateModel::log2_variance(LevelPair l) const noexcept {
    double best = -INFINITY;
    for (const auto& t : variance) best = std::max(best, t.log2_at(l));
    return best;
}

double RateModel::log2_variance_sum(LevelPair l) const noexcept {
    double s = 0.0;
    for (const auto& t : variance) s += std::exp2(t.log2_at(l));
    return std::log2(s);
}

double RateModel::profit_exponent(LevelPair l) const noexcept {
    return -(log2_bias(l) - 0.5 * (log2_variance(l) + log2_work(l)));
}

std::array<double, 2> RateModel::weights() const noexcept {
    const auto& v = variance.front();
    return {bias.a1 - 0.5 * (v.a1 + work.a1), bias.a2 - 0.5 * (v.a2 + work.a2)};
}

bool IndexSet::contains(LevelPair l) const {
    return std::find(members.begin(), members.end(), l) != members.end();
}

bool IndexSet::downward_closed() const {
    for (const auto& m : members) {
        if (m.l1 > 0 && !contains({m.l1 - 1, m.l2})) return false;
        if (m.l2 > 0 && !contains({m.l1, m.l2 - 1})) return false;
    }
    return true;
}

std::vector<LevelPair> IndexSet::exterior_layer() const {
    std::vector<LevelPair> out;
    for (int l1 = 0; l1 <= cap1; ++l1) {
        for (int l2 = 0; l2 <= cap2; ++l2) {
            const LevelPair p{l1, l2};
            if (contains(p)) continue;
            const bool left = l1 == 0 || contains({l1 - 1, l2});
            const bool below = l2 == 0 || contains({l1, l2 - 1});
            if (left && below) out.push_back(p);
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

int IndexSet::max_l1() const {
    int m = 0;
    for (const auto& p : members) m = std::max(m, p.l1);
    return m;
}

int IndexSet::max_l2() const {
    int m = 0;
    for (const auto& p : members) m = std::max(m, p.l2);
    return m;
}

std::vector<LevelPair> downward_closure(const std::vector<LevelPair>& pairs) {
    std::set<std::pair<int, int>> seen;
    for (const auto& p : pairs) {
        for (int a = 0; a <= p.l1; ++a) {
            for (int b = 0; b <= p.l2; ++b) seen.insert({a, b});
        }
    }
    std::vector<LevelPair> out;
    for (const auto& [a, b] : seen) out.push_back({a, b});
    std::sort(out.begin(), out.end());
    return out;
}

IndexSet build_triangular_index_set(double w1, double w2, double l_star, int cap1, int cap2) {
    if (!(w1 > 0.0) || !(w2 > 0.0)) throw Error(ErrorKind::InvalidLevel, "weights must be positive");
    if (cap1 < 0 || cap2 < 0) throw Error(ErrorKind::InvalidLevel, "negative cap");
    IndexSet set;
    set.shape = IndexShape::Triangular;
    set.delta1 = w1 / (w1 + w2);
    set.delta2 = w2 / (w1 + w2);
    set.level = std::max(0.0, l_star);
    set.cap1 = cap1;
    set.cap2 = cap2;
    constexpr double slack = 1e-12;
    for (int l1 = 0; l1 <= cap1; ++l1) {
        for (int l2 = 0; l2 <= cap2; ++l2) {
            if (set.delta1 * l1 + set.delta2 * l2 <= set.level + slack) set.members.push_back({l1, l2});
        }
    }
    std::sort(set.members.begin(), set.members.end());
    return set;
}

IndexSet build_rectangle_index_set(int cap1, int cap2) {
    if (cap1 < 0 || cap2 < 0) throw Error(ErrorKind::InvalidLevel, "negative cap");
    IndexSet set;
    set.shape = IndexShape::Rectangle;
    set.cap1 = cap1;
    set.cap2 = cap2;
    for (int l1 = 0; l1 <= cap1; ++l1) {
        for (int l2 = 0; l2 <= cap2; ++l2) set.members.push_back({l1, l2});
    }
    std::sort(set.members.begin(), set.members.end());
    return set;
}

IndexSet build_union_index_set(const RateModel& model, double threshold, int cap1, int cap2) {
    if (cap1 < 0 || cap2 < 0) throw Error(ErrorKind::InvalidLevel, "negative cap");
    std::vector<LevelPair> picked{{0, 0}};
    const double base = model.profit_exponent({0, 0});
    for (int l1 = 0; l1 <= cap1; ++l1) {
        for (int l2 = 0; l2 <= cap2; ++l2) {
            if (model.profit_exponent({l1, l2}) - base <= threshold + 1e-12) picked.push_back({l1, l2});
        }
    }
    IndexSet set;
    set.shape = IndexShape::Union;
    set.level = threshold;
    set.cap1 = cap1;
    set.cap2 = cap2;
    set.members = downward_closure(picked);
    return set;
}

IndexSet build_diagonal_levels(int top) {
    if (top < 0) throw Error(ErrorKind::InvalidLevel, "negative level");
    IndexSet set;
    set.shape = IndexShape::Diagonal;
    set.cap1 = top;
    set.cap2 = top;
    set.level = top;
    for (int l = 0; l <= top; ++l) set.members.push_back({l, l});
    return set;
}

}  // namespace zakai

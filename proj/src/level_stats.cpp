#include "zakai/level_stats.hpp"

#include "zakai/error.hpp"

namespace zakai {

void LevelStats::add(double x, double cost) {
    ++count;
    const double d = x - mean;
    mean += d / static_cast<double>(count);
    m2 += d * (x - mean);
    cost_sum += cost;
}

double LevelStats::variance() const noexcept {
    return count < 2 ? 0.0 : m2 / static_cast<double>(count - 1);
}

double LevelStats::avg_cost() const noexcept {
    return count == 0 ? 0.0 : cost_sum / static_cast<double>(count);
}

LevelStats LevelStats::merge(const LevelStats& a, const LevelStats& b) {
    if (!(a.pair == b.pair)) throw Error(ErrorKind::InvalidLevel, "merging stats of different levels");
    if (a.count == 0) return b;
    if (b.count == 0) return a;
    LevelStats out;
    out.pair = a.pair;
    out.count = a.count + b.count;
    const double na = static_cast<double>(a.count);
    const double nb = static_cast<double>(b.count);
    const double n = static_cast<double>(out.count);
    const double d = b.mean - a.mean;
    out.mean = (na * a.mean + nb * b.mean) / n;
    out.m2 = a.m2 + b.m2 + d * d * na * nb / n;
    out.cost_sum = a.cost_sum + b.cost_sum;
    return out;
}

}  // namespace zakai

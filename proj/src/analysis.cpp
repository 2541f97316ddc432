#include "zakai/analysis.hpp"

#include "zakai/error.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace zakai {

double FourierSymbols::a(double gamma, double h) noexcept {
    const double s = std::sin(gamma * h);
    return -s * s / (2.0 * h * h);
}

double FourierSymbols::a_hat(double gamma, double h) noexcept {
    const double s = std::sin(0.5 * gamma * h);
    return -2.0 * s * s / (h * h);
}

double FourierSymbols::c(double gamma, double h) noexcept { return std::sin(gamma * h) / h; }

double FourierSymbols::u(double gamma, double h) noexcept {
    const double x = 0.5 * gamma * h;
    if (x == 0.0) return 1.0;
    const double r = std::sin(x) / x;
    return r * r;
}

bool stability_check(double rho) noexcept { return rho <= 1.0 / std::numbers::sqrt2 + 1e-15; }

double amplification_mean_square(double gamma, double h, double k, double rho) noexcept {
    const double a = FourierSymbols::a(gamma, h);
    const double c = FourierSymbols::c(gamma, h);
    const double den = 1.0 - FourierSymbols::a_hat(gamma, h) * k;
    return (1.0 + c * c * rho * k + 2.0 * a * a * rho * rho * k * k) / (den * den);
}

double amplification_bound(double gamma, double h, double k, double rho) noexcept {
    const double lambda = k / (h * h);
    const double s = std::sin(0.5 * gamma * h);
    const double d = s * s;
    return (1.0 + 4.0 * rho * lambda * d + 8.0 * rho * rho * lambda * lambda * d * d) /
           (1.0 + 4.0 * lambda * d + 4.0 * lambda * lambda * d * d);
}

double q_bound(double rho, double u) noexcept {
    return (1.0 + rho * u + 0.5 * rho * rho * u * u) / (1.0 + u + 0.25 * u * u);
}

double theta_at(double rho, double T, int N, const ThetaOptions& o) {
    if (!stability_check(rho) || rho < 0.0) {
        throw Error(ErrorKind::StabilityViolation, "rho outside [0, 1/sqrt(2)]");
    }
    if (N < 1 || !(o.lambda > 0.0) || !(T > 0.0)) throw Error(ErrorKind::InvalidAccuracy, "bad theta input");
    const double k = T / N;
    const double h = std::sqrt(k / o.lambda);
    // integrate in s = gamma h, where f depends on lambda and s only
    const double cutoff = std::min(std::pow(h, -2.0 * o.p), std::pow(k, -o.p));
    const double s_lo = std::min(cutoff * h, std::numbers::pi);
    const double s_hi = std::numbers::pi;
    if (s_hi - s_lo <= 0.0) return 0.0;
    const auto log_f = [&](double s) { return std::log(amplification_mean_square(s / h, h, k, rho)); };

    // locate the maximum so the integrand can be scaled to at most 1
    constexpr int grid = 2048;
    double s_peak = s_lo;
    double peak = log_f(s_lo);
    for (int i = 1; i <= grid; ++i) {
        const double s = s_lo + (s_hi - s_lo) * i / grid;
        const double v = log_f(s);
        if (v > peak) {
            peak = v;
            s_peak = s;
        }
    }
    const double step = (s_hi - s_lo) / grid;
    double lo = std::max(s_lo, s_peak - step);
    double hi = std::min(s_hi, s_peak + step);
    const double g = (std::sqrt(5.0) - 1.0) / 2.0;
    for (int it = 0; it < 80; ++it) {
        const double x1 = hi - g * (hi - lo);
        const double x2 = lo + g * (hi - lo);
        if (log_f(x1) >= log_f(x2)) hi = x2; else lo = x1;
    }
    s_peak = 0.5 * (lo + hi);
    peak = std::max({peak, log_f(s_peak), log_f(s_lo), log_f(s_hi)});

    const auto scaled = [&](double s) { return std::exp(N * (log_f(s) - peak)); };
    // the mass sits within ~1/N of the peak, so integrate over panels that
    // grow geometrically away from it
    using boost::math::quadrature::gauss_kronrod;
    const auto panels = [&](double from, double to) {
        double total = 0.0;
        const double len = std::abs(to - from);
        const double dir = to > from ? 1.0 : -1.0;
        double a = 0.0;
        double w = len * std::ldexp(1.0, -30);
        while (a < len) {
            const double b = std::min(len, a + w);
            total += gauss_kronrod<double, 31>::integrate(
                [&](double t) { return scaled(from + dir * t); }, a, b, 15, o.quad_tolerance);
            a = b;
            w *= 2.0;
        }
        return total;
    };
    double integral = 0.0;
    if (s_peak > s_lo) integral += panels(s_peak, s_lo);
    if (s_peak < s_hi) integral += panels(s_peak, s_hi);
    // both signs of gamma; h dgamma = ds
    integral *= 2.0;
    return std::exp(peak + std::log(integral) / N);
}

ThetaResult compute_theta(double rho, double T, const ThetaOptions& options) {
    if (!stability_check(rho) || rho < 0.0) {
        throw Error(ErrorKind::StabilityViolation, "rho outside [0, 1/sqrt(2)]");
    }
    ThetaResult result;
    for (int N : options.n_sequence) {
        const double t = theta_at(rho, T, N, options);
        result.history.push_back(t);
        result.theta = t;
        result.n_used = N;
        const auto n = result.history.size();
        if (n >= 2 && std::abs(result.history[n - 1] - result.history[n - 2]) < options.tolerance) {
            result.converged = true;
            return result;
        }
    }
    throw Error(ErrorKind::NoConvergence,
                "theta did not settle; last value " + std::to_string(result.theta));
}

bool verify_k0_condition(double h0, double k0, int l1_star, double theta, double C0, double beta,
                         double T) {
    const double bound = T * std::log2(1.0 / theta) / (C0 + (3.0 + beta) * (l1_star + std::log2(1.0 / h0)));
    return k0 <= bound;
}

std::map<LevelPair, double> profit_surface(const RateModel& model, const RateConstants& constants,
                                           const SamplerSetup& setup, int cap1, int cap2) {
    std::map<LevelPair, double> out;
    for (int l1 = 0; l1 <= cap1; ++l1) {
        for (int l2 = 0; l2 <= cap2; ++l2) {
            const LevelPair l{l1, l2};
            const double e = constants.c1 * std::exp2(model.log2_bias(l));
            const double v = constants.c2 * std::exp2(model.log2_variance_sum(l));
            const double w = difference_cost(DifferenceKind::Mixed, l, setup);
            out[l] = e / std::sqrt(v * w);
        }
    }
    return out;
}

std::map<LevelPair, double> measured_profit(const std::vector<LevelStats>& stats) {
    std::map<LevelPair, double> out;
    for (const auto& s : stats) {
        const double d = std::sqrt(s.variance() * s.avg_cost());
        out[s.pair] = d > 0.0 ? std::abs(s.mean) / d : 0.0;
    }
    return out;
}

double least_squares_slope(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2) throw Error(ErrorKind::InvalidLevel, "need two or more points");
    const double n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
    }
    if (sxx == 0.0) throw Error(ErrorKind::InvalidLevel, "degenerate abscissae");
    return sxy / sxx;
}

RateSlopes diagonal_slopes(const std::vector<LevelStats>& stats) {
    std::vector<double> x, ym, yv;
    for (const auto& s : stats) {
        x.push_back(s.pair.l1 + s.pair.l2);
        ym.push_back(std::log2(std::abs(s.mean)));
        yv.push_back(std::log2(s.variance()));
    }
    return {least_squares_slope(x, ym), least_squares_slope(x, yv)};
}

}  // namespace zakai

#pragma once

#include "zakai/coupling.hpp"
#include "zakai/estimators.hpp"
#include "zakai/index_set.hpp"

#include <map>
#include <span>
#include <vector>

namespace zakai {

/// Fourier symbols of the difference operators at wave number gamma.
struct FourierSymbols {
    static double a(double gamma, double h) noexcept;      ///< -sin^2(gamma h) / (2 h^2)
    static double a_hat(double gamma, double h) noexcept;  ///< -2 sin^2(gamma h / 2) / h^2
    static double c(double gamma, double h) noexcept;      ///< sin(gamma h) / h
    static double u(double gamma, double h) noexcept;      ///< sin^2(gamma h/2) / (gamma h/2)^2
};

/// True iff rho <= 1/sqrt(2) (with 1e-15 slack).
bool stability_check(double rho) noexcept;

/// E|one-step amplification|^2 of the wide-stencil scheme for mode gamma.
double amplification_mean_square(double gamma, double h, double k, double rho) noexcept;

/// Upper bound g(gamma) of the amplification with lambda = k / h^2.
double amplification_bound(double gamma, double h, double k, double rho) noexcept;

/// q(rho, u) = (1 + rho u + rho^2 u^2 / 2) / (1 + u + u^2 / 4).
double q_bound(double rho, double u) noexcept;

struct ThetaOptions {
    double lambda = 1.0;
    /// High-wave region |gamma| > min(h^(-2p), k^(-p)); p = 1/2 gives
    /// k^(-1/2) < |gamma| < pi/h for lambda >= 1.
    double p = 0.5;
    std::vector<int> n_sequence{64, 128, 256, 512, 1024, 2048, 4096, 8192, 16384};
    double tolerance = 1e-3;
    double quad_tolerance = 1e-8;
};

struct ThetaResult {
    double theta = 0.0;
    int n_used = 0;
    bool converged = false;
    std::vector<double> history;  ///< theta for each N tried
};

/// (h * integral of f^N over the high-wave region)^(1/N) for the N in the
/// sequence, k = T/N, h = sqrt(k / lambda), until successive values agree.
/// Throws StabilityViolation for rho > 1/sqrt(2); NoConvergence if the
/// sequence runs out.
ThetaResult compute_theta(double rho, double T, const ThetaOptions& options = {});

/// Single-N value of the above; useful for studying the N dependence.
double theta_at(double rho, double T, int N, const ThetaOptions& options = {});

/// k0 <= T log2(1/theta) / (C0 + (3 + beta)(l1* + log2(1/h0))).
bool verify_k0_condition(double h0, double k0, int l1_star, double theta, double C0, double beta,
                         double T);

/// Modelled profit c1 2^bias / sqrt(c2 V W) over [0,cap1]x[0,cap2], W in work units.
std::map<LevelPair, double> profit_surface(const RateModel& model, const RateConstants& constants,
                                           const SamplerSetup& setup, int cap1, int cap2);

/// |mean| / sqrt(variance * avg_cost) per level.
std::map<LevelPair, double> measured_profit(const std::vector<LevelStats>& stats);

/// Ordinary least-squares slope of y on x.
double least_squares_slope(std::span<const double> x, std::span<const double> y);

struct RateSlopes {
    double mean = 0.0;      ///< d log2|E| / d(l1 + l2)
    double variance = 0.0;  ///< d log2 V / d(l1 + l2)
};

/// Slopes of log2|mean| and log2 variance against l1 + l2 over the given levels.
RateSlopes diagonal_slopes(const std::vector<LevelStats>& stats);

}  // namespace zakai

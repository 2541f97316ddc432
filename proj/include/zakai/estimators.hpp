#pragma once

#include "zakai/coupling.hpp"
#include "zakai/index_set.hpp"
#include "zakai/level_stats.hpp"

#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <vector>

namespace zakai {

enum class Method { MIMC, MLMC };

std::string_view to_string(Method m) noexcept;

/// Fitted constants of the rate model: E ~ c1 2^-(bias), V ~ c2 sum(variance terms),
/// seconds per work unit c3.
struct RateConstants {
    double c1 = 0.0;
    double c2 = 0.0;
    double c3 = 0.0;
};

struct Caps {
    double k0 = 0.0;
    int l1_star = 0;
    int l2_star = 0;
};

/// k0 = T log2(1/theta) / (2 (1 + r) log2(1/epsilon)), rounded down so T/k0 is
/// a whole number, and the smallest caps with C h^2 <= (alpha eps)^(1+r) and
/// C k <= (alpha eps)^(1+r). If `fixed_k0` is given it is used instead of the formula.
Caps choose_k0_and_caps(double epsilon, double alpha, double r, double theta, double T,
                        double h0, double error_constant,
                        std::optional<double> fixed_k0 = std::nullopt);

/// l* = (1/3) log2(8 C1 h0^2 k0 / (3 alpha epsilon)), floored at 0.
double choose_l_star(double C1, double h0, double k0, double alpha, double epsilon);

struct EstimatorPlan {
    IndexSet index_set;
    std::map<LevelPair, std::int64_t> samples;
    double alpha = 0.5;
    double epsilon = 0.0;
    double k0 = 0.0;
    RateConstants constants;
    Caps caps;
    double planned_work = 0.0;  ///< sum M_l W_l
    double modeled_bias = 0.0;
};

/// M_l = ceil((1-alpha^2)^-p eps^-2 (sum sqrt(V W)) sqrt(V_l / W_l)), floored at 1,
/// with p = 1, or p = 2 when `printed_exponent` is set. V and W come from the
/// pilot stats. Throws MissingPilot if a member has fewer than two samples.
EstimatorPlan allocate_samples(const IndexSet& index_set,
                               const std::map<LevelPair, LevelStats>& pilot, double epsilon,
                               double alpha, bool printed_exponent = false);

/// Minimises `cost(alpha)` over (0.01, 0.99): 99-point scan, then golden-section
/// refinement around the best grid point.
double optimize_alpha(const std::function<double(double)>& cost);

/// Least-squares fit of log2 c1 and log2 c2 with the slopes fixed by `model`,
/// skipping (0,0). Levels with zero mean are ignored for c1.
RateConstants fit_constants(const RateModel& model, const std::map<LevelPair, LevelStats>& stats);

/// Rate model of the single-index hierarchy, written on diagonal pairs.
RateModel diagonal_rate_model(Functional functional);

struct EstimatorOptions {
    double epsilon = 5e-3;
    std::optional<double> alpha;  ///< optimised when empty
    double r = 0.1;
    double theta = 0.0678;
    bool auto_k0 = false;
    double error_constant = 1.0;
    int pilot_samples = 200;
    int pilot_max_level = 2;
    bool printed_exponent = false;
    double max_work = std::numeric_limits<double>::infinity();
    std::uint64_t seed = 1;
    int level_limit = 10;
};

struct EstimateReport {
    Method method = Method::MIMC;
    double value = 0.0;
    double est_variance = 0.0;  ///< sum V_l / M_l
    double est_bias = 0.0;
    double planned_work = 0.0;  ///< sum M_l W_l of the plan
    double actual_work = 0.0;   ///< every sample drawn, pilot included
    double wall_seconds = 0.0;
    std::vector<LevelStats> per_level;
    EstimatorPlan plan;
};

/// Runs `count` samples of a difference starting at sample index `first_index`.
LevelStats sample_level(DifferenceKind kind, LevelPair pair, const SamplerSetup& setup,
                        std::uint64_t seed, std::uint64_t first_index, std::int64_t count,
                        LevelStats into = {});

/// Plans a multi-index run from pilot stats (no sampling). Exposed for tests.
EstimatorPlan plan_mimc(const SamplerSetup& setup, const EstimatorOptions& options,
                        const std::map<LevelPair, LevelStats>& pilot);

EstimateReport run_mimc(SamplerSetup setup, const EstimatorOptions& options);
EstimateReport run_mlmc(SamplerSetup setup, const EstimatorOptions& options);
EstimateReport run_estimator(Method method, const SamplerSetup& setup,
                             const EstimatorOptions& options);

}  // namespace zakai

#pragma once

#include "zakai/coupling.hpp"
#include "zakai/estimators.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace zakai {

/// Everything an experiment needs. Stored as JSON; see README for the layout.
struct ExperimentConfig {
    int schema_version = 1;
    ModelParams model;
    BaseGrid base;
    bool auto_k0 = false;
    Scheme scheme = Scheme::A;
    Functional functional = Functional::Trapezoidal;
    Method method = Method::MIMC;
    std::vector<double> epsilon{5e-3};
    std::optional<double> alpha;  ///< empty means "auto"
    std::uint64_t seed = 1;
    std::int64_t samples = 10000;  ///< per level for `rates`
    int pilot_samples = 200;
    int max_level = 5;             ///< rates grid is [1, max_level]^2
    double max_work = 1e15;
    double r = 0.1;
    double theta = 0.0678;
    double error_constant = 1.0;
    bool printed_exponent = false;
    std::vector<double> theta_rhos{0.0, 0.05, 0.1, 0.15, 0.2, 0.25, 0.3, 0.35, 0.4,
                                   0.45, 0.5, 0.55, 0.6, 0.65, 0.7};
    std::string output_dir = "out";

    SamplerSetup sampler() const;
    EstimatorOptions estimator_options(double eps) const;
};

inline constexpr int kSchemaVersion = 1;

/// Parses JSON text. Missing keys keep their defaults; unknown keys, bad
/// types and out-of-range values throw ConfigError, rho > 1/sqrt(2) throws
/// StabilityViolation.
ExperimentConfig parse_config(std::string_view text);
ExperimentConfig load_config(const std::string& path);
std::string serialize_config(const ExperimentConfig& config);

Scheme parse_scheme(std::string_view s);
Functional parse_functional(std::string_view s);
Method parse_method(std::string_view s);

}  // namespace zakai

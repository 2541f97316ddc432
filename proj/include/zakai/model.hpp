#pragma once

#include <cstdint>
#include <optional>
#include <string_view>

namespace zakai {

/// Constant-coefficient Zakai model dv = -mu v_x dt + 1/2 v_xx dt - sqrt(rho) v_x dM
/// started from a Dirac mass at x0.
struct ModelParams {
    double mu = 0.081;
    double rho = 0.2;
    double T = 5.0;
    double x0 = 5.0;

    /// Throws ConfigError unless 0 <= rho < 1 and T > 0.
    void validate() const;

    /// Mean-square stability of the implicit schemes requires rho <= 1/sqrt(2).
    bool admissible() const noexcept;
};

enum class Scheme { A, B };
enum class Functional { Trapezoidal, Rectangle };

std::string_view to_string(Scheme s) noexcept;
std::string_view to_string(Functional f) noexcept;

/// Coarsest-level discretisation shared by all level pairs.
struct BaseGrid {
    double x_min = -10.0;
    double x_max = 20.0;
    double h0 = 1.0;
    double k0 = 0.25;
};

/// Discretisation at level pair (l1, l2): h = h0 2^-l1, k = k0 4^-l2.
/// Nodes are indexed from x_min (node 0) to x_max (node `cells`); the
/// unknowns are the interior nodes 1..cells-1.
struct GridSpec {
    double x_min = 0.0;
    double x_max = 0.0;
    double h0 = 0.0;
    double k0 = 0.0;
    int l1 = 0;
    int l2 = 0;

    double h = 0.0;
    double k = 0.0;
    std::int64_t cells = 0;        ///< (x_max - x_min) / h
    std::int64_t steps = 0;        ///< N = T / k
    std::int64_t dirac_node = 0;   ///< j0 = (x0 - x_min) / h
    std::optional<std::int64_t> zero_node;  ///< node at x = 0, if interior

    std::int64_t interior_nodes() const noexcept { return cells - 1; }
    double node_x(std::int64_t j) const noexcept { return x_min + static_cast<double>(j) * h; }
    /// Work units of one evolution on this grid: interior nodes x timesteps.
    double work_units() const noexcept {
        return static_cast<double>(interior_nodes()) * static_cast<double>(steps);
    }
};

/// Builds the grid for level pair (l1, l2). Throws DomainMisaligned if the
/// domain, the Dirac location or T/k do not fall on whole multiples of the
/// mesh, InvalidLevel for negative levels, and SolverFailure if |mu| h >= 1
/// (the implicit operator would lose diagonal dominance).
GridSpec build_grid(const ModelParams& params, double x_min, double x_max, double h0,
                    double k0, int l1, int l2);

inline GridSpec build_grid(const ModelParams& params, const BaseGrid& base, int l1, int l2) {
    return build_grid(params, base.x_min, base.x_max, base.h0, base.k0, l1, l2);
}

}  // namespace zakai

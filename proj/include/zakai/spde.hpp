#pragma once

#include "zakai/model.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace zakai {

/// Approximate density V^n on the interior nodes of a grid.
struct DensityState {
    std::vector<double> values;  ///< values[i] belongs to node i + 1
    std::int64_t time_index = 0;

    /// Discrete mass h * sum(V).
    double mass(double h) const noexcept;
};

/// Constant bands of the implicit left-hand side I + (mu k / 2h) D1 - (k / 2h^2) D2.
struct TridiagonalOperator {
    double lower = 0.0;
    double diag = 0.0;
    double upper = 0.0;

    static TridiagonalOperator implicit_drift_diffusion(const ModelParams& params,
                                                        const GridSpec& grid) noexcept;

    bool strictly_diagonally_dominant() const noexcept;
};

/// Precomputed Thomas factorisation of a constant-band tridiagonal matrix of
/// order n with zero Dirichlet data outside the band.
class TridiagonalFactor {
public:
    /// Throws SolverFailure when a pivot vanishes or a row is not dominant.
    TridiagonalFactor(const TridiagonalOperator& op, std::size_t n);

    std::size_t size() const noexcept { return inv_pivot_.size(); }
    double lower() const noexcept { return lower_; }
    double inv_pivot(std::size_t i) const noexcept { return inv_pivot_[i]; }
    double upper_ratio(std::size_t i) const noexcept { return upper_ratio_[i]; }

    /// Solves A x = rhs in place.
    void solve(std::span<double> rhs) const;

private:
    double lower_;
    std::vector<double> inv_pivot_;
    std::vector<double> upper_ratio_;
};

/// Dirac initial data: 1/h at the node holding x0, zero elsewhere.
DensityState initial_state(const GridSpec& grid);

/// One step of the scheme that discretises in space first (wide D1^2 Milstein stencil).
DensityState step_scheme_a(const DensityState& state, const GridSpec& grid,
                           const ModelParams& params, double z);

/// One step of the scheme that applies Milstein first (narrow D2 Milstein stencil).
DensityState step_scheme_b(const DensityState& state, const GridSpec& grid,
                           const ModelParams& params, double z);

DensityState step(Scheme scheme, const DensityState& state, const GridSpec& grid,
                  const ModelParams& params, double z);

/// Runs grid.steps steps from the Dirac initial state. `draws` holds one
/// standard normal per step (W_n = sqrt(k) z_n).
DensityState evolve(const GridSpec& grid, const ModelParams& params,
                    std::span<const double> draws, Scheme scheme);

/// Same as above from an arbitrary initial state.
DensityState evolve_from(DensityState state, const GridSpec& grid, const ModelParams& params,
                         std::span<const double> draws, Scheme scheme);

/// Evolves `lanes` paths at once. `normals` is step-major
/// (normals[n * lanes + p] drives step n of path p). The result is node-major:
/// out[i * lanes + p] is interior node i + 1 of path p.
std::vector<double> evolve_batch(const GridSpec& grid, const ModelParams& params,
                                 std::span<const double> normals, std::size_t lanes,
                                 Scheme scheme);

/// L = 1 - h sum_{x_j > 0} V_j - (h/2) V(0). Throws DomainMisaligned if no
/// interior node sits at x = 0.
double loss_trapezoidal(const DensityState& state, const GridSpec& grid);

/// L = 1 - h sum_{x_j >= 0} V_j.
double loss_rectangle(const DensityState& state, const GridSpec& grid);

double loss(Functional functional, const DensityState& state, const GridSpec& grid);

/// Loss functional of every lane of a node-major batch produced by evolve_batch.
std::vector<double> loss_batch(Functional functional, std::span<const double> values,
                               std::size_t lanes, const GridSpec& grid);

double normal_cdf(double x) noexcept;

/// Analytic density at time T given the terminal value m_T of the common noise.
double exact_density(const ModelParams& params, double m_T, double x) noexcept;

/// Analytic loss int_{-inf}^0 v(T, x) dx given M_T = m_T.
double exact_loss_sample(const ModelParams& params, double m_T) noexcept;

/// E[L] over M_T ~ N(0, T): Phi((-x0 - mu T) / sqrt(T)).
double expected_exact_loss(const ModelParams& params) noexcept;

}  // namespace zakai

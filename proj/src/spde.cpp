#include "zakai/spde.hpp"

#include "zakai/error.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

namespace zakai {

double DensityState::mass(double h) const noexcept {
    double s = 0.0;
    for (double v : values) s += v;
    return h * s;
}

TridiagonalOperator TridiagonalOperator::implicit_drift_diffusion(const ModelParams& params,
                                                                  const GridSpec& grid) noexcept {
    const double adv = params.mu * grid.k / (2.0 * grid.h);
    const double dif = grid.k / (2.0 * grid.h * grid.h);
    return {-adv - dif, 1.0 + 2.0 * dif, adv - dif};
}

bool TridiagonalOperator::strictly_diagonally_dominant() const noexcept {
    return std::abs(diag) > std::abs(lower) + std::abs(upper);
}

TridiagonalFactor::TridiagonalFactor(const TridiagonalOperator& op, std::size_t n)
    : lower_(op.lower), inv_pivot_(n), upper_ratio_(n) {
    if (n == 0) throw Error(ErrorKind::SolverFailure, "empty tridiagonal system");
    if (!op.strictly_diagonally_dominant()) {
        throw Error(ErrorKind::SolverFailure, "tridiagonal operator is not diagonally dominant");
    }
    double prev_ratio = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double pivot = op.diag - op.lower * prev_ratio;
        if (!(std::abs(pivot) > 0.0) || !std::isfinite(pivot)) {
            throw Error(ErrorKind::SolverFailure, "zero pivot in tridiagonal elimination");
        }
        inv_pivot_[i] = 1.0 / pivot;
        upper_ratio_[i] = op.upper / pivot;
        prev_ratio = upper_ratio_[i];
    }
}

void TridiagonalFactor::solve(std::span<double> rhs) const {
    const std::size_t n = size();
    double prev = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        prev = (rhs[i] - lower_ * prev) * inv_pivot_[i];
        rhs[i] = prev;
    }
    for (std::size_t i = n - 1; i-- > 0;) rhs[i] -= upper_ratio_[i] * rhs[i + 1];
}

namespace {

constexpr std::size_t kGhost = 2;     // wide Milstein stencil reaches two nodes out
constexpr std::size_t kLaneWidth = 16;

/// Advances W lanes by one step. `padded` holds (n + 4) * W values node-major
/// with two zero ghost nodes at each end; `scratch` holds n * W values.
template <std::size_t W, std::size_t Reach>
void advance(double* __restrict padded, double* __restrict scratch,
             const TridiagonalFactor& factor, double s1_scale, double s2_scale,
             const double* __restrict z) {
    const std::size_t n = factor.size();
    alignas(64) double s1[W];
    alignas(64) double s2[W];
    alignas(64) double carry[W];
    for (std::size_t p = 0; p < W; ++p) {
        s1[p] = s1_scale * z[p];
        s2[p] = s2_scale * (z[p] * z[p] - 1.0);
        carry[p] = 0.0;
    }
    const double lower = factor.lower();
    double* __restrict v = padded + kGhost * W;

    // Right-hand side fused with forward elimination.
    for (std::size_t i = 0; i < n; ++i) {
        const double* __restrict c = v + i * W;
        double* __restrict out = scratch + i * W;
        const double inv = factor.inv_pivot(i);
        for (std::size_t p = 0; p < W; ++p) {
            const double center = c[p];
            const double d1 = c[p + W] - c[p - W];
            const double wide = c[p + Reach * W] - 2.0 * center + c[p - Reach * W];
            const double r = center - s1[p] * d1 + s2[p] * wide;
            carry[p] = (r - lower * carry[p]) * inv;
            out[p] = carry[p];
        }
    }
    // Back substitution into the state.
    for (std::size_t p = 0; p < W; ++p) v[(n - 1) * W + p] = carry[p];
    for (std::size_t i = n - 1; i-- > 0;) {
        const double ratio = factor.upper_ratio(i);
        for (std::size_t p = 0; p < W; ++p) {
            carry[p] = scratch[i * W + p] - ratio * carry[p];
            v[i * W + p] = carry[p];
        }
    }
}

template <std::size_t W>
void advance(double* padded, double* scratch, const TridiagonalFactor& factor,
             const GridSpec& grid, const ModelParams& params, Scheme scheme, const double* z) {
    const double s1 = std::sqrt(params.rho * grid.k) / (2.0 * grid.h);
    if (scheme == Scheme::A) {
        const double s2 = params.rho * grid.k / (8.0 * grid.h * grid.h);
        advance<W, 2>(padded, scratch, factor, s1, s2, z);
    } else {
        const double s2 = params.rho * grid.k / (2.0 * grid.h * grid.h);
        advance<W, 1>(padded, scratch, factor, s1, s2, z);
    }
}

TridiagonalFactor make_factor(const GridSpec& grid, const ModelParams& params) {
    return TridiagonalFactor(TridiagonalOperator::implicit_drift_diffusion(params, grid),
                             static_cast<std::size_t>(grid.interior_nodes()));
}

void check_state(const DensityState& state, const GridSpec& grid) {
    if (static_cast<std::int64_t>(state.values.size()) != grid.interior_nodes()) {
        throw Error(ErrorKind::DomainMisaligned, "state does not match grid");
    }
}

DensityState single_step(Scheme scheme, const DensityState& state, const GridSpec& grid,
                         const ModelParams& params, double z) {
    check_state(state, grid);
    const auto factor = make_factor(grid, params);
    const std::size_t n = state.values.size();
    std::vector<double> padded(n + 2 * kGhost, 0.0);
    std::vector<double> scratch(n);
    std::copy(state.values.begin(), state.values.end(), padded.begin() + kGhost);
    advance<1>(padded.data(), scratch.data(), factor, grid, params, scheme, &z);
    DensityState next;
    next.values.assign(padded.begin() + kGhost, padded.end() - kGhost);
    next.time_index = state.time_index + 1;
    return next;
}

}  // namespace

DensityState initial_state(const GridSpec& grid) {
    DensityState s;
    s.values.assign(static_cast<std::size_t>(grid.interior_nodes()), 0.0);
    s.values[static_cast<std::size_t>(grid.dirac_node - 1)] = 1.0 / grid.h;
    return s;
}

DensityState step_scheme_a(const DensityState& state, const GridSpec& grid,
                           const ModelParams& params, double z) {
    return single_step(Scheme::A, state, grid, params, z);
}

DensityState step_scheme_b(const DensityState& state, const GridSpec& grid,
                           const ModelParams& params, double z) {
    return single_step(Scheme::B, state, grid, params, z);
}

DensityState step(Scheme scheme, const DensityState& state, const GridSpec& grid,
                  const ModelParams& params, double z) {
    return single_step(scheme, state, grid, params, z);
}

DensityState evolve_from(DensityState state, const GridSpec& grid, const ModelParams& params,
                         std::span<const double> draws, Scheme scheme) {
    check_state(state, grid);
    if (static_cast<std::int64_t>(draws.size()) != grid.steps) {
        throw Error(ErrorKind::DomainMisaligned, "need exactly one draw per timestep");
    }
    const auto factor = make_factor(grid, params);
    const std::size_t n = state.values.size();
    std::vector<double> padded(n + 2 * kGhost, 0.0);
    std::vector<double> scratch(n);
    std::copy(state.values.begin(), state.values.end(), padded.begin() + kGhost);
    for (double z : draws) {
        advance<1>(padded.data(), scratch.data(), factor, grid, params, scheme, &z);
    }
    state.values.assign(padded.begin() + kGhost, padded.end() - kGhost);
    state.time_index += grid.steps;
    return state;
}

DensityState evolve(const GridSpec& grid, const ModelParams& params,
                    std::span<const double> draws, Scheme scheme) {
    return evolve_from(initial_state(grid), grid, params, draws, scheme);
}

std::vector<double> evolve_batch(const GridSpec& grid, const ModelParams& params,
                                 std::span<const double> normals, std::size_t lanes,
                                 Scheme scheme) {
    const auto steps = static_cast<std::size_t>(grid.steps);
    if (lanes == 0 || normals.size() != steps * lanes) {
        throw Error(ErrorKind::DomainMisaligned, "normals must hold steps x lanes draws");
    }
    const auto factor = make_factor(grid, params);
    const std::size_t n = factor.size();
    const auto dirac = static_cast<std::size_t>(grid.dirac_node - 1);
    std::vector<double> out(n * lanes);
    std::vector<double> padded((n + 2 * kGhost) * kLaneWidth);
    std::vector<double> scratch(n * kLaneWidth);
    std::array<double, kLaneWidth> z{};

    for (std::size_t first = 0; first < lanes; first += kLaneWidth) {
        const std::size_t width = std::min(kLaneWidth, lanes - first);
        std::fill(padded.begin(), padded.end(), 0.0);
        for (std::size_t p = 0; p < kLaneWidth; ++p) {
            padded[(kGhost + dirac) * kLaneWidth + p] = 1.0 / grid.h;
        }
        for (std::size_t s = 0; s < steps; ++s) {
            z.fill(0.0);
            std::copy_n(normals.begin() + static_cast<std::ptrdiff_t>(s * lanes + first), width,
                        z.begin());
            advance<kLaneWidth>(padded.data(), scratch.data(), factor, grid, params, scheme,
                                z.data());
        }
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t p = 0; p < width; ++p) {
                out[i * lanes + first + p] = padded[(kGhost + i) * kLaneWidth + p];
            }
        }
    }
    return out;
}

namespace {

std::size_t zero_index(const GridSpec& grid) {
    if (!grid.zero_node || *grid.zero_node < 1 || *grid.zero_node >= grid.cells) {
        throw Error(ErrorKind::DomainMisaligned, "no interior grid node at x = 0");
    }
    return static_cast<std::size_t>(*grid.zero_node - 1);
}

}  // namespace

double loss_trapezoidal(const DensityState& state, const GridSpec& grid) {
    check_state(state, grid);
    const std::size_t z = zero_index(grid);
    double tail = 0.0;
    for (std::size_t i = z + 1; i < state.values.size(); ++i) tail += state.values[i];
    return 1.0 - grid.h * tail - 0.5 * grid.h * state.values[z];
}

double loss_rectangle(const DensityState& state, const GridSpec& grid) {
    check_state(state, grid);
    const std::size_t z = zero_index(grid);
    double tail = 0.0;
    for (std::size_t i = z; i < state.values.size(); ++i) tail += state.values[i];
    return 1.0 - grid.h * tail;
}

double loss(Functional functional, const DensityState& state, const GridSpec& grid) {
    return functional == Functional::Trapezoidal ? loss_trapezoidal(state, grid)
                                                 : loss_rectangle(state, grid);
}

std::vector<double> loss_batch(Functional functional, std::span<const double> values,
                               std::size_t lanes, const GridSpec& grid) {
    const auto n = static_cast<std::size_t>(grid.interior_nodes());
    if (values.size() != n * lanes) throw Error(ErrorKind::DomainMisaligned, "batch size");
    const std::size_t z = zero_index(grid);
    const double zero_weight = functional == Functional::Trapezoidal ? 0.5 : 1.0;
    std::vector<double> tail(lanes, 0.0);
    for (std::size_t i = z + 1; i < n; ++i) {
        for (std::size_t p = 0; p < lanes; ++p) tail[p] += values[i * lanes + p];
    }
    std::vector<double> out(lanes);
    for (std::size_t p = 0; p < lanes; ++p) {
        out[p] = 1.0 - grid.h * tail[p] - zero_weight * grid.h * values[z * lanes + p];
    }
    return out;
}

double normal_cdf(double x) noexcept { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double exact_density(const ModelParams& p, double m_T, double x) noexcept {
    const double var = (1.0 - p.rho) * p.T;
    const double d = x - p.x0 - p.mu * p.T - std::sqrt(p.rho) * m_T;
    return std::exp(-d * d / (2.0 * var)) / std::sqrt(2.0 * std::numbers::pi * var);
}

double exact_loss_sample(const ModelParams& p, double m_T) noexcept {
    return normal_cdf((-p.x0 - p.mu * p.T - std::sqrt(p.rho) * m_T) /
                      std::sqrt((1.0 - p.rho) * p.T));
}

double expected_exact_loss(const ModelParams& p) noexcept {
    return normal_cdf((-p.x0 - p.mu * p.T) / std::sqrt(p.T));
}

}  // namespace zakai

#include "zakai/model.hpp"

#include "zakai/error.hpp"

#include <cmath>
#include <sstream>

namespace zakai {

namespace {

// Grid quantities must be exact multiples of the mesh; anything else is
// rejected rather than rounded.
std::int64_t exact_ratio(double num, double den, const char* what) {
    const double r = num / den;
    const double n = std::round(r);
    if (std::abs(r - n) > 1e-9 * std::max(1.0, std::abs(r))) {
        std::ostringstream os;
        os << what << " = " << r << " is not an integer";
        throw Error(ErrorKind::DomainMisaligned, os.str());
    }
    return static_cast<std::int64_t>(n);
}

}  // namespace

void ModelParams::validate() const {
    if (!(rho >= 0.0 && rho < 1.0)) {
        throw Error(ErrorKind::ConfigError, "rho must lie in [0, 1)");
    }
    if (!(T > 0.0)) throw Error(ErrorKind::ConfigError, "T must be positive");
    if (!std::isfinite(mu) || !std::isfinite(x0)) {
        throw Error(ErrorKind::ConfigError, "mu and x0 must be finite");
    }
}

bool ModelParams::admissible() const noexcept { return rho <= 1.0 / std::sqrt(2.0) + 1e-15; }

std::string_view to_string(Scheme s) noexcept { return s == Scheme::A ? "a" : "b"; }

std::string_view to_string(Functional f) noexcept {
    return f == Functional::Trapezoidal ? "trap" : "rect";
}

GridSpec build_grid(const ModelParams& params, double x_min, double x_max, double h0,
                    double k0, int l1, int l2) {
    params.validate();
    if (l1 < 0 || l2 < 0) throw Error(ErrorKind::InvalidLevel, "levels must be non-negative");
    if (!(h0 > 0.0) || !(k0 > 0.0)) {
        throw Error(ErrorKind::DomainMisaligned, "h0 and k0 must be positive");
    }
    if (!(x_max > x_min)) throw Error(ErrorKind::DomainMisaligned, "x_max must exceed x_min");

    GridSpec g;
    g.x_min = x_min;
    g.x_max = x_max;
    g.h0 = h0;
    g.k0 = k0;
    g.l1 = l1;
    g.l2 = l2;
    g.h = std::ldexp(h0, -l1);
    g.k = std::ldexp(k0, -2 * l2);
    g.cells = exact_ratio(x_max - x_min, g.h, "(x_max - x_min) / h");
    g.dirac_node = exact_ratio(params.x0 - x_min, g.h, "(x0 - x_min) / h");
    g.steps = exact_ratio(params.T, g.k, "T / k");
    if (g.cells < 2) throw Error(ErrorKind::DomainMisaligned, "grid needs an interior node");
    if (g.steps < 1) throw Error(ErrorKind::DomainMisaligned, "T / k must be positive");
    if (g.dirac_node < 1 || g.dirac_node >= g.cells) {
        throw Error(ErrorKind::DomainMisaligned, "x0 must be an interior node");
    }
    if (x_min < 0.0 && x_max > 0.0) {
        const double r = -x_min / g.h;
        if (std::abs(r - std::round(r)) <= 1e-9 * std::max(1.0, r)) {
            g.zero_node = static_cast<std::int64_t>(std::round(r));
        }
    }
    if (std::abs(params.mu) * g.h >= 1.0) {
        throw Error(ErrorKind::SolverFailure,
                    "|mu| h >= 1: implicit operator is not diagonally dominant");
    }
    return g;
}

}  // namespace zakai

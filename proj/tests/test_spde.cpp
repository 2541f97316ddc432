#include "zakai/error.hpp"
#include "zakai/rng.hpp"
#include "zakai/spde.hpp"

#include <Eigen/Dense>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <numbers>
#include <random>

using namespace zakai;

namespace {

std::vector<double> normals(std::uint64_t seed, std::size_t n) {
    std::vector<double> z(n);
    NormalStream(seed).fill(z);
    return z;
}

// dense RHS of one step, assembled independently of the solver
Eigen::VectorXd dense_rhs(const std::vector<double>& v, const GridSpec& g, const ModelParams& p,
                          Scheme scheme, double z) {
    const auto n = static_cast<Eigen::Index>(v.size());
    const auto at = [&](Eigen::Index j) { return j < 0 || j >= n ? 0.0 : v[static_cast<std::size_t>(j)]; };
    Eigen::VectorXd r(n);
    for (Eigen::Index j = 0; j < n; ++j) {
        const double d1 = at(j + 1) - at(j - 1);
        double mil = 0.0;
        if (scheme == Scheme::A) {
            mil = p.rho * g.k * (z * z - 1.0) / (8.0 * g.h * g.h) * (at(j + 2) - 2.0 * at(j) + at(j - 2));
        } else {
            mil = p.rho * g.k * (z * z - 1.0) / (2.0 * g.h * g.h) * (at(j + 1) - 2.0 * at(j) + at(j - 1));
        }
        r(j) = at(j) - std::sqrt(p.rho * g.k) * z / (2.0 * g.h) * d1 + mil;
    }
    return r;
}

Eigen::MatrixXd dense_lhs(const GridSpec& g, const ModelParams& p) {
    const auto n = static_cast<Eigen::Index>(g.interior_nodes());
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        a(j, j) = 1.0 + g.k / (g.h * g.h);
        if (j > 0) a(j, j - 1) = -p.mu * g.k / (2.0 * g.h) - g.k / (2.0 * g.h * g.h);
        if (j + 1 < n) a(j, j + 1) = p.mu * g.k / (2.0 * g.h) - g.k / (2.0 * g.h * g.h);
    }
    return a;
}

double max_abs_diff(const std::vector<double>& a, const Eigen::VectorXd& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b(static_cast<Eigen::Index>(i))));
    return m;
}

}  // namespace

TEST(InitialState, DiracMassIsOne) {
    const ModelParams p;
    for (int l1 = 0; l1 <= 5; ++l1) {
        const auto g = build_grid(p, BaseGrid{}, l1, 0);
        const auto s = initial_state(g);
        EXPECT_EQ(s.mass(g.h), 1.0);
        EXPECT_EQ(s.values[static_cast<std::size_t>(g.dirac_node - 1)], 1.0 / g.h);
        EXPECT_DOUBLE_EQ(g.node_x(g.dirac_node), 5.0);
    }
    const auto g1 = build_grid(p, BaseGrid{}, 1, 0);
    EXPECT_EQ(initial_state(g1).values[static_cast<std::size_t>(g1.dirac_node - 1)], 2.0);
}

TEST(Tridiagonal, MatchesDenseSolve) {
    const ModelParams p;
    std::mt19937_64 eng(3);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    for (int l1 : {0, 2, 5}) {
        const auto g = build_grid(p, BaseGrid{}, l1, 1);
        const auto op = TridiagonalOperator::implicit_drift_diffusion(p, g);
        EXPECT_TRUE(op.strictly_diagonally_dominant());
        const TridiagonalFactor f(op, static_cast<std::size_t>(g.interior_nodes()));
        std::vector<double> b(f.size());
        for (auto& x : b) x = U(eng);
        const Eigen::VectorXd rhs = Eigen::Map<Eigen::VectorXd>(b.data(), static_cast<Eigen::Index>(b.size()));
        const Eigen::VectorXd expect = dense_lhs(g, p).partialPivLu().solve(rhs);
        f.solve(b);
        EXPECT_LE(max_abs_diff(b, expect), 1e-12) << "l1=" << l1;
    }
}

TEST(Tridiagonal, ThousandNodes) {
    const ModelParams p;
    const auto g = build_grid(p, -10.0, 20.0, 0.03, 0.25, 0, 2);
    ASSERT_EQ(g.interior_nodes(), 999);
    const TridiagonalFactor f(TridiagonalOperator::implicit_drift_diffusion(p, g), 999);
    std::vector<double> b(999);
    for (std::size_t i = 0; i < b.size(); ++i) b[i] = std::sin(0.01 * static_cast<double>(i * i));
    const Eigen::VectorXd rhs = Eigen::Map<Eigen::VectorXd>(b.data(), 999);
    const Eigen::VectorXd expect = dense_lhs(g, p).partialPivLu().solve(rhs);
    f.solve(b);
    EXPECT_LE(max_abs_diff(b, expect), 1e-12);
}

TEST(Tridiagonal, RejectsNonDominant) {
    TridiagonalOperator op{-1.0, 1.5, -1.0};
    EXPECT_FALSE(op.strictly_diagonally_dominant());
    EXPECT_THROW(TridiagonalFactor(op, 5), Error);
}

TEST(Step, FiveNodeSystemByHand) {
    // interior nodes -2..2, Dirac at 0, one step with z = 0.7
    const ModelParams p;
    ModelParams q = p;
    q.x0 = 0.0;
    const auto g = build_grid(q, -3.0, 3.0, 1.0, 0.25, 0, 0);
    ASSERT_EQ(g.interior_nodes(), 5);
    const auto s0 = initial_state(g);
    const auto a = step_scheme_a(s0, g, q, 0.7);
    const auto b = step_scheme_b(s0, g, q, 0.7);
    const double expect_a[] = {-0.001388106695540542, 0.012643017458753625, 0.8204893924106165,
                               0.15258631363792316, 0.013944580504259499};
    const double expect_b[] = {0.0003563965532368896, 0.0038780908948519, 0.8340529684161163,
                               0.14400159728381665, 0.01556657266638058};
    for (int i = 0; i < 5; ++i) {
        EXPECT_NEAR(a.values[static_cast<std::size_t>(i)], expect_a[i], 1e-14);
        EXPECT_NEAR(b.values[static_cast<std::size_t>(i)], expect_b[i], 1e-14);
    }
    EXPECT_EQ(a.time_index, 1);
}

TEST(Step, MatchesDenseOracleOnThirtyNodes) {
    const ModelParams p;
    const auto g = build_grid(p, BaseGrid{}, 0, 1);
    std::vector<double> v(29);
    std::mt19937_64 eng(11);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    for (auto& x : v) x = U(eng);
    DensityState s{v, 0};
    for (Scheme scheme : {Scheme::A, Scheme::B}) {
        for (double z : {-1.3, 0.0, 0.4, 2.2}) {
            const auto next = step(scheme, s, g, p, z);
            const Eigen::VectorXd expect = dense_lhs(g, p).partialPivLu().solve(dense_rhs(v, g, p, scheme, z));
            EXPECT_LE(max_abs_diff(next.values, expect), 1e-12);
        }
    }
}

TEST(Step, NoNoiseIsBackwardEuler) {
    ModelParams p;
    p.rho = 0.0;
    const auto g = build_grid(p, BaseGrid{}, 1, 1);
    auto s = initial_state(g);
    double mass = s.mass(g.h);
    for (int n = 0; n < 200; ++n) {
        s = step_scheme_a(s, g, p, 0.0);
        const double m = s.mass(g.h);
        EXPECT_LE(m, mass + 1e-14);
        mass = m;
    }
}

TEST(Step, UnitSquareNoiseMakesSchemesAgree) {
    const ModelParams p;
    const auto g = build_grid(p, BaseGrid{}, 2, 1);
    auto s = initial_state(g);
    s = step_scheme_a(s, g, p, 0.3);
    for (double z : {1.0, -1.0}) {
        const auto a = step_scheme_a(s, g, p, z);
        const auto b = step_scheme_b(s, g, p, z);
        EXPECT_EQ(a.values, b.values);
    }
}

TEST(Step, FourierAmplificationOfPlaneWave) {
    // a plane wave far from the boundary is multiplied by the symbol
    ModelParams p;
    p.mu = 0.0;
    p.x0 = 0.0;
    const auto g = build_grid(p, -40.0, 40.0, 0.125, 0.25, 0, 2);
    const auto n = static_cast<std::size_t>(g.interior_nodes());
    for (Scheme scheme : {Scheme::A, Scheme::B}) {
        for (double gamma : {0.7, 3.1, 11.0, 20.0}) {
            for (double z : {-0.8, 0.35, 1.9}) {
                DensityState re, im;
                re.values.resize(n);
                im.values.resize(n);
                for (std::size_t i = 0; i < n; ++i) {
                    const double x = g.node_x(static_cast<std::int64_t>(i) + 1);
                    re.values[i] = std::cos(gamma * x);
                    im.values[i] = std::sin(gamma * x);
                }
                const auto r1 = step(scheme, re, g, p, z);
                const auto i1 = step(scheme, im, g, p, z);
                const double s = gamma * g.h;
                const double a = -std::sin(s) * std::sin(s) / (2.0 * g.h * g.h);
                const double ah = -2.0 * std::sin(s / 2) * std::sin(s / 2) / (g.h * g.h);
                const double c = std::sin(s) / g.h;
                const double mil = scheme == Scheme::A ? a : ah;
                const std::complex<double> factor =
                    std::complex<double>(1.0 + mil * p.rho * g.k * (z * z - 1.0), -c * std::sqrt(p.rho * g.k) * z) /
                    (1.0 - ah * g.k);
                for (std::size_t i = n / 2 - 20; i < n / 2 + 20; ++i) {
                    const double x = g.node_x(static_cast<std::int64_t>(i) + 1);
                    const std::complex<double> got(r1.values[i], i1.values[i]);
                    const std::complex<double> want = factor * std::exp(std::complex<double>(0.0, gamma * x));
                    EXPECT_LE(std::abs(got - want), 1e-10);
                }
            }
        }
    }
}

TEST(Evolve, DeterministicAndLinear) {
    const ModelParams p;
    const auto g = build_grid(p, BaseGrid{}, 1, 1);
    const auto z = normals(5, static_cast<std::size_t>(g.steps));
    const auto a = evolve(g, p, z, Scheme::A);
    const auto b = evolve(g, p, z, Scheme::A);
    EXPECT_EQ(a.values, b.values);
    EXPECT_EQ(a.time_index, g.steps);

    const auto n = static_cast<std::size_t>(g.interior_nodes());
    DensityState u, w, mix;
    u.values.resize(n);
    w.values.resize(n);
    mix.values.resize(n);
    std::mt19937_64 eng(9);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    for (std::size_t i = 0; i < n; ++i) {
        u.values[i] = U(eng);
        w.values[i] = U(eng);
        mix.values[i] = 0.3 * u.values[i] - 1.7 * w.values[i];
    }
    for (Scheme scheme : {Scheme::A, Scheme::B}) {
        const auto eu = evolve_from(u, g, p, z, scheme);
        const auto ew = evolve_from(w, g, p, z, scheme);
        const auto em = evolve_from(mix, g, p, z, scheme);
        for (std::size_t i = 0; i < n; ++i) {
            EXPECT_NEAR(em.values[i], 0.3 * eu.values[i] - 1.7 * ew.values[i], 1e-12);
        }
    }
}

TEST(Evolve, RequiresOneDrawPerStep) {
    const ModelParams p;
    const auto g = build_grid(p, BaseGrid{}, 0, 0);
    std::vector<double> z(19, 0.0);
    EXPECT_THROW(evolve(g, p, z, Scheme::A), Error);
}

TEST(Evolve, BatchMatchesSinglePaths) {
    const ModelParams p;
    const auto g = build_grid(p, BaseGrid{}, 2, 1);
    const auto steps = static_cast<std::size_t>(g.steps);
    const std::size_t lanes = 21;
    std::vector<double> all(steps * lanes);
    std::vector<std::vector<double>> paths;
    for (std::size_t q = 0; q < lanes; ++q) {
        paths.push_back(normals(100 + q, steps));
        for (std::size_t n = 0; n < steps; ++n) all[n * lanes + q] = paths.back()[n];
    }
    for (Scheme scheme : {Scheme::A, Scheme::B}) {
        const auto batch = evolve_batch(g, p, all, lanes, scheme);
        const auto losses = loss_batch(Functional::Trapezoidal, batch, lanes, g);
        for (std::size_t q = 0; q < lanes; ++q) {
            const auto single = evolve(g, p, paths[q], scheme);
            for (std::size_t i = 0; i < single.values.size(); ++i) {
                EXPECT_NEAR(batch[i * lanes + q], single.values[i], 1e-13);
            }
            EXPECT_NEAR(losses[q], loss_trapezoidal(single, g), 1e-14);
        }
    }
}

TEST(Evolve, BoundaryLeakageIsNegligible) {
    const ModelParams p;
    const auto g = build_grid(p, BaseGrid{}, 2, 2);
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const auto s = evolve(g, p, normals(seed, static_cast<std::size_t>(g.steps)), Scheme::A);
        EXPECT_NEAR(s.mass(g.h), 1.0, 1e-6);
    }
}

TEST(Evolve, NoNoiseApproachesHeatKernel) {
    // rho = 0: the density is N(x0 + mu T, T); sup error should drop ~4x when h^2 and k both quarter
    ModelParams p;
    p.rho = 0.0;
    const auto sup_error = [&](int l) {
        const auto g = build_grid(p, BaseGrid{}, l, l);
        const std::vector<double> z(static_cast<std::size_t>(g.steps), 0.0);
        const auto s = evolve(g, p, z, Scheme::A);
        double e = 0.0;
        for (std::size_t i = 0; i < s.values.size(); ++i) {
            const double x = g.node_x(static_cast<std::int64_t>(i) + 1);
            e = std::max(e, std::abs(s.values[i] - exact_density(p, 0.0, x)));
        }
        return e;
    };
    const double e1 = sup_error(1);
    const double e2 = sup_error(2);
    const double e3 = sup_error(3);
    EXPECT_GT(e1 / e2, 3.0);
    EXPECT_LT(e1 / e2, 5.0);
    EXPECT_GT(e2 / e3, 3.5);
    EXPECT_LT(e2 / e3, 4.5);
}

TEST(Evolve, MeanLocationFollowsDrift) {
    const ModelParams p;
    const auto g = build_grid(p, BaseGrid{}, 1, 1);
    const auto steps = static_cast<std::size_t>(g.steps);
    const std::size_t paths = 10000;
    std::vector<double> all(steps * paths);
    for (std::size_t q = 0; q < paths; ++q) {
        NormalStream st(7000 + q);
        for (std::size_t n = 0; n < steps; ++n) all[n * paths + q] = st.next();
    }
    const auto out = evolve_batch(g, p, all, paths, Scheme::A);
    double sum = 0.0, sq = 0.0;
    const auto n = static_cast<std::size_t>(g.interior_nodes());
    for (std::size_t q = 0; q < paths; ++q) {
        double m = 0.0, x1 = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double v = out[i * paths + q];
            m += v;
            x1 += v * g.node_x(static_cast<std::int64_t>(i) + 1);
        }
        const double loc = x1 / m;
        sum += loc;
        sq += loc * loc;
    }
    const double mean = sum / paths;
    const double se = std::sqrt((sq / paths - mean * mean) / paths);
    EXPECT_NEAR(mean, p.x0 + p.mu * p.T, 3.0 * se);
}

TEST(Evolve, MeanSquareNormEventuallyDecreases) {
    const ModelParams p;
    const auto g = build_grid(p, BaseGrid{}, 2, 1);
    const std::size_t paths = 1000;
    const auto chunk = static_cast<std::size_t>(g.steps) / 8;
    std::vector<DensityState> states(paths, initial_state(g));
    std::vector<NormalStream> streams;
    for (std::size_t q = 0; q < paths; ++q) streams.emplace_back(50 + q);
    std::vector<double> norms;
    for (int block = 0; block < 8; ++block) {
        double total = 0.0;
        for (std::size_t q = 0; q < paths; ++q) {
            for (std::size_t s = 0; s < chunk; ++s) states[q] = step_scheme_a(states[q], g, p, streams[q].next());
            double sq = 0.0;
            for (double v : states[q].values) sq += v * v;
            total += sq;
        }
        norms.push_back(total / paths);
    }
    for (std::size_t i = 4; i < norms.size(); ++i) EXPECT_LE(norms[i], norms[i - 1]);
}

TEST(Loss, EmptyDensityGivesOne) {
    const auto g = build_grid(ModelParams{}, BaseGrid{}, 2, 0);
    DensityState s;
    s.values.assign(static_cast<std::size_t>(g.interior_nodes()), 0.0);
    EXPECT_EQ(loss_trapezoidal(s, g), 1.0);
    EXPECT_EQ(loss_rectangle(s, g), 1.0);
}

TEST(Loss, RuleDifferenceIsHalfCellAtZero) {
    const ModelParams p;
    const auto g = build_grid(p, BaseGrid{}, 2, 1);
    const auto s = evolve(g, p, normals(3, static_cast<std::size_t>(g.steps)), Scheme::A);
    const double v0 = s.values[static_cast<std::size_t>(*g.zero_node - 1)];
    EXPECT_NEAR(loss_trapezoidal(s, g) - loss_rectangle(s, g), 0.5 * g.h * v0, 1e-16);
}

TEST(Loss, SymmetricDensityGivesHalf) {
    ModelParams p;
    p.x0 = 0.0;
    p.mu = 0.0;
    p.rho = 0.0;
    const auto g = build_grid(p, -25.0, 25.0, 0.125, 0.25, 3, 0);
    DensityState s;
    for (std::int64_t j = 1; j < g.cells; ++j) s.values.push_back(exact_density(p, 0.0, g.node_x(j)));
    EXPECT_NEAR(loss_trapezoidal(s, g), 0.5, 1e-12);
}

TEST(Loss, SampledExactDensityAgainstQuadrature) {
    using boost::math::quadrature::gauss_kronrod;
    const ModelParams p;
    for (double m : {-2.0, 0.0, 1.5}) {
        const double truth = gauss_kronrod<double, 61>::integrate(
            [&](double x) { return exact_density(p, m, x); }, -60.0, 0.0, 20, 1e-13);
        EXPECT_NEAR(truth, exact_loss_sample(p, m), 1e-12);
        const auto g = build_grid(p, BaseGrid{}, 3, 0);
        DensityState s;
        for (std::int64_t j = 1; j < g.cells; ++j) s.values.push_back(exact_density(p, m, g.node_x(j)));
        EXPECT_NEAR(loss_trapezoidal(s, g), truth, 5e-3);

        const auto g1 = build_grid(p, BaseGrid{}, 1, 0);
        DensityState c;
        for (std::int64_t j = 1; j < g1.cells; ++j) c.values.push_back(exact_density(p, m, g1.node_x(j)));
        EXPECT_GT(std::abs(loss_rectangle(c, g1) - truth), std::abs(loss_trapezoidal(c, g1) - truth));
    }
}

TEST(Loss, NeedsNodeAtZero) {
    ModelParams p;
    p.x0 = 5.5;
    const auto g = build_grid(p, -10.5, 20.5, 1.0, 0.25, 0, 0);
    DensityState s = initial_state(g);
    try {
        loss_trapezoidal(s, g);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::DomainMisaligned);
    }
    EXPECT_THROW(loss_rectangle(s, g), Error);
}

TEST(ExactSolution, SymmetricCaseIsHalf) {
    ModelParams p;
    p.mu = 0.0;
    p.x0 = 0.0;
    p.rho = 0.0;
    for (double m : {-3.0, 0.0, 2.0}) EXPECT_DOUBLE_EQ(exact_loss_sample(p, m), 0.5);
}

TEST(ExactSolution, ExpectationClosedForm) {
    using boost::math::quadrature::gauss_kronrod;
    const ModelParams p;
    const double sd = std::sqrt(p.T);
    const double q = gauss_kronrod<double, 61>::integrate(
        [&](double m) {
            return exact_loss_sample(p, m) * std::exp(-m * m / (2.0 * p.T)) / (sd * std::sqrt(2.0 * std::numbers::pi));
        },
        -60.0, 60.0, 20, 1e-14);
    EXPECT_NEAR(expected_exact_loss(p), q, 1e-13);
    EXPECT_NEAR(expected_exact_loss(p), 0.007820436332094453, 1e-15);
}

TEST(ExactSolution, DecreasingInNoise) {
    const ModelParams p;
    double prev = 2.0;
    for (double m = -5.0; m <= 5.0; m += 0.5) {
        const double v = exact_loss_sample(p, m);
        EXPECT_LT(v, prev);
        prev = v;
    }
}

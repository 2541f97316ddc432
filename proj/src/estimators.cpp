#include "zakai/estimators.hpp"

#include "zakai/error.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

namespace zakai {

std::string_view to_string(Method m) noexcept { return m == Method::MIMC ? "mimc" : "mlmc"; }

Caps choose_k0_and_caps(double epsilon, double alpha, double r, double theta, double T,
                        double h0, double error_constant, std::optional<double> fixed_k0) {
    if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
        throw Error(ErrorKind::InvalidAccuracy, "epsilon must be positive");
    }
    if (!(alpha > 0.0 && alpha < 1.0)) throw Error(ErrorKind::InvalidAccuracy, "alpha outside (0,1)");
    if (!(r > 0.0)) throw Error(ErrorKind::InvalidAccuracy, "r must be positive");
    if (!(error_constant > 0.0) || !(h0 > 0.0) || !(T > 0.0)) {
        throw Error(ErrorKind::InvalidAccuracy, "constants must be positive");
    }
    Caps caps;
    if (fixed_k0) {
        caps.k0 = *fixed_k0;
    } else {
        if (!(theta > 0.0 && theta < 1.0)) throw Error(ErrorKind::InvalidAccuracy, "theta outside (0,1)");
        if (!(epsilon < 1.0)) throw Error(ErrorKind::InvalidAccuracy, "automatic k0 needs epsilon < 1");
        const double raw = T * std::log2(1.0 / theta) / (2.0 * (1.0 + r) * std::log2(1.0 / epsilon));
        caps.k0 = T / std::ceil(T / raw - 1e-9);
    }
    const double target = (1.0 + r) * std::log2(1.0 / (alpha * epsilon));
    const double l1 = 0.5 * (target + std::log2(error_constant * h0 * h0));
    const double l2 = 0.5 * (target + std::log2(error_constant * caps.k0));
    caps.l1_star = std::max(0, static_cast<int>(std::ceil(l1 - 1e-12)));
    caps.l2_star = std::max(0, static_cast<int>(std::ceil(l2 - 1e-12)));
    return caps;
}

double choose_l_star(double C1, double h0, double k0, double alpha, double epsilon) {
    const double l = std::log2(8.0 * C1 * h0 * h0 * k0 / (3.0 * alpha * epsilon)) / 3.0;
    return std::max(0.0, l);
}

EstimatorPlan allocate_samples(const IndexSet& index_set,
                               const std::map<LevelPair, LevelStats>& pilot, double epsilon,
                               double alpha, bool printed_exponent) {
    if (!(epsilon > 0.0)) throw Error(ErrorKind::InvalidAccuracy, "epsilon must be positive");
    if (!(alpha > 0.0 && alpha < 1.0)) throw Error(ErrorKind::InvalidAccuracy, "alpha outside (0,1)");
    double sum = 0.0;
    for (const auto& l : index_set.members) {
        auto it = pilot.find(l);
        if (it == pilot.end() || it->second.count < 2) {
            throw Error(ErrorKind::MissingPilot, "no pilot samples at (" + std::to_string(l.l1) + "," +
                                                     std::to_string(l.l2) + ")");
        }
        sum += std::sqrt(it->second.variance() * it->second.avg_cost());
    }
    const double split = 1.0 - alpha * alpha;
    const double factor = std::pow(split, printed_exponent ? -2.0 : -1.0) / (epsilon * epsilon) * sum;
    EstimatorPlan plan;
    plan.index_set = index_set;
    plan.alpha = alpha;
    plan.epsilon = epsilon;
    for (const auto& l : index_set.members) {
        const auto& s = pilot.at(l);
        const double w = s.avg_cost();
        const double m = w > 0.0 ? std::ceil(factor * std::sqrt(s.variance() / w)) : 1.0;
        const auto count = std::max<std::int64_t>(1, static_cast<std::int64_t>(m));
        plan.samples[l] = count;
        plan.planned_work += static_cast<double>(count) * w;
    }
    return plan;
}

double optimize_alpha(const std::function<double(double)>& cost) {
    double best_a = 0.5;
    double best_c = INFINITY;
    for (int i = 1; i <= 99; ++i) {
        const double a = 0.01 * i;
        const double c = cost(a);
        if (c < best_c) {
            best_c = c;
            best_a = a;
        }
    }
    double lo = std::max(0.01, best_a - 0.01);
    double hi = std::min(0.99, best_a + 0.01);
    const double g = (std::sqrt(5.0) - 1.0) / 2.0;
    double x1 = hi - g * (hi - lo);
    double x2 = lo + g * (hi - lo);
    double f1 = cost(x1);
    double f2 = cost(x2);
    for (int it = 0; it < 40; ++it) {
        if (f1 <= f2) {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = cost(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = cost(x2);
        }
    }
    const double refined = f1 <= f2 ? x1 : x2;
    return std::min(f1, f2) < best_c ? refined : best_a;
}

RateConstants fit_constants(const RateModel& model, const std::map<LevelPair, LevelStats>& stats) {
    double se = 0.0;
    double sv = 0.0;
    int ne = 0;
    int nv = 0;
    for (const auto& [l, s] : stats) {
        if (l == LevelPair{0, 0}) continue;
        if (s.mean != 0.0) {
            se += std::log2(std::abs(s.mean)) - model.log2_bias(l);
            ++ne;
        }
        if (s.variance() > 0.0) {
            sv += std::log2(s.variance()) - model.log2_variance_sum(l);
            ++nv;
        }
    }
    if (ne == 0 || nv == 0) throw Error(ErrorKind::MissingPilot, "not enough pilot levels to fit rates");
    RateConstants c;
    c.c1 = std::exp2(se / ne);
    c.c2 = std::exp2(sv / nv);
    return c;
}

RateModel diagonal_rate_model(Functional functional) {
    RateModel m;
    if (functional == Functional::Trapezoidal) {
        m.bias = {1.0, 1.0};
        m.variance = {{2.0, 2.0}};
    } else {
        m.bias = {0.5, 0.5};
        m.variance = {{1.0, 1.0}};
    }
    return m;
}

LevelStats sample_level(DifferenceKind kind, LevelPair pair, const SamplerSetup& setup,
                        std::uint64_t seed, std::uint64_t first_index, std::int64_t count,
                        LevelStats into) {
    into.pair = pair;
    constexpr std::int64_t kBlock = 64;
    for (std::int64_t done = 0; done < count; done += kBlock) {
        const auto n = static_cast<std::size_t>(std::min(kBlock, count - done));
        const auto incs = sample_batch(kind, pair, setup, seed,
                                       first_index + static_cast<std::uint64_t>(done), n);
        for (const auto& inc : incs) into.add(inc.delta, inc.cost);
    }
    return into;
}

namespace {

using StatsMap = std::map<LevelPair, LevelStats>;
using Clock = std::chrono::steady_clock;

struct Context {
    SamplerSetup setup;
    EstimatorOptions options;
    RateModel model;
    DifferenceKind kind;
    Method method;
};

// pilot measurement where there is one, the fitted model elsewhere
double modeled_variance(const Context& ctx, const RateConstants& c, const StatsMap& stats,
                        LevelPair l) {
    if (auto it = stats.find(l); it != stats.end() && it->second.count >= 2) {
        return it->second.variance();
    }
    return c.c2 * std::exp2(ctx.model.log2_variance_sum(l));
}

double modeled_bias_term(const Context& ctx, const RateConstants& c, LevelPair l) {
    return c.c1 * std::exp2(ctx.model.log2_bias(l));
}

Caps caps_for(const Context& ctx, double alpha) {
    const auto& o = ctx.options;
    auto caps = choose_k0_and_caps(o.epsilon, alpha, o.r, o.theta, ctx.setup.params.T,
                                   ctx.setup.base.h0, o.error_constant, ctx.setup.base.k0);
    caps.l1_star = std::min(caps.l1_star, o.level_limit);
    caps.l2_star = std::min(caps.l2_star, o.level_limit);
    return caps;
}

struct Selection {
    IndexSet set;
    Caps caps;
    double bias = 0.0;
};

double excluded_bias(const Context& ctx, const RateConstants& c, const IndexSet& set,
                     const Caps& caps) {
    double b = 0.0;
    for (int l1 = 0; l1 <= caps.l1_star; ++l1) {
        for (int l2 = 0; l2 <= caps.l2_star; ++l2) {
            if (!set.contains({l1, l2})) b += modeled_bias_term(ctx, c, {l1, l2});
        }
    }
    return b;
}

Selection select_mimc(const Context& ctx, const RateConstants& c, double alpha) {
    const auto caps = caps_for(ctx, alpha);
    const double target = alpha * ctx.options.epsilon;
    Selection sel;
    sel.caps = caps;
    const auto& setup = ctx.setup;
    if (setup.scheme == Scheme::A && setup.functional == Functional::Trapezoidal) {
        const double h0 = setup.base.h0;
        const double k0 = setup.base.k0;
        const double l_star = choose_l_star(c.c1 / (h0 * h0 * k0), h0, k0, alpha, ctx.options.epsilon);
        const auto w = ctx.model.weights();
        sel.set = build_triangular_index_set(w[0], w[1], l_star, caps.l1_star, caps.l2_star);
        sel.bias = excluded_bias(ctx, c, sel.set, caps);
        return sel;
    }
    // smallest profit threshold whose excluded modelled bias fits the budget
    std::vector<double> thresholds;
    for (int l1 = 0; l1 <= caps.l1_star; ++l1) {
        for (int l2 = 0; l2 <= caps.l2_star; ++l2) {
            thresholds.push_back(ctx.model.profit_exponent({l1, l2}) -
                                 ctx.model.profit_exponent({0, 0}));
        }
    }
    std::sort(thresholds.begin(), thresholds.end());
    thresholds.erase(std::unique(thresholds.begin(), thresholds.end(),
                                 [](double a, double b) { return std::abs(a - b) < 1e-12; }),
                     thresholds.end());
    for (double t : thresholds) {
        IndexSet set;
        if (ctx.model.piecewise()) {
            set = build_union_index_set(ctx.model, t, caps.l1_star, caps.l2_star);
        } else {
            const auto w = ctx.model.weights();
            set = build_triangular_index_set(w[0], w[1], std::max(0.0, t) / (w[0] + w[1]),
                                             caps.l1_star, caps.l2_star);
        }
        const double b = excluded_bias(ctx, c, set, caps);
        sel.set = set;
        sel.bias = b;
        if (b <= target) break;
    }
    return sel;
}

Selection select_mlmc(const Context& ctx, const RateConstants& c, double alpha) {
    const auto caps = caps_for(ctx, alpha);
    const int top_cap = std::min(ctx.options.level_limit, std::max(caps.l1_star, caps.l2_star));
    const double target = alpha * ctx.options.epsilon;
    const double s = ctx.model.bias.a1 + ctx.model.bias.a2;
    Selection sel;
    sel.caps = caps;
    for (int top = 0; top <= top_cap; ++top) {
        // geometric tail beyond the finest level
        const double tail = c.c1 * std::exp2(-s * (top + 1)) / (1.0 - std::exp2(-s));
        sel.set = build_diagonal_levels(top);
        sel.bias = tail;
        if (tail <= target) break;
    }
    return sel;
}

Selection select(const Context& ctx, const RateConstants& c, double alpha) {
    return ctx.method == Method::MIMC ? select_mimc(ctx, c, alpha) : select_mlmc(ctx, c, alpha);
}

double modeled_cost(const Context& ctx, const RateConstants& c, const StatsMap& stats,
                    double alpha) {
    const auto sel = select(ctx, c, alpha);
    double sum = 0.0;
    double pilot_like = 0.0;
    for (const auto& l : sel.set.members) {
        const double w = difference_cost(ctx.kind, l, ctx.setup);
        sum += std::sqrt(modeled_variance(ctx, c, stats, l) * w);
        pilot_like += w;
    }
    const double p = ctx.options.printed_exponent ? 2.0 : 1.0;
    const double eps = ctx.options.epsilon;
    return std::pow(1.0 - alpha * alpha, -p) / (eps * eps) * sum * sum + pilot_like;
}

void top_up(const Context& ctx, StatsMap& stats, LevelPair l, std::int64_t target) {
    auto& s = stats[l];
    s.pair = l;
    if (s.count >= target) return;
    s = sample_level(ctx.kind, l, ctx.setup, ctx.options.seed, static_cast<std::uint64_t>(s.count),
                     target - s.count, s);
}

std::vector<LevelPair> pilot_levels(const Context& ctx) {
    std::vector<LevelPair> out;
    const int top = ctx.options.pilot_max_level;
    if (ctx.method == Method::MLMC) {
        for (int l = 0; l <= top; ++l) out.push_back({l, l});
    } else {
        for (int a = 0; a <= top; ++a) {
            for (int b = 0; b <= top; ++b) out.push_back({a, b});
        }
    }
    return out;
}

double estimated_bias(const Context& ctx, const RateConstants& c, const IndexSet& set,
                      const StatsMap& stats) {
    // (0,0) holds L itself rather than a correction, so it is not used as an anchor
    const auto mean_at = [&](LevelPair l) { return std::abs(stats.at(l).mean); };
    const LevelPair origin{0, 0};
    if (ctx.method == Method::MLMC) {
        const int top = set.max_l1();
        const double s = ctx.model.bias.a1 + ctx.model.bias.a2;
        const double r = std::exp2(-s);
        if (top == 0) return c.c1 * r / (1.0 - r);
        return mean_at({top, top}) * r / (1.0 - r);
    }
    double b = 0.0;
    for (const auto& p : set.exterior_layer()) {
        double acc = 0.0;
        int n = 0;
        const LevelPair left{p.l1 - 1, p.l2};
        const LevelPair below{p.l1, p.l2 - 1};
        if (p.l1 > 0 && !(left == origin) && set.contains(left)) {
            acc += mean_at(left) * std::exp2(-ctx.model.bias.a1);
            ++n;
        }
        if (p.l2 > 0 && !(below == origin) && set.contains(below)) {
            acc += mean_at(below) * std::exp2(-ctx.model.bias.a2);
            ++n;
        }
        b += n > 0 ? acc / n : modeled_bias_term(ctx, c, p);
    }
    return b;
}

EstimateReport run(const Context& ctx) {
    const auto start = Clock::now();
    const auto& o = ctx.options;
    if (!ctx.setup.params.admissible()) {
        throw Error(ErrorKind::StabilityViolation, "rho above 1/sqrt(2) is not mean-square stable");
    }
    if (!(o.epsilon > 0.0)) throw Error(ErrorKind::InvalidAccuracy, "epsilon must be positive");
    if (o.pilot_samples < 2) throw Error(ErrorKind::MissingPilot, "pilot needs at least two samples");

    StatsMap stats;
    for (const auto& l : pilot_levels(ctx)) top_up(ctx, stats, l, o.pilot_samples);
    auto constants = fit_constants(ctx.model, stats);

    double pilot_work = 0.0;
    for (const auto& [l, s] : stats) pilot_work += s.cost_sum;
    const double pilot_seconds = std::chrono::duration<double>(Clock::now() - start).count();
    constants.c3 = pilot_work > 0.0 ? pilot_seconds / pilot_work : 0.0;

    const double alpha = o.alpha ? *o.alpha
                                 : optimize_alpha([&](double a) { return modeled_cost(ctx, constants, stats, a); });
    const auto sel = select(ctx, constants, alpha);
    for (const auto& l : sel.set.members) top_up(ctx, stats, l, o.pilot_samples);

    auto plan = allocate_samples(sel.set, stats, o.epsilon, alpha, o.printed_exponent);
    plan.k0 = ctx.setup.base.k0;
    plan.constants = constants;
    plan.caps = sel.caps;
    plan.modeled_bias = sel.bias;
    if (plan.planned_work > o.max_work) {
        throw Error(ErrorKind::BudgetExceeded, "planned work " + std::to_string(plan.planned_work) +
                                                   " exceeds the ceiling " + std::to_string(o.max_work));
    }
    for (const auto& [l, m] : plan.samples) top_up(ctx, stats, l, m);

    EstimateReport report;
    report.method = ctx.method;
    report.plan = plan;
    report.planned_work = plan.planned_work;
    for (const auto& l : plan.index_set.members) {
        const auto& s = stats.at(l);
        report.value += s.mean;
        report.est_variance += s.variance() / static_cast<double>(s.count);
        report.per_level.push_back(s);
    }
    for (const auto& [l, s] : stats) report.actual_work += s.cost_sum;
    report.est_bias = estimated_bias(ctx, constants, plan.index_set, stats);
    report.wall_seconds = std::chrono::duration<double>(Clock::now() - start).count();
    return report;
}

Context make_context(Method method, const SamplerSetup& setup, const EstimatorOptions& options) {
    setup.params.validate();
    Context ctx{setup, options, {}, DifferenceKind::Mixed, method};
    if (options.auto_k0) {
        const auto caps = choose_k0_and_caps(options.epsilon, options.alpha.value_or(0.5), options.r,
                                             options.theta, setup.params.T, setup.base.h0,
                                             options.error_constant);
        ctx.setup.base.k0 = caps.k0;
    }
    if (method == Method::MIMC) {
        ctx.model = RateModel::for_method(setup.scheme, setup.functional);
    } else {
        ctx.model = diagonal_rate_model(setup.functional);
        ctx.kind = DifferenceKind::Diagonal;
    }
    return ctx;
}

}  // namespace

EstimatorPlan plan_mimc(const SamplerSetup& setup, const EstimatorOptions& options,
                        const std::map<LevelPair, LevelStats>& pilot) {
    const auto ctx = make_context(Method::MIMC, setup, options);
    const auto constants = fit_constants(ctx.model, pilot);
    const double alpha = options.alpha ? *options.alpha
                                       : optimize_alpha([&](double a) { return modeled_cost(ctx, constants, pilot, a); });
    const auto sel = select(ctx, constants, alpha);
    auto plan = allocate_samples(sel.set, pilot, options.epsilon, alpha, options.printed_exponent);
    plan.k0 = ctx.setup.base.k0;
    plan.constants = constants;
    plan.caps = sel.caps;
    plan.modeled_bias = sel.bias;
    return plan;
}

EstimateReport run_mimc(SamplerSetup setup, const EstimatorOptions& options) {
    return run(make_context(Method::MIMC, setup, options));
}

EstimateReport run_mlmc(SamplerSetup setup, const EstimatorOptions& options) {
    return run(make_context(Method::MLMC, setup, options));
}

EstimateReport run_estimator(Method method, const SamplerSetup& setup,
                             const EstimatorOptions& options) {
    return method == Method::MIMC ? run_mimc(setup, options) : run_mlmc(setup, options);
}

}  // namespace zakai

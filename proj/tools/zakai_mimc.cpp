// Experiment runner: rates, theta, estimate, complexity, profit.

#include "zakai/analysis.hpp"
#include "zakai/config.hpp"
#include "zakai/csv.hpp"
#include "zakai/error.hpp"
#include "zakai/estimators.hpp"
#include "zakai/spde.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>

namespace {

using namespace zakai;

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;
constexpr int kExitStability = 3;
constexpr int kExitBudget = 4;

struct Overrides {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    std::optional<std::string> scheme;
    std::optional<std::string> functional;
    std::optional<std::string> method;
    std::optional<std::string> epsilon;
    std::optional<std::int64_t> samples;
};

std::vector<double> parse_epsilon_list(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(item, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == 0 || used != item.size() || !(v > 0.0) || !std::isfinite(v)) {
            throw Error(ErrorKind::ConfigError, "bad --epsilon entry '" + item + "'");
        }
        out.push_back(v);
    }
    if (out.empty()) throw Error(ErrorKind::ConfigError, "--epsilon is empty");
    return out;
}

ExperimentConfig resolve(const Overrides& o) {
    ExperimentConfig c = o.config_path.empty() ? parse_config(R"({"schema_version": 1})")
                                               : load_config(o.config_path);
    if (o.seed) c.seed = *o.seed;
    if (o.out) c.output_dir = *o.out;
    if (o.scheme) c.scheme = parse_scheme(*o.scheme);
    if (o.functional) c.functional = parse_functional(*o.functional);
    if (o.method) c.method = parse_method(*o.method);
    if (o.epsilon) c.epsilon = parse_epsilon_list(*o.epsilon);
    if (o.samples) {
        if (*o.samples < 2) throw Error(ErrorKind::ConfigError, "--samples must be at least 2");
        c.samples = *o.samples;
    }
    std::error_code ec;
    std::filesystem::create_directories(c.output_dir, ec);
    if (ec) throw Error(ErrorKind::ConfigError, "cannot create " + c.output_dir + ": " + ec.message());
    return c;
}

std::string out_path(const ExperimentConfig& c, const std::string& name) {
    return (std::filesystem::path(c.output_dir) / name).string();
}

std::string tag(const ExperimentConfig& c) {
    return std::string(to_string(c.scheme)) + "_" + std::string(to_string(c.functional));
}

std::vector<std::string> level_row(const LevelStats& s) {
    return {std::to_string(s.pair.l1), std::to_string(s.pair.l2), std::to_string(s.count),
            format_real(s.mean), format_real(s.variance()), format_real(s.avg_cost())};
}

const std::vector<std::string> kLevelHeader{"l1", "l2", "count", "mean", "variance", "avg_cost"};

int cmd_rates(const ExperimentConfig& c) {
    const auto setup = c.sampler();
    std::vector<LevelStats> stats;
    std::vector<std::vector<std::string>> rows;
    for (int l1 = 1; l1 <= c.max_level; ++l1) {
        for (int l2 = 1; l2 <= c.max_level; ++l2) {
            const auto s = sample_level(DifferenceKind::Mixed, {l1, l2}, setup, c.seed, 0, c.samples);
            stats.push_back(s);
            auto row = level_row(s);
            row.push_back(format_real(std::log2(std::abs(s.mean))));
            row.push_back(format_real(std::log2(s.variance())));
            rows.push_back(row);
            std::fprintf(stderr, "(%d,%d) log2|mean| %.4f  log2 var %.4f\n", l1, l2,
                         std::log2(std::abs(s.mean)), std::log2(s.variance()));
        }
    }
    auto header = kLevelHeader;
    header.push_back("log2_abs_mean");
    header.push_back("log2_variance");
    write_csv(out_path(c, "rates_" + tag(c) + ".csv"), header, rows);

    // l1 down the rows, l2 across the columns
    std::vector<std::string> grid_header{"l1"};
    for (int l2 = 1; l2 <= c.max_level; ++l2) grid_header.push_back("l2=" + std::to_string(l2));
    std::vector<std::vector<std::string>> mean_grid, var_grid;
    for (int l1 = 1; l1 <= c.max_level; ++l1) {
        std::vector<std::string> m{std::to_string(l1)}, v{std::to_string(l1)};
        for (int l2 = 1; l2 <= c.max_level; ++l2) {
            const auto& s = stats[static_cast<std::size_t>((l1 - 1) * c.max_level + (l2 - 1))];
            m.push_back(format_real(std::log2(std::abs(s.mean))));
            v.push_back(format_real(std::log2(s.variance())));
        }
        mean_grid.push_back(m);
        var_grid.push_back(v);
    }
    write_csv(out_path(c, "rates_mean_grid_" + tag(c) + ".csv"), grid_header, mean_grid);
    write_csv(out_path(c, "rates_variance_grid_" + tag(c) + ".csv"), grid_header, var_grid);

    const auto slopes = diagonal_slopes(stats);
    write_csv(out_path(c, "rates_slopes_" + tag(c) + ".csv"), {"quantity", "slope"},
              {{"log2_abs_mean", format_real(slopes.mean)},
               {"log2_variance", format_real(slopes.variance)}});
    std::printf("diagonal slope log2|mean| %.4f, log2 var %.4f\n", slopes.mean, slopes.variance);
    return kExitOk;
}

int cmd_theta(const ExperimentConfig& c) {
    std::vector<std::vector<std::string>> rows;
    for (double rho : c.theta_rhos) {
        const auto t = compute_theta(rho, c.model.T);
        rows.push_back({format_real(rho), format_real(t.theta), std::to_string(t.n_used),
                        t.converged ? "1" : "0"});
        std::printf("rho %.4f theta %.6f (N=%d)\n", rho, t.theta, t.n_used);
    }
    write_csv(out_path(c, "theta.csv"), {"rho", "theta", "n_used", "converged"}, rows);
    return kExitOk;
}

std::string estimate_name(const ExperimentConfig& c) {
    return std::string(to_string(c.method)) + "_" + tag(c);
}

int cmd_estimate(const ExperimentConfig& c) {
    const double exact = expected_exact_loss(c.model);
    std::vector<std::vector<std::string>> summary;
    for (std::size_t i = 0; i < c.epsilon.size(); ++i) {
        const double eps = c.epsilon[i];
        const auto report = run_estimator(c.method, c.sampler(), c.estimator_options(eps));
        std::vector<std::vector<std::string>> levels;
        for (const auto& s : report.per_level) levels.push_back(level_row(s));
        write_csv(out_path(c, "levels_" + estimate_name(c) + "_eps" + std::to_string(i) + ".csv"),
                  kLevelHeader, levels);
        summary.push_back({format_real(eps), format_real(report.value), format_real(report.est_variance),
                           format_real(report.est_bias), format_real(report.plan.alpha),
                           format_real(report.plan.k0), std::to_string(report.plan.index_set.members.size()),
                           format_real(report.planned_work), format_real(report.actual_work),
                           format_real(exact)});
        std::printf("%s eps %.3g: value %.6e  sd %.3e  bias %.3e  alpha %.3f  levels %zu  work %.4e  (%.2fs)\n",
                    std::string(to_string(c.method)).c_str(), eps, report.value,
                    std::sqrt(report.est_variance), report.est_bias, report.plan.alpha,
                    report.plan.index_set.members.size(), report.planned_work, report.wall_seconds);
    }
    std::printf("exact E[L] %.6e\n", exact);
    write_csv(out_path(c, "estimate_" + estimate_name(c) + ".csv"),
              {"epsilon", "value", "est_variance", "est_bias", "alpha", "k0", "levels",
               "planned_work", "actual_work", "exact"},
              summary);
    return kExitOk;
}

int cmd_complexity(const ExperimentConfig& c) {
    if (c.epsilon.size() < 4) {
        throw Error(ErrorKind::ConfigError, "complexity needs at least four epsilon values");
    }
    std::vector<std::vector<std::string>> rows;
    bool over_budget = false;
    for (double eps : c.epsilon) {
        const auto start = std::chrono::steady_clock::now();
        try {
            const auto r = run_estimator(c.method, c.sampler(), c.estimator_options(eps));
            const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
            rows.push_back({std::string(to_string(c.method)), std::string(to_string(c.scheme)),
                            std::string(to_string(c.functional)), format_real(eps),
                            format_real(r.planned_work), format_real(r.actual_work), format_real(secs),
                            format_real(eps * eps * r.planned_work), "ok"});
            std::printf("eps %.3g  work %.4e  eps^2*work %.4e  (%.1fs)\n", eps, r.planned_work,
                        eps * eps * r.planned_work, secs);
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::BudgetExceeded) throw;
            over_budget = true;
            rows.push_back({std::string(to_string(c.method)), std::string(to_string(c.scheme)),
                            std::string(to_string(c.functional)), format_real(eps), "", "", "", "",
                            "budget_exceeded"});
            std::fprintf(stderr, "eps %.3g: %s\n", eps, e.what());
        }
    }
    write_csv(out_path(c, "complexity_" + estimate_name(c) + ".csv"),
              {"method", "scheme", "functional", "epsilon", "work_units", "actual_work",
               "wall_seconds", "eps2_work", "status"},
              rows);
    return over_budget ? kExitBudget : kExitOk;
}

int cmd_profit(const ExperimentConfig& c) {
    const auto setup = c.sampler();
    std::vector<LevelStats> stats;
    std::map<LevelPair, LevelStats> by_pair;
    for (int l1 = 0; l1 <= c.max_level; ++l1) {
        for (int l2 = 0; l2 <= c.max_level; ++l2) {
            const auto s = sample_level(DifferenceKind::Mixed, {l1, l2}, setup, c.seed, 0, c.samples);
            stats.push_back(s);
            by_pair[s.pair] = s;
        }
    }
    const auto model = RateModel::for_method(c.scheme, c.functional);
    const auto constants = fit_constants(model, by_pair);
    const auto modelled = profit_surface(model, constants, setup, c.max_level, c.max_level);
    const auto measured = measured_profit(stats);
    std::vector<std::vector<std::string>> rows;
    for (const auto& [l, p] : measured) {
        rows.push_back({std::to_string(l.l1), std::to_string(l.l2), format_real(p),
                        format_real(std::log2(p)), format_real(modelled.at(l)),
                        format_real(std::log2(modelled.at(l)))});
    }
    write_csv(out_path(c, "profit_" + tag(c) + ".csv"),
              {"l1", "l2", "measured_profit", "log2_measured_profit", "model_profit", "log2_model_profit"},
              rows);
    return kExitOk;
}

int exit_code_for(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::ConfigError:
        case ErrorKind::DomainMisaligned:
        case ErrorKind::InvalidAccuracy:
        case ErrorKind::InvalidLevel: return kExitConfig;
        case ErrorKind::StabilityViolation: return kExitStability;
        case ErrorKind::BudgetExceeded: return kExitBudget;
        default: return kExitFailure;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multi-index Monte Carlo for the 1-D Zakai equation"};
    app.require_subcommand(1);
    Overrides o;
    app.add_option("--config", o.config_path, "JSON config file")->check(CLI::ExistingFile);
    app.add_option("--seed", o.seed, "global seed");
    app.add_option("--out", o.out, "output directory");
    app.add_option("--scheme", o.scheme, "a or b")->check(CLI::IsMember({"a", "b"}));
    app.add_option("--functional", o.functional, "trap or rect")->check(CLI::IsMember({"trap", "rect"}));
    app.add_option("--method", o.method, "mimc or mlmc")->check(CLI::IsMember({"mimc", "mlmc"}));
    app.add_option("--epsilon", o.epsilon, "target RMSE, comma separated for a sweep");
    app.add_option("--samples", o.samples, "samples per level for rates and profit");

    int (*chosen)(const ExperimentConfig&) = nullptr;
    const auto add = [&](const char* name, const char* help, int (*fn)(const ExperimentConfig&)) {
        app.add_subcommand(name, help)->fallthrough()->callback([&chosen, fn] { chosen = fn; });
    };
    add("rates", "mean and variance of the mixed differences on [1,max_level]^2", cmd_rates);
    add("theta", "high-wave decay constant over a sweep of rho", cmd_theta);
    add("estimate", "run the estimator for each epsilon", cmd_estimate);
    add("complexity", "epsilon^2 * work over an epsilon sweep", cmd_complexity);
    add("profit", "measured and modelled profit grid", cmd_profit);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitConfig;
    }
    try {
        const auto config = resolve(o);
        return chosen(config);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code_for(e.kind());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitFailure;
    }
}

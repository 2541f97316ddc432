#include "zakai/config.hpp"

#include "zakai/error.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace zakai {

using nlohmann::json;

Scheme parse_scheme(std::string_view s) {
    if (s == "a" || s == "A") return Scheme::A;
    if (s == "b" || s == "B") return Scheme::B;
    throw Error(ErrorKind::ConfigError, "scheme must be a or b, got '" + std::string(s) + "'");
}

Functional parse_functional(std::string_view s) {
    if (s == "trap") return Functional::Trapezoidal;
    if (s == "rect") return Functional::Rectangle;
    throw Error(ErrorKind::ConfigError, "functional must be trap or rect, got '" + std::string(s) + "'");
}

Method parse_method(std::string_view s) {
    if (s == "mimc") return Method::MIMC;
    if (s == "mlmc") return Method::MLMC;
    throw Error(ErrorKind::ConfigError, "method must be mimc or mlmc, got '" + std::string(s) + "'");
}

SamplerSetup ExperimentConfig::sampler() const {
    return SamplerSetup{model, base, scheme, functional};
}

EstimatorOptions ExperimentConfig::estimator_options(double eps) const {
    EstimatorOptions o;
    o.epsilon = eps;
    o.alpha = alpha;
    o.r = r;
    o.theta = theta;
    o.auto_k0 = auto_k0;
    o.error_constant = error_constant;
    o.pilot_samples = pilot_samples;
    o.printed_exponent = printed_exponent;
    o.max_work = max_work;
    o.seed = seed;
    return o;
}

namespace {

void check_keys(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
    if (!obj.is_object()) throw Error(ErrorKind::ConfigError, where + " must be an object");
    for (const auto& [key, value] : obj.items()) {
        if (!allowed.count(key)) throw Error(ErrorKind::ConfigError, "unknown key '" + key + "' in " + where);
    }
}

double number(const json& j, const std::string& name) {
    if (!j.is_number()) throw Error(ErrorKind::ConfigError, name + " must be a number");
    const double v = j.get<double>();
    if (!std::isfinite(v)) throw Error(ErrorKind::ConfigError, name + " must be finite");
    return v;
}

std::int64_t integer(const json& j, const std::string& name) {
    if (!j.is_number_integer()) throw Error(ErrorKind::ConfigError, name + " must be an integer");
    return j.get<std::int64_t>();
}

std::string text(const json& j, const std::string& name) {
    if (!j.is_string()) throw Error(ErrorKind::ConfigError, name + " must be a string");
    return j.get<std::string>();
}

std::vector<double> number_list(const json& j, const std::string& name) {
    std::vector<double> out;
    if (j.is_array()) {
        for (const auto& e : j) out.push_back(number(e, name));
    } else {
        out.push_back(number(j, name));
    }
    if (out.empty()) throw Error(ErrorKind::ConfigError, name + " must not be empty");
    return out;
}

}  // namespace

ExperimentConfig parse_config(std::string_view text_in) {
    json root;
    try {
        root = json::parse(text_in.begin(), text_in.end());
    } catch (const json::parse_error& e) {
        throw Error(ErrorKind::ConfigError, std::string("malformed JSON: ") + e.what());
    }
    check_keys(root, {"schema_version", "model", "domain", "base", "scheme", "functional", "method",
                      "epsilon", "alpha", "seed", "samples", "pilot_samples", "max_level", "max_work",
                      "r", "theta", "error_constant", "printed_exponent", "theta_rhos", "output_dir"},
               "config");
    ExperimentConfig c;
    if (!root.contains("schema_version")) throw Error(ErrorKind::ConfigError, "schema_version is required");
    c.schema_version = static_cast<int>(integer(root["schema_version"], "schema_version"));
    if (c.schema_version != kSchemaVersion) {
        throw Error(ErrorKind::ConfigError, "unsupported schema_version " + std::to_string(c.schema_version));
    }
    if (root.contains("model")) {
        const auto& m = root["model"];
        check_keys(m, {"mu", "rho", "T", "x0"}, "model");
        if (m.contains("mu")) c.model.mu = number(m["mu"], "model.mu");
        if (m.contains("rho")) c.model.rho = number(m["rho"], "model.rho");
        if (m.contains("T")) c.model.T = number(m["T"], "model.T");
        if (m.contains("x0")) c.model.x0 = number(m["x0"], "model.x0");
    }
    if (root.contains("domain")) {
        const auto& d = root["domain"];
        check_keys(d, {"x_min", "x_max"}, "domain");
        if (d.contains("x_min")) c.base.x_min = number(d["x_min"], "domain.x_min");
        if (d.contains("x_max")) c.base.x_max = number(d["x_max"], "domain.x_max");
    }
    if (root.contains("base")) {
        const auto& b = root["base"];
        check_keys(b, {"h0", "k0"}, "base");
        if (b.contains("h0")) c.base.h0 = number(b["h0"], "base.h0");
        if (b.contains("k0")) {
            if (b["k0"].is_string()) {
                if (b["k0"].get<std::string>() != "auto") {
                    throw Error(ErrorKind::ConfigError, "base.k0 must be a number or \"auto\"");
                }
                c.auto_k0 = true;
            } else {
                c.base.k0 = number(b["k0"], "base.k0");
            }
        }
    }
    if (root.contains("scheme")) c.scheme = parse_scheme(text(root["scheme"], "scheme"));
    if (root.contains("functional")) c.functional = parse_functional(text(root["functional"], "functional"));
    if (root.contains("method")) c.method = parse_method(text(root["method"], "method"));
    if (root.contains("epsilon")) c.epsilon = number_list(root["epsilon"], "epsilon");
    if (root.contains("alpha")) {
        if (root["alpha"].is_string()) {
            if (root["alpha"].get<std::string>() != "auto") {
                throw Error(ErrorKind::ConfigError, "alpha must be a number or \"auto\"");
            }
            c.alpha.reset();
        } else {
            c.alpha = number(root["alpha"], "alpha");
        }
    }
    if (root.contains("seed")) {
        if (!root["seed"].is_number_unsigned() && !root["seed"].is_number_integer()) {
            throw Error(ErrorKind::ConfigError, "seed must be an integer");
        }
        if (root["seed"].is_number_integer() && root["seed"].get<std::int64_t>() < 0) {
            throw Error(ErrorKind::ConfigError, "seed must be non-negative");
        }
        c.seed = root["seed"].get<std::uint64_t>();
    }
    if (root.contains("samples")) c.samples = integer(root["samples"], "samples");
    if (root.contains("pilot_samples")) c.pilot_samples = static_cast<int>(integer(root["pilot_samples"], "pilot_samples"));
    if (root.contains("max_level")) c.max_level = static_cast<int>(integer(root["max_level"], "max_level"));
    if (root.contains("max_work")) c.max_work = number(root["max_work"], "max_work");
    if (root.contains("r")) c.r = number(root["r"], "r");
    if (root.contains("theta")) c.theta = number(root["theta"], "theta");
    if (root.contains("error_constant")) c.error_constant = number(root["error_constant"], "error_constant");
    if (root.contains("printed_exponent")) {
        if (!root["printed_exponent"].is_boolean()) throw Error(ErrorKind::ConfigError, "printed_exponent must be true or false");
        c.printed_exponent = root["printed_exponent"].get<bool>();
    }
    if (root.contains("theta_rhos")) c.theta_rhos = number_list(root["theta_rhos"], "theta_rhos");
    if (root.contains("output_dir")) c.output_dir = text(root["output_dir"], "output_dir");

    try {
        c.model.validate();
    } catch (const Error& e) {
        throw Error(ErrorKind::ConfigError, e.what());
    }
    if (!c.model.admissible()) {
        throw Error(ErrorKind::StabilityViolation,
                    "rho = " + std::to_string(c.model.rho) + " exceeds 1/sqrt(2); the schemes are not mean-square stable");
    }
    for (double e : c.epsilon) {
        if (!(e > 0.0)) throw Error(ErrorKind::ConfigError, "epsilon values must be positive");
    }
    if (c.alpha && !(*c.alpha > 0.0 && *c.alpha < 1.0)) throw Error(ErrorKind::ConfigError, "alpha must lie in (0,1)");
    if (c.samples < 2) throw Error(ErrorKind::ConfigError, "samples must be at least 2");
    if (c.pilot_samples < 2) throw Error(ErrorKind::ConfigError, "pilot_samples must be at least 2");
    if (c.max_level < 1) throw Error(ErrorKind::ConfigError, "max_level must be at least 1");
    if (!(c.base.h0 > 0.0) || !(c.base.k0 > 0.0)) throw Error(ErrorKind::ConfigError, "h0 and k0 must be positive");
    if (!(c.r > 0.0)) throw Error(ErrorKind::ConfigError, "r must be positive");
    if (!(c.theta > 0.0 && c.theta < 1.0)) throw Error(ErrorKind::ConfigError, "theta must lie in (0,1)");
    if (!(c.max_work > 0.0)) throw Error(ErrorKind::ConfigError, "max_work must be positive");
    if (!(c.error_constant > 0.0)) throw Error(ErrorKind::ConfigError, "error_constant must be positive");
    try {
        build_grid(c.model, c.base, 0, 0);
    } catch (const Error& e) {
        throw Error(ErrorKind::ConfigError, std::string("base grid: ") + e.what());
    }
    return c;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::ConfigError, "cannot read " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::string serialize_config(const ExperimentConfig& c) {
    json root;
    root["schema_version"] = c.schema_version;
    root["model"] = {{"mu", c.model.mu}, {"rho", c.model.rho}, {"T", c.model.T}, {"x0", c.model.x0}};
    root["domain"] = {{"x_min", c.base.x_min}, {"x_max", c.base.x_max}};
    root["base"] = {{"h0", c.base.h0}};
    if (c.auto_k0) {
        root["base"]["k0"] = "auto";
    } else {
        root["base"]["k0"] = c.base.k0;
    }
    root["scheme"] = std::string(to_string(c.scheme));
    root["functional"] = std::string(to_string(c.functional));
    root["method"] = std::string(to_string(c.method));
    root["epsilon"] = c.epsilon;
    if (c.alpha) {
        root["alpha"] = *c.alpha;
    } else {
        root["alpha"] = "auto";
    }
    root["seed"] = c.seed;
    root["samples"] = c.samples;
    root["pilot_samples"] = c.pilot_samples;
    root["max_level"] = c.max_level;
    root["max_work"] = c.max_work;
    root["r"] = c.r;
    root["theta"] = c.theta;
    root["error_constant"] = c.error_constant;
    root["printed_exponent"] = c.printed_exponent;
    root["theta_rhos"] = c.theta_rhos;
    root["output_dir"] = c.output_dir;
    return root.dump(2) + "\n";
}

}  // namespace zakai

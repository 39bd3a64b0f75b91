#include "levylab/config.hpp"

#include "levylab/presets.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace levylab {

namespace {

std::string join_errors(const std::vector<std::string>& errors) {
    std::string out = "invalid configuration";
    for (const auto& e : errors) out += "\n  " + e;
    return out;
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

const std::map<std::string, std::set<std::string>>& schema() {
    static const std::map<std::string, std::set<std::string>> keys{
        {"model", {"preset", "dim", "drift", "B", "a", "beta", "confinement", "coupling", "A1", "A2", "x0",
                   "drift_order"}},
        {"levy", {"preset", "dim", "alpha", "kappa", "scale", "amplitude", "envelope", "delta", "big_jump_rate",
                  "big_jump_law", "gaussian_substitute", "rel_tol", "acceptance_floor"}},
        {"mc", {"samples", "step", "horizon", "seed", "threads", "bandwidth", "bandwidth_scale", "cutoff_level",
                "ridge", "antithetic"}},
        {"noise", {"orey_eps", "moment_p", "paths", "write_sample"}},
        {"simulate", {"paths", "jacobians"}},
        {"brackets", {"order", "tol", "points"}},
        {"con", {"lo", "hi", "points"}},
        {"ibp", {"function", "index", "param", "center", "perturbation", "direction", "vector"}},
        {"girsanov", {"function", "index", "param", "center", "perturbation", "direction", "vector", "eps"}},
        {"gradient", {"function", "index", "param", "center", "coordinate", "side", "fd_step"}},
        {"density", {"lo", "hi", "points"}},
        {"smallball", {"directions", "eps", "moment_p"}},
        {"decompose", {"function", "index", "param", "center"}},
        {"output", {"dir"}},
    };
    return keys;
}

struct Entry {
    std::string value;
    int line = 0;
};

class Reader {
public:
    explicit Reader(const std::string& text) { scan(text); }

    std::vector<std::string> errors;

    bool has(const std::string& section, const std::string& key) const {
        auto s = entries_.find(section);
        return s != entries_.end() && s->second.count(key) > 0;
    }

    int line_of(const std::string& section, const std::string& key) const {
        return entries_.at(section).at(key).line;
    }

    void error(const std::string& section, const std::string& key, const std::string& message) {
        if (has(section, key))
            errors.push_back("line " + std::to_string(line_of(section, key)) + ": [" + section + "] " + key + ": " +
                             message);
        else
            errors.push_back("[" + section + "] " + key + ": " + message);
    }

    bool text(const std::string& section, const std::string& key, std::string& out) {
        if (!has(section, key)) return false;
        out = entries_.at(section).at(key).value;
        return true;
    }

    bool number(const std::string& section, const std::string& key, double& out) {
        std::string v;
        if (!text(section, key, v)) return false;
        double x = 0.0;
        if (!parse_double(v, x)) {
            error(section, key, "expected a number, got '" + v + "'");
            return false;
        }
        out = x;
        return true;
    }

    bool integer(const std::string& section, const std::string& key, long long& out) {
        std::string v;
        if (!text(section, key, v)) return false;
        long long x = 0;
        const auto res = std::from_chars(v.data(), v.data() + v.size(), x);
        if (res.ec != std::errc() || res.ptr != v.data() + v.size()) {
            error(section, key, "expected an integer, got '" + v + "'");
            return false;
        }
        out = x;
        return true;
    }

    template <class I>
    bool integer_in(const std::string& section, const std::string& key, I& out, long long lo, long long hi) {
        long long x = 0;
        if (!integer(section, key, x)) return false;
        if (x < lo || x > hi) {
            error(section, key, "must lie in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
            return false;
        }
        out = static_cast<I>(x);
        return true;
    }

    bool positive(const std::string& section, const std::string& key, double& out) {
        double x = 0.0;
        if (!number(section, key, x)) return false;
        if (!(x > 0.0)) {
            error(section, key, "must be positive");
            return false;
        }
        out = x;
        return true;
    }

    bool boolean(const std::string& section, const std::string& key, bool& out) {
        std::string v;
        if (!text(section, key, v)) return false;
        if (v == "true" || v == "1" || v == "yes" || v == "on") {
            out = true;
        } else if (v == "false" || v == "0" || v == "no" || v == "off") {
            out = false;
        } else {
            error(section, key, "expected true or false, got '" + v + "'");
            return false;
        }
        return true;
    }

    bool array(const std::string& section, const std::string& key, std::vector<double>& out) {
        std::string v;
        if (!text(section, key, v)) return false;
        std::replace_if(v.begin(), v.end(), [](char c) { return c == ',' || c == ';' || c == '[' || c == ']'; }, ' ');
        std::istringstream in(v);
        std::vector<double> values;
        std::string token;
        while (in >> token) {
            double x = 0.0;
            if (!parse_double(token, x)) {
                error(section, key, "expected numbers, got '" + token + "'");
                return false;
            }
            values.push_back(x);
        }
        if (values.empty()) {
            error(section, key, "empty array");
            return false;
        }
        out = std::move(values);
        return true;
    }

private:
    std::map<std::string, std::map<std::string, Entry>> entries_;

    static bool parse_double(const std::string& v, double& out) {
        if (v == "pi") {
            out = 3.14159265358979323846;
            return true;
        }
        const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
        return res.ec == std::errc() && res.ptr == v.data() + v.size();
    }

    void scan(const std::string& text) {
        std::istringstream in(text);
        std::string raw;
        std::string section;
        int line = 0;
        while (std::getline(in, raw)) {
            ++line;
            const auto hash = raw.find('#');
            const std::string s = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
            if (s.empty()) continue;
            if (s.front() == '[') {
                if (s.back() != ']') {
                    errors.push_back("line " + std::to_string(line) + ": malformed section header");
                    section.clear();
                    continue;
                }
                section = trim(s.substr(1, s.size() - 2));
                if (!schema().count(section)) {
                    errors.push_back("line " + std::to_string(line) + ": unknown section [" + section + "]");
                    section = "?";
                }
                continue;
            }
            const auto eq = s.find('=');
            if (eq == std::string::npos) {
                errors.push_back("line " + std::to_string(line) + ": expected key = value");
                continue;
            }
            const std::string key = trim(s.substr(0, eq));
            const std::string value = trim(s.substr(eq + 1));
            if (section.empty()) {
                errors.push_back("line " + std::to_string(line) + ": key '" + key + "' outside a section");
                continue;
            }
            if (section == "?") continue;
            if (!schema().at(section).count(key)) {
                errors.push_back("line " + std::to_string(line) + ": unknown key '" + key + "' in [" + section + "]");
                continue;
            }
            auto& sec = entries_[section];
            if (auto it = sec.find(key); it != sec.end()) {
                errors.push_back("line " + std::to_string(line) + ": duplicate key '" + key + "' in [" + section +
                                 "] (first defined on line " + std::to_string(it->second.line) + ")");
                continue;
            }
            sec[key] = Entry{value, line};
        }
    }
};

Eigen::MatrixXd square(Reader& r, const std::string& section, const std::string& key, const std::vector<double>& v,
                       int dim) {
    if (static_cast<int>(v.size()) != dim * dim) {
        r.error(section, key, "expected " + std::to_string(dim * dim) + " entries (row-major " + std::to_string(dim) +
                                  "x" + std::to_string(dim) + ")");
        return Eigen::MatrixXd::Zero(dim, dim);
    }
    Eigen::MatrixXd m(dim, dim);
    for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j) m(i, j) = v[static_cast<std::size_t>(i * dim + j)];
    return m;
}

void read_function(Reader& r, const std::string& section, FunctionChoice& f, int dim) {
    static const std::set<std::string> names{"constant", "coordinate", "square", "tanh", "bump", "halfspace", "gaussian"};
    if (r.text(section, "function", f.name) && !names.count(f.name)) r.error(section, "function", "unknown function '" + f.name + "'");
    r.integer_in(section, "index", f.index, 0, std::max(0, dim - 1));
    r.number(section, "param", f.param);
    if ((f.name == "bump" || f.name == "gaussian") && !(f.param > 0.0))
        r.error(section, "param", "radius of '" + f.name + "' must be positive");
    if (r.array(section, "center", f.center) && static_cast<int>(f.center.size()) != dim)
        r.error(section, "center", "expected " + std::to_string(dim) + " entries");
}

void read_perturbation(Reader& r, const std::string& section, PerturbationChoice& p, int dim) {
    if (r.text(section, "perturbation", p.kind) && p.kind != "canonical" && p.kind != "constant_h" &&
        p.kind != "zeta_direction")
        r.error(section, "perturbation", "unknown perturbation '" + p.kind + "'");
    r.integer_in(section, "direction", p.index, 0, std::max(0, dim - 1));
    const bool has_vector = r.array(section, "vector", p.vector);
    if (has_vector && static_cast<int>(p.vector.size()) != dim)
        r.error(section, "vector", "expected " + std::to_string(dim) + " entries");
    if (p.kind != "canonical" && !has_vector && !r.has(section, "vector"))
        r.error(section, "vector", "required for perturbation '" + p.kind + "'");
}

void read_model(Reader& r, ExperimentConfig& cfg) {
    std::string preset;
    int dim = 1;
    if (r.text("model", "preset", preset)) {
        try {
            const Preset p = make_preset(preset);
            cfg.model = p.model;
            cfg.x0 = p.x0;
            dim = p.model.dim();
        } catch (const ConfigurationError& e) {
            r.error("model", "preset", e.what());
            return;
        }
        if (r.has("model", "dim") || r.has("model", "drift"))
            r.error("model", r.has("model", "dim") ? "dim" : "drift", "cannot be combined with a preset");
    } else {
        const bool has_dim = r.integer_in("model", "dim", dim, 1, kMaxDim);
        if (!has_dim && !r.has("model", "dim")) r.error("model", "dim", "missing required key");
        if (!has_dim) return;
        std::string drift;
        if (!r.text("model", "drift", drift)) {
            r.error("model", "drift", "missing required key");
            drift = "zero";
        }
        cfg.model.name = drift;
        if (drift == "zero") {
            cfg.model.drift = Drift::zero(dim);
        } else if (drift == "linear") {
            std::vector<double> b;
            if (r.array("model", "B", b))
                cfg.model.drift = Drift::linear(square(r, "model", "B", b, dim));
            else if (!r.has("model", "B"))
                r.error("model", "B", "missing required key for drift 'linear'");
        } else if (drift == "sin") {
            double a = 1.0;
            r.number("model", "a", a);
            cfg.model.drift = Drift::sin(dim, a);
        } else if (drift == "gradient_potential") {
            double s = 1.0, c = 0.0;
            r.number("model", "confinement", s);
            r.number("model", "coupling", c);
            cfg.model.drift = Drift::gradient_potential(dim, s, c);
        } else if (drift == "kolmogorov") {
            if (dim != 2) r.error("model", "drift", "kolmogorov requires dim = 2");
            double beta = 1.0;
            r.number("model", "beta", beta);
            if (dim == 2) cfg.model.drift = Drift::kolmogorov(beta);
        } else {
            r.error("model", "drift", "unknown drift '" + drift + "'");
        }
        for (const char* key : {"A1", "A2"})
            if (!r.has("model", key)) r.error("model", key, "missing required key");
        cfg.model.A1 = Eigen::MatrixXd::Zero(dim, dim);
        cfg.model.A2 = Eigen::MatrixXd::Zero(dim, dim);
        cfg.x0 = Vec::Zero(dim);
    }
    std::vector<double> v;
    if (r.array("model", "A1", v)) cfg.model.A1 = square(r, "model", "A1", v, dim);
    if (r.array("model", "A2", v)) cfg.model.A2 = square(r, "model", "A2", v, dim);
    if (r.array("model", "x0", v)) {
        if (static_cast<int>(v.size()) != dim)
            r.error("model", "x0", "expected " + std::to_string(dim) + " entries");
        else
            cfg.x0 = Eigen::Map<const Eigen::VectorXd>(v.data(), dim);
    }
    int order = 0;
    if (r.integer_in("model", "drift_order", order, 0, 1 << 20)) cfg.model.drift.set_declared_order(order);
}

void read_levy(Reader& r, ExperimentConfig& cfg) {
    const int dim = cfg.model.dim();
    LevyMeasureSpec& spec = cfg.levy;
    std::string preset;
    if (r.text("levy", "preset", preset)) {
        try {
            spec = make_preset(preset).levy;
        } catch (const ConfigurationError& e) {
            r.error("levy", "preset", e.what());
        }
    } else {
        spec = LevyMeasureSpec{};
        spec.dim = dim;
    }
    int ldim = spec.dim;
    if (r.integer_in("levy", "dim", ldim, 1, kMaxDim)) spec.dim = ldim;
    if (spec.dim != dim) r.error("levy", "dim", "must equal the model dimension " + std::to_string(dim));
    double alpha = spec.alpha;
    if (r.number("levy", "alpha", alpha)) {
        if (!(alpha > 0.0 && alpha < 2.0))
            r.error("levy", "alpha", "alpha must lie in (0,2)");
        else
            spec.alpha = alpha;
    }
    std::string kappa = "pure_power";
    r.text("levy", "kappa", kappa);
    if (kappa == "pure_power") {
        double scale = 1.0;
        if (r.positive("levy", "scale", scale)) {
            spec.amplitude = Expression(scale);
            spec.envelope = scale;
        }
        if (r.has("levy", "amplitude")) r.error("levy", "amplitude", "only used with kappa = stable_like");
    } else if (kappa == "stable_like") {
        std::string expr;
        if (r.text("levy", "amplitude", expr)) {
            try {
                spec.amplitude = Expression::parse(expr, spec.dim);
            } catch (const std::exception& e) {
                r.error("levy", "amplitude", e.what());
            }
        } else {
            r.error("levy", "amplitude", "missing required key for kappa = stable_like");
        }
        if (!r.positive("levy", "envelope", spec.envelope) && !r.has("levy", "envelope"))
            r.error("levy", "envelope", "missing required key for kappa = stable_like");
    } else {
        r.error("levy", "kappa", "unknown kappa preset '" + kappa + "' (pure_power, stable_like)");
    }
    r.positive("levy", "delta", spec.inner_cutoff);
    if (r.number("levy", "big_jump_rate", spec.big_jump_rate) && spec.big_jump_rate < 0.0)
        r.error("levy", "big_jump_rate", "must be nonnegative");
    std::vector<double> law;
    if (r.array("levy", "big_jump_law", law)) {
        if (law.size() != 2 || !(law[0] >= 1.0) || !(law[1] > law[0]))
            r.error("levy", "big_jump_law", "expected 'r_min, r_max' with 1 <= r_min < r_max");
        else
            spec.big_jump_law = BigJumpLaw{law[0], law[1]};
    }
    r.boolean("levy", "gaussian_substitute", spec.gaussian_substitute);
    r.positive("levy", "rel_tol", spec.quadrature.rel_tol);
    r.positive("levy", "acceptance_floor", spec.acceptance_floor);
}

void read_mc(Reader& r, ExperimentConfig& cfg) {
    McConfig& mc = cfg.mc;
    r.integer_in("mc", "samples", mc.samples, 1, 1LL << 40);
    r.positive("mc", "step", mc.step);
    r.positive("mc", "horizon", mc.horizon);
    long long seed = 0;
    if (r.integer("mc", "seed", seed)) {
        if (seed < 0)
            r.error("mc", "seed", "must be nonnegative");
        else
            mc.seed = static_cast<std::uint64_t>(seed);
    }
    r.integer_in("mc", "threads", mc.threads, 1, 1024);
    if (r.array("mc", "bandwidth", mc.bandwidth) &&
        std::any_of(mc.bandwidth.begin(), mc.bandwidth.end(), [](double h) { return !(h > 0.0); }))
        r.error("mc", "bandwidth", "must be positive");
    r.positive("mc", "bandwidth_scale", mc.bandwidth_scale);
    r.integer_in("mc", "cutoff_level", mc.cutoff_level, 1, 1LL << 30);
    r.positive("mc", "ridge", mc.ridge);
    r.boolean("mc", "antithetic", mc.antithetic);
    if (mc.antithetic && mc.samples % 2 != 0) r.error("mc", "samples", "must be even with antithetic sampling");
}

void read_commands(Reader& r, ExperimentConfig& cfg) {
    const int dim = cfg.model.dim();
    auto decreasing_positive = [&](const std::string& section, const std::string& key, std::vector<double>& v) {
        if (!r.array(section, key, v)) return;
        for (std::size_t k = 0; k < v.size(); ++k) {
            if (!(v[k] > 0.0) || (k > 0 && !(v[k] < v[k - 1]))) {
                r.error(section, key, "must be positive and strictly decreasing");
                return;
            }
        }
    };
    decreasing_positive("noise", "orey_eps", cfg.noise.orey_eps);
    r.positive("noise", "moment_p", cfg.noise.moment_p);
    r.integer_in("noise", "paths", cfg.noise.paths, 1, 1 << 24);
    r.boolean("noise", "write_sample", cfg.noise.write_sample);

    r.integer_in("simulate", "paths", cfg.simulate.paths, 1, 1 << 20);
    r.boolean("simulate", "jacobians", cfg.simulate.jacobians);

    r.integer_in("brackets", "order", cfg.brackets.order, 0, 16);
    r.positive("brackets", "tol", cfg.brackets.tol);
    if (r.array("brackets", "points", cfg.brackets.points) && cfg.brackets.points.size() % static_cast<std::size_t>(dim))
        r.error("brackets", "points", "length must be a multiple of dim");

    r.number("con", "lo", cfg.con.lo);
    r.number("con", "hi", cfg.con.hi);
    r.integer_in("con", "points", cfg.con.points, 1, 1000);
    if (!(cfg.con.hi >= cfg.con.lo)) r.error("con", "hi", "must not be below lo");

    read_function(r, "ibp", cfg.ibp.function, dim);
    read_perturbation(r, "ibp", cfg.ibp.perturbation, dim);
    read_function(r, "girsanov", cfg.girsanov.function, dim);
    read_perturbation(r, "girsanov", cfg.girsanov.perturbation, dim);
    decreasing_positive("girsanov", "eps", cfg.girsanov.eps);

    read_function(r, "gradient", cfg.gradient.function, dim);
    r.integer_in("gradient", "coordinate", cfg.gradient.coordinate, 0, dim - 1);
    if (r.text("gradient", "side", cfg.gradient.side) && cfg.gradient.side != "initial" &&
        cfg.gradient.side != "terminal")
        r.error("gradient", "side", "expected initial or terminal");
    r.positive("gradient", "fd_step", cfg.gradient.fd_step);

    for (const char* key : {"lo", "hi"}) {
        auto& v = std::string(key) == "lo" ? cfg.density.lo : cfg.density.hi;
        if (r.array("density", key, v) && static_cast<int>(v.size()) != dim)
            r.error("density", key, "expected " + std::to_string(dim) + " entries");
    }
    r.integer_in("density", "points", cfg.density.points, 2, 100000);
    if (cfg.density.lo.empty()) cfg.density.lo.assign(static_cast<std::size_t>(dim), -3.0);
    if (cfg.density.hi.empty()) cfg.density.hi.assign(static_cast<std::size_t>(dim), 3.0);

    r.integer_in("smallball", "directions", cfg.smallball.directions, 1, 1 << 20);
    decreasing_positive("smallball", "eps", cfg.smallball.eps);
    if (r.number("smallball", "moment_p", cfg.smallball.moment_p) && !(cfg.smallball.moment_p >= 1.0))
        r.error("smallball", "moment_p", "must be at least 1");

    read_function(r, "decompose", cfg.decompose.function, dim);

    r.text("output", "dir", cfg.output_dir);
}

}  // namespace

ConfigError::ConfigError(std::vector<std::string> errors) : std::runtime_error(join_errors(errors)), errors_(std::move(errors)) {}

ExperimentConfig parse_config(const std::string& text) {
    Reader r(text);
    ExperimentConfig cfg;
    cfg.text = text;
    read_model(r, cfg);
    read_levy(r, cfg);
    read_mc(r, cfg);
    read_commands(r, cfg);
    if (!r.errors.empty()) throw ConfigError(r.errors);
    try {
        validate(cfg.model);
        cfg.levy.prepare();
        validate(cfg.levy);
        validate(cfg.mc);
    } catch (const std::exception& e) {
        throw ConfigError({e.what()});
    }
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError({"cannot open config file '" + path + "'"});
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

TestFunction resolve_function(const FunctionChoice& choice, int dim) {
    Vec center = Vec::Zero(dim);
    if (static_cast<int>(choice.center.size()) == dim) center = Eigen::Map<const Eigen::VectorXd>(choice.center.data(), dim);
    return make_test_function(choice.name, dim, choice.index, choice.param, center);
}

Perturbation resolve_perturbation(const PerturbationChoice& choice, int dim) {
    if (choice.kind == "canonical") return Perturbation::canonical(choice.index);
    Vec v = Vec::Zero(dim);
    if (static_cast<int>(choice.vector.size()) == dim) v = Eigen::Map<const Eigen::VectorXd>(choice.vector.data(), dim);
    if (choice.kind == "constant_h") return Perturbation::constant_h(v);
    return Perturbation::zeta_direction(v);
}

}  // namespace levylab

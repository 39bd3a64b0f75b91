#include "levylab/runner.hpp"

#include "levylab/estimators.hpp"
#include "levylab/hormander.hpp"
#include "levylab/rng.hpp"

#include <json.hpp>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <sstream>

namespace levylab {

namespace {

using json = nlohmann::ordered_json;

/// Comma-separated row with round-trip precision.
class Csv {
public:
    explicit Csv(const std::vector<std::string>& header) {
        out_ << std::setprecision(17);
        for (std::size_t i = 0; i < header.size(); ++i) out_ << (i ? "," : "") << header[i];
        out_ << '\n';
    }

    template <class... Ts>
    void row(const Ts&... values) {
        bool first = true;
        ((out_ << (first ? "" : ",") << values, first = false), ...);
        out_ << '\n';
    }

    void cells(const std::vector<double>& values, bool end_row = true) {
        for (std::size_t i = 0; i < values.size(); ++i) out_ << (i ? "," : "") << values[i];
        if (end_row) out_ << '\n';
    }

    std::ostream& stream() { return out_; }
    std::string str() const { return out_.str(); }

private:
    std::ostringstream out_;
};

std::vector<std::string> indexed(const std::string& prefix, int d) {
    std::vector<std::string> out;
    for (int i = 1; i <= d; ++i) out.push_back(prefix + std::to_string(i));
    return out;
}

std::vector<std::string> concat(std::vector<std::string> a, const std::vector<std::string>& b) {
    a.insert(a.end(), b.begin(), b.end());
    return a;
}

std::vector<double> as_vector(const Vec& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

json estimate_json(const Estimate& e) { return json{{"mean", e.mean}, {"stderr", e.std_error}, {"samples", e.samples}}; }

std::string config_hash(const std::string& text) {
    std::ostringstream ss;
    ss << std::hex << std::setw(16) << std::setfill('0') << fnv1a(text);
    return ss.str();
}

struct Context {
    const ExperimentConfig& cfg;
    McConfig mc;
    std::filesystem::path dir;
    json estimates = json::object();
};

std::string noise_check(Context& c) {
    Csv csv({"quantity", "eps", "value", "error"});
    const auto diag = validate(c.cfg.levy, derive_seed(c.mc.seed, "noise-check", 0));
    csv.row("band_intensity", 0, diag.band_intensity, 0);
    csv.row("acceptance_rate", 0, diag.acceptance_rate, 0);
    csv.row("grad_log_bound", 0, diag.grad_log_bound, 0);
    csv.row("symmetry_defect", 0, diag.max_symmetry_defect, 0);
    for (const auto& row : orey_constant(c.cfg.levy, c.cfg.noise.orey_eps)) csv.row("orey", row.eps, row.value, row.error);
    for (const auto& row : moment_lowerbound_check(c.cfg.levy, c.cfg.noise.moment_p, c.cfg.noise.orey_eps))
        csv.row("moment_ratio", row.eps, row.ratio, row.error);
    int bad = 0;
    std::size_t small = 0, big = 0;
    for (int k = 0; k < c.cfg.noise.paths; ++k) {
        const NoiseRealization noise = sample_path_noise(c.cfg.levy, c.mc, static_cast<std::size_t>(k));
        if (!check_noise_invariants(noise)) ++bad;
        small += noise.small_jumps.size();
        big += noise.big_jumps.size();
        if (k == 0 && c.cfg.noise.write_sample) {
            std::ofstream out(c.dir / "noise_sample.txt");
            write_noise(out, noise);
        }
    }
    const double n = static_cast<double>(c.cfg.noise.paths);
    csv.row("mean_small_jumps", 0, static_cast<double>(small) / n, 0);
    csv.row("mean_big_jumps", 0, static_cast<double>(big) / n, 0);
    csv.row("invariant_failures", 0, bad, 0);
    c.estimates["band_intensity"] = diag.band_intensity;
    c.estimates["acceptance_rate"] = diag.acceptance_rate;
    c.estimates["invariant_failures"] = bad;
    if (bad > 0) throw NumericalError("noise invariants failed on " + std::to_string(bad) + " paths");
    return csv.str();
}

std::string simulate_cmd(Context& c) {
    const int d = c.cfg.model.dim();
    std::vector<std::string> header = concat({"path", "t"}, indexed("x", d));
    if (c.cfg.simulate.jacobians) {
        for (const char* m : {"J", "K"})
            for (int i = 1; i <= d; ++i)
                for (int j = 1; j <= d; ++j) header.push_back(std::string(m) + std::to_string(i) + std::to_string(j));
    }
    Csv csv(header);
    double worst = 0.0;
    for (int p = 0; p < c.cfg.simulate.paths; ++p) {
        auto noise = std::make_shared<const NoiseRealization>(sample_path_noise(c.cfg.levy, c.mc, static_cast<std::size_t>(p)));
        PathRealization path = c.cfg.simulate.jacobians ? simulate(c.cfg.model, c.cfg.x0, noise)
                                                         : integrate(c.cfg.model, c.cfg.x0, noise);
        for (int k = 0; k < path.points(); ++k) {
            csv.stream() << p << ',' << path.grid[static_cast<std::size_t>(k)] << ',';
            std::vector<double> cells = as_vector(path.state(k));
            if (c.cfg.simulate.jacobians) {
                const Mat J = path.J(k), K = path.K(k);
                for (const Mat* m : {&J, &K})
                    for (int i = 0; i < d; ++i)
                        for (int j = 0; j < d; ++j) cells.push_back((*m)(i, j));
                worst = std::max(worst, (J * K - Mat::Identity(d, d)).norm());
            }
            csv.cells(cells);
        }
    }
    c.estimates["paths"] = c.cfg.simulate.paths;
    if (c.cfg.simulate.jacobians) c.estimates["max_JK_minus_I"] = worst;
    return csv.str();
}

std::vector<Vec> bracket_points(const ExperimentConfig& cfg) {
    const int d = cfg.model.dim();
    std::vector<Vec> points;
    if (cfg.brackets.points.empty()) return {cfg.x0};
    for (std::size_t k = 0; k + static_cast<std::size_t>(d) <= cfg.brackets.points.size(); k += static_cast<std::size_t>(d))
        points.push_back(Eigen::Map<const Eigen::VectorXd>(cfg.brackets.points.data() + k, d));
    return points;
}

std::string brackets_cmd(Context& c) {
    const int d = c.cfg.model.dim();
    Csv csv(concat(indexed("x", d), {"n", "rank", "sigma_min", "lambda_min"}));
    int worst_saturation = 0;
    bool all_saturated = true;
    for (const Vec& x : bracket_points(c.cfg)) {
        const double lambda = first_order_matrix(c.cfg.model, x).selfadjointView<Eigen::Lower>().eigenvalues().minCoeff();
        int saturated = -1;
        for (int n = 0; n <= c.cfg.brackets.order; ++n) {
            const RankResult rank = rank_condition(brackets(c.cfg.model, x, n), c.cfg.brackets.tol);
            if (rank.pass && saturated < 0) saturated = n;
            csv.cells(as_vector(x), false);
            csv.row("", n, rank.rank, rank.sigma_min, lambda);
        }
        all_saturated = all_saturated && saturated >= 0;
        worst_saturation = std::max(worst_saturation, saturated);
    }
    c.estimates["saturation_order"] = all_saturated ? worst_saturation : -1;
    return csv.str();
}

std::string con_cmd(Context& c) {
    const int d = c.cfg.model.dim();
    const auto axis = linspace(c.cfg.con.lo, c.cfg.con.hi, c.cfg.con.points);
    KdeGrid grid;
    grid.axes.assign(static_cast<std::size_t>(d), axis);
    std::vector<Vec> points;
    for (std::size_t g = 0; g < grid.size(); ++g) points.push_back(grid.point(g));
    const UniformResult res = uniform_first_order(c.cfg.model, points, derive_seed(c.mc.seed, "con-check", 0));
    Csv csv(concat(indexed("x", d), {"lambda_min", "lambda_min_search"}));
    for (std::size_t k = 0; k < points.size(); ++k) {
        csv.cells(as_vector(points[k]), false);
        csv.row("", res.lambda_min[k], res.lambda_min_search[k]);
    }
    c.estimates["c2"] = res.c2;
    return csv.str();
}

std::string ibp_cmd(Context& c) {
    const int d = c.cfg.model.dim();
    const IbpResult res = ibp_residual(c.cfg.model, c.cfg.levy, resolve_function(c.cfg.ibp.function, d),
                                       resolve_perturbation(c.cfg.ibp.perturbation, d), c.cfg.x0, c.mc);
    Csv csv({"N", "residual", "residual_stderr", "derivative", "derivative_stderr", "weighted", "weighted_stderr",
             "max_mismatch"});
    csv.row(res.residual.samples, res.residual.mean, res.residual.std_error, res.derivative.mean,
            res.derivative.std_error, res.weighted.mean, res.weighted.std_error, res.max_mismatch);
    c.estimates["residual"] = estimate_json(res.residual);
    c.estimates["derivative"] = estimate_json(res.derivative);
    c.estimates["weighted"] = estimate_json(res.weighted);
    return csv.str();
}

std::string girsanov_cmd(Context& c) {
    const int d = c.cfg.model.dim();
    const auto rows = girsanov_limit_check(c.cfg.model, c.cfg.levy, resolve_function(c.cfg.girsanov.function, d),
                                           resolve_perturbation(c.cfg.girsanov.perturbation, d), c.cfg.x0,
                                           c.cfg.girsanov.eps, c.mc);
    Csv csv({"N", "eps", "weight", "weight_stderr", "reweighted", "reweighted_stderr", "plain", "plain_stderr", "l2",
             "l2_stderr"});
    json list = json::array();
    for (const auto& r : rows) {
        csv.row(r.weight.samples, r.eps, r.weight.mean, r.weight.std_error, r.reweighted.mean, r.reweighted.std_error,
                r.plain.mean, r.plain.std_error, r.l2_distance.mean, r.l2_distance.std_error);
        list.push_back(json{{"eps", r.eps},
                            {"weight", estimate_json(r.weight)},
                            {"reweighted", estimate_json(r.reweighted)},
                            {"l2", estimate_json(r.l2_distance)}});
    }
    c.estimates["rows"] = list;
    return csv.str();
}

std::string gradient_cmd(Context& c) {
    const int d = c.cfg.model.dim();
    const auto& g = c.cfg.gradient;
    const TestFunction f = resolve_function(g.function, d);
    const GradientSide side = g.side == "terminal" ? GradientSide::Terminal : GradientSide::Initial;
    const GradientResult ibp = ibp_gradient(c.cfg.model, c.cfg.levy, f, c.cfg.x0, c.mc, g.coordinate, side);
    const Estimate fd = finite_difference_gradient(c.cfg.model, c.cfg.levy, f, c.cfg.x0, c.mc, g.coordinate, g.fd_step);
    const double se = std::hypot(ibp.estimate.std_error, fd.std_error);
    Csv csv({"N", "coordinate", "side", "ibp", "ibp_stderr", "fd", "fd_stderr", "difference", "combined_stderr",
             "conditioning_warnings", "mean_cutoff"});
    csv.row(ibp.estimate.samples, g.coordinate, g.side, ibp.estimate.mean, ibp.estimate.std_error, fd.mean,
            fd.std_error, ibp.estimate.mean - fd.mean, se, ibp.conditioning_warnings, ibp.mean_cutoff);
    c.estimates["ibp"] = estimate_json(ibp.estimate);
    c.estimates["fd"] = estimate_json(fd);
    c.estimates["conditioning_warnings"] = ibp.conditioning_warnings;
    return csv.str();
}

std::string density_cmd(Context& c) {
    const int d = c.cfg.model.dim();
    KdeGrid grid;
    for (int i = 0; i < d; ++i)
        grid.axes.push_back(linspace(c.cfg.density.lo[static_cast<std::size_t>(i)],
                                     c.cfg.density.hi[static_cast<std::size_t>(i)], c.cfg.density.points));
    const KdeResult kde = kde_density(c.cfg.model, c.cfg.levy, c.cfg.x0, c.mc, grid);
    const auto B = c.cfg.model.drift.linear_matrix();
    const bool exact = B && c.cfg.model.A2.isZero() && (c.cfg.model.A1 * c.cfg.model.A1.transpose()).determinant() > 0.0;
    Vec mean;
    Eigen::MatrixXd cov;
    if (exact) gaussian_moments(*B, c.cfg.model.A1, c.cfg.x0, c.mc.horizon, mean, cov);
    std::vector<std::string> header = concat(indexed("y", d), {"density", "stderr"});
    if (exact) header.push_back("exact");
    Csv csv(header);
    double sup = 0.0, peak = 0.0;
    for (std::size_t g = 0; g < grid.size(); ++g) {
        const Vec y = grid.point(g);
        std::vector<double> cells = as_vector(y);
        cells.push_back(kde.values[g]);
        cells.push_back(kde.cell_stderr[g]);
        if (exact) {
            const double rho = gaussian_density(mean, cov, y);
            cells.push_back(rho);
            sup = std::max(sup, std::abs(rho - kde.values[g]));
            peak = std::max(peak, rho);
        }
        csv.cells(cells);
    }
    c.estimates["mass"] = trapezoid_mass(kde.values, grid);
    c.estimates["bandwidth"] = kde.bandwidth;
    if (exact) c.estimates["sup_error_over_peak"] = sup / peak;
    return csv.str();
}

std::string smallball_cmd(Context& c) {
    const auto rows = smallball_curve(c.cfg.model, c.cfg.levy, c.cfg.x0, c.cfg.smallball.directions,
                                      c.cfg.smallball.eps, c.mc);
    Csv csv({"eps", "probability", "argmax"});
    for (const auto& r : rows) csv.row(r.eps, r.probability, r.argmax);
    const InverseMoment inv = inverse_moment_probe(c.cfg.model, c.cfg.levy, c.cfg.x0, c.cfg.smallball.moment_p, c.mc);
    c.estimates["smallest_eps_probability"] = rows.empty() ? 0.0 : rows.back().probability;
    c.estimates["inverse_moment"] = estimate_json(inv.estimate);
    c.estimates["clipped_fraction"] = inv.clipped_fraction;
    c.estimates["clipping_flagged"] = inv.flagged;
    return csv.str();
}

std::string decompose_cmd(Context& c) {
    const Decomposition res = semigroup_decomposition(
        c.cfg.model, c.cfg.levy, resolve_function(c.cfg.decompose.function, c.cfg.model.dim()), c.cfg.x0, c.mc);
    Csv csv({"direct", "direct_stderr", "conditioned", "conditioned_stderr", "zero_jump_weight", "strata"});
    csv.row(res.direct.mean, res.direct.std_error, res.conditioned.mean, res.conditioned.std_error,
            res.zero_jump_weight, res.strata);
    c.estimates["direct"] = estimate_json(res.direct);
    c.estimates["conditioned"] = estimate_json(res.conditioned);
    c.estimates["zero_jump_weight"] = res.zero_jump_weight;
    return csv.str();
}

using Command = std::function<std::string(Context&)>;

const std::vector<std::pair<std::string, Command>>& commands() {
    static const std::vector<std::pair<std::string, Command>> table{
        {"noise-check", noise_check}, {"simulate", simulate_cmd}, {"brackets", brackets_cmd},
        {"con-check", con_cmd},       {"ibp", ibp_cmd},           {"girsanov", girsanov_cmd},
        {"gradient", gradient_cmd},   {"density", density_cmd},   {"smallball", smallball_cmd},
        {"decompose", decompose_cmd},
    };
    return table;
}

void append_record(const std::filesystem::path& dir, const json& record) {
    std::ofstream out(dir / "runs.jsonl", std::ios::app);
    out << record.dump() << '\n';
}

}  // namespace

std::vector<std::string> subcommand_names() {
    std::vector<std::string> names;
    for (const auto& [name, fn] : commands()) names.push_back(name);
    return names;
}

std::string resolve_output_dir(const ExperimentConfig& cfg, const RunOverrides& overrides) {
    if (overrides.out) return *overrides.out;
    if (const char* env = std::getenv("LEVYLAB_OUT"); env && *env) return env;
    if (!cfg.output_dir.empty()) return cfg.output_dir;
    return ".";
}

void write_error_record(const std::string& out_dir, const std::string& subcommand, const std::string& message) {
    std::filesystem::create_directories(out_dir);
    append_record(out_dir, json{{"subcommand", subcommand}, {"version", kVersion}, {"status", "error"}, {"error", message}});
}

int run(const ExperimentConfig& cfg, const std::string& subcommand, const RunOverrides& overrides) {
    const std::filesystem::path dir = resolve_output_dir(cfg, overrides);
    std::filesystem::create_directories(dir);
    Context ctx{cfg, cfg.mc, dir};
    if (overrides.seed) ctx.mc.seed = *overrides.seed;
    if (overrides.threads) ctx.mc.threads = *overrides.threads;
    ctx.mc.stream = subcommand;

    json record{{"subcommand", subcommand},
                {"config_hash", config_hash(cfg.text)},
                {"seed", ctx.mc.seed},
                {"seed_override", overrides.seed.has_value()},
                {"version", kVersion},
                {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                              std::to_string(EIGEN_MINOR_VERSION)},
                {"threads", ctx.mc.threads},
                {"samples", ctx.mc.samples},
                {"step", ctx.mc.step},
                {"horizon", ctx.mc.horizon}};
    const auto start = std::chrono::steady_clock::now();
    int status = 0;
    try {
        auto it = std::find_if(commands().begin(), commands().end(), [&](const auto& e) { return e.first == subcommand; });
        if (it == commands().end()) throw ConfigurationError("unknown subcommand '" + subcommand + "'");
        const std::string csv = it->second(ctx);
        std::ofstream out(dir / (subcommand + ".csv"), std::ios::binary);
        out << csv;
        record["status"] = "ok";
        record["output"] = subcommand + ".csv";
        record["estimates"] = ctx.estimates;
    } catch (const std::exception& e) {
        status = 1;
        record["status"] = "error";
        record["error"] = e.what();
    }
    record["wall_time_s"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    append_record(dir, record);
    return status;
}

}  // namespace levylab

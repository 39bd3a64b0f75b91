#include "levylab/estimators.hpp"

#include "levylab/parallel.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <numbers>

namespace levylab {

Estimate mc_expectation(const ModelSpec& model, const LevyMeasureSpec& spec, const TestFunction& f, const Vec& x,
                        const McConfig& cfg) {
    validate(cfg);
    const auto values = parallel_map(cfg.samples, cfg.threads, [&](std::size_t i) {
        const NoiseRealization noise = sample_path_noise(spec, cfg, i);
        return f.value(integrate_endpoint(model, x, noise));
    });
    return summarize(values, cfg.antithetic);
}

Eigen::MatrixXd sample_endpoints(const ModelSpec& model, const LevyMeasureSpec& spec, const Vec& x,
                                 const McConfig& cfg) {
    validate(cfg);
    const auto ends = parallel_map(cfg.samples, cfg.threads, [&](std::size_t i) {
        const NoiseRealization noise = sample_path_noise(spec, cfg, i);
        return integrate_endpoint(model, x, noise);
    });
    Eigen::MatrixXd out(model.dim(), static_cast<Eigen::Index>(ends.size()));
    for (std::size_t i = 0; i < ends.size(); ++i) out.col(static_cast<Eigen::Index>(i)) = ends[i];
    return out;
}

std::vector<double> kde_bandwidth(const Eigen::MatrixXd& samples, const McConfig& cfg) {
    const int d = static_cast<int>(samples.rows());
    if (!cfg.bandwidth.empty()) {
        if (static_cast<int>(cfg.bandwidth.size()) == d) return cfg.bandwidth;
        if (cfg.bandwidth.size() == 1) return std::vector<double>(static_cast<std::size_t>(d), cfg.bandwidth[0]);
        throw ConfigurationError("bandwidth must have one entry or one per dimension");
    }
    const double n = static_cast<double>(samples.cols());
    const double factor = std::pow(n, -1.0 / (d + 4)) * cfg.bandwidth_scale;
    std::vector<double> h(static_cast<std::size_t>(d));
    for (int i = 0; i < d; ++i) {
        const double mean = samples.row(i).mean();
        const double var = (samples.row(i).array() - mean).square().sum() / std::max(1.0, n - 1.0);
        h[static_cast<std::size_t>(i)] = std::max(std::sqrt(var), 1e-12) * factor;
    }
    return h;
}

std::size_t KdeGrid::size() const {
    std::size_t n = 1;
    for (const auto& a : axes) n *= a.size();
    return n;
}

Vec KdeGrid::point(std::size_t index) const {
    const int d = static_cast<int>(axes.size());
    Vec p(d);
    for (int i = d - 1; i >= 0; --i) {
        const auto& a = axes[static_cast<std::size_t>(i)];
        p(i) = a[index % a.size()];
        index /= a.size();
    }
    return p;
}

std::vector<double> linspace(double lo, double hi, int points) {
    std::vector<double> out(static_cast<std::size_t>(points));
    for (int k = 0; k < points; ++k) out[static_cast<std::size_t>(k)] = points == 1 ? lo : lo + (hi - lo) * k / (points - 1);
    return out;
}

KdeResult kde_evaluate(const Eigen::MatrixXd& samples, const std::vector<double>& bandwidth, const KdeGrid& grid) {
    const int d = static_cast<int>(samples.rows());
    if (static_cast<int>(grid.axes.size()) != d) throw ConfigurationError("KDE grid dimension mismatch");
    const Eigen::Index n = samples.cols();
    KdeResult out;
    out.bandwidth = bandwidth;
    out.samples = static_cast<std::size_t>(n);
    const std::size_t G = grid.size();
    out.values.resize(G);
    out.cell_stderr.resize(G);
    double norm = 1.0;
    for (double h : bandwidth) norm *= h * std::sqrt(2.0 * std::numbers::pi);
    for (std::size_t g = 0; g < G; ++g) {
        const Vec y = grid.point(g);
        double sum = 0.0, sum2 = 0.0;
        for (Eigen::Index k = 0; k < n; ++k) {
            double q = 0.0;
            for (int i = 0; i < d; ++i) {
                const double u = (y(i) - samples(i, k)) / bandwidth[static_cast<std::size_t>(i)];
                q += u * u;
            }
            const double w = std::exp(-0.5 * q) / norm;
            sum += w;
            sum2 += w * w;
        }
        const double mean = sum / static_cast<double>(n);
        out.values[g] = mean;
        const double var = std::max(0.0, sum2 / static_cast<double>(n) - mean * mean);
        out.cell_stderr[g] = std::sqrt(var / static_cast<double>(n));
    }
    return out;
}

KdeResult kde_density(const ModelSpec& model, const LevyMeasureSpec& spec, const Vec& x, const McConfig& cfg,
                      const KdeGrid& grid) {
    const Eigen::MatrixXd samples = sample_endpoints(model, spec, x, cfg);
    return kde_evaluate(samples, kde_bandwidth(samples, cfg), grid);
}

double trapezoid_mass(const std::vector<double>& values, const KdeGrid& grid) {
    double total = 0.0;
    const std::size_t G = grid.size();
    const int d = static_cast<int>(grid.axes.size());
    for (std::size_t g = 0; g < G; ++g) {
        double w = 1.0;
        std::size_t index = g;
        for (int i = d - 1; i >= 0; --i) {
            const auto& a = grid.axes[static_cast<std::size_t>(i)];
            const std::size_t k = index % a.size();
            index /= a.size();
            double wi = 0.0;
            if (k > 0) wi += 0.5 * (a[k] - a[k - 1]);
            if (k + 1 < a.size()) wi += 0.5 * (a[k + 1] - a[k]);
            w *= wi;
        }
        total += w * values[g];
    }
    return total;
}

double phi_cutoff(const Mat& sigma, int n) {
    const double nf = static_cast<double>(n);
    const double a = nf + 1.0 - sigma.norm();
    const double b = nf * (nf + 1.0) * (sigma.determinant() - 1.0 / (nf + 1.0));
    return std::clamp(smooth_step(a) * smooth_step(b), 0.0, 1.0);
}

double phi_cutoff_derivative(const Mat& sigma, const Mat& dsigma, int n) {
    const double nf = static_cast<double>(n);
    const double norm = sigma.norm();
    const double det = sigma.determinant();
    const double a = nf + 1.0 - norm;
    const double b = nf * (nf + 1.0) * (det - 1.0 / (nf + 1.0));
    const double sa = smooth_step(a), sb = smooth_step(b);
    const double dsa = smooth_step_derivative(a), dsb = smooth_step_derivative(b);
    if (dsa == 0.0 && dsb == 0.0) return 0.0;
    double out = 0.0;
    if (dsa != 0.0 && norm > 0.0) {
        const double dnorm = (sigma.array() * dsigma.array()).sum() / norm;
        out += -dsa * dnorm * sb;
    }
    if (dsb != 0.0) {
        const double ddet = det * (sigma.inverse() * dsigma).trace();
        out += sa * dsb * nf * (nf + 1.0) * ddet;
    }
    return out;
}

GradientResult ibp_gradient(const ModelSpec& model, const LevyMeasureSpec& spec, const TestFunction& f, const Vec& x,
                            const McConfig& cfg, int i, GradientSide side) {
    validate(cfg);
    const int d = model.dim();
    if (i < 0 || i >= d) throw ConfigurationError("gradient index out of range");
    const Vec comp = eta_compensator(spec);
    struct Sample {
        double value = 0.0, cutoff = 0.0;
        bool warning = false;
    };
    const auto samples = parallel_map(cfg.samples, cfg.threads, [&](std::size_t s) {
        auto noise = std::make_shared<const NoiseRealization>(sample_path_noise(spec, cfg, s));
        const PathRealization path = simulate(model, x, noise);
        const double t = path.grid.back();
        const int m = path.points() - 1;
        const Mat sigma = reduced_malliavin(model, path, t).sigma;
        Sample out;
        out.cutoff = phi_cutoff(sigma, cfg.cutoff_level);
        // Phi and its derivative vanish together, so the weight is 0.
        if (out.cutoff == 0.0) return out;
        const double det = sigma.determinant();
        out.warning = det < cfg.ridge;
        const Mat inv = sigma.inverse();
        const Mat K = path.K(m);
        const double fx = f.value(path.state(m));
        double weight = 0.0;
        for (int j = 0; j < d; ++j) {
            const PerturbationField field = sample_perturbation(model, path, Perturbation::canonical(j));
            const double div = divergence(model, spec, path, field, t, &comp);
            const DirectionalJacobians dj = directional_jacobians(model, path, field, t);
            const double dphi = phi_cutoff_derivative(sigma, dj.DSigma, cfg.cutoff_level);
            const Mat dinv = -inv * dj.DSigma * inv;
            double coef = 0.0, dcoef = 0.0;
            if (side == GradientSide::Initial) {
                coef = inv(j, i);
                dcoef = dinv(j, i);
            } else {
                const Mat IK = inv * K;
                const Mat dIK = dinv * K + inv * dj.DK;
                coef = IK(j, i);
                dcoef = dIK(j, i);
            }
            weight -= coef * out.cutoff * div + dcoef * out.cutoff + coef * dphi;
        }
        out.value = fx * weight;
        return out;
    });
    std::vector<double> values;
    values.reserve(samples.size());
    GradientResult result;
    double warnings = 0.0, cutoff = 0.0;
    for (const auto& s : samples) {
        values.push_back(s.value);
        warnings += s.warning ? 1.0 : 0.0;
        cutoff += s.cutoff;
    }
    result.estimate = summarize(values, cfg.antithetic);
    result.conditioning_warnings = warnings / static_cast<double>(samples.size());
    result.mean_cutoff = cutoff / static_cast<double>(samples.size());
    return result;
}

Estimate finite_difference_gradient(const ModelSpec& model, const LevyMeasureSpec& spec, const TestFunction& f,
                                    const Vec& x, const McConfig& cfg, int i, double dx) {
    validate(cfg);
    Vec xp = x, xm = x;
    xp(i) += dx;
    xm(i) -= dx;
    const auto values = parallel_map(cfg.samples, cfg.threads, [&](std::size_t s) {
        const NoiseRealization noise = sample_path_noise(spec, cfg, s);
        return (f.value(integrate_endpoint(model, xp, noise)) - f.value(integrate_endpoint(model, xm, noise))) /
               (2.0 * dx);
    });
    return summarize(values, cfg.antithetic);
}

FellerProbe strong_feller_probe(const ModelSpec& model, const LevyMeasureSpec& spec, const TestFunction& f,
                                const std::vector<Vec>& x_line, const McConfig& cfg, double threshold) {
    FellerProbe probe;
    probe.points = x_line;
    for (const Vec& x : x_line) probe.values.push_back(mc_expectation(model, spec, f, x, cfg));
    for (std::size_t k = 1; k < probe.values.size(); ++k) {
        const double diff = std::abs(probe.values[k].mean - probe.values[k - 1].mean);
        const double se = std::hypot(probe.values[k].std_error, probe.values[k - 1].std_error);
        probe.max_oscillation = std::max(probe.max_oscillation, diff);
        const double ratio = se > 0.0 ? diff / se : (diff > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
        probe.max_ratio = std::max(probe.max_ratio, ratio);
        if (ratio > 4.0 && diff > threshold) probe.flagged = true;
    }
    return probe;
}

std::vector<SmallBallRow> smallball_curve(const ModelSpec& model, const LevyMeasureSpec& spec, const Vec& x,
                                          int directions, const std::vector<double>& eps_grid, const McConfig& cfg) {
    validate(cfg);
    const int d = model.dim();
    if (directions < d) directions = d;
    for (std::size_t k = 1; k < eps_grid.size(); ++k)
        if (!(eps_grid[k] < eps_grid[k - 1])) throw ConfigurationError("smallball eps grid must be decreasing");
    std::vector<Vec> us;
    for (int i = 0; i < d; ++i) us.push_back(Vec::Unit(d, i));
    Engine engine = make_engine(derive_seed(cfg.seed, "smallball/directions", 0));
    std::normal_distribution<double> normal;
    while (static_cast<int>(us.size()) < directions) {
        Vec u(d);
        for (int i = 0; i < d; ++i) u(i) = normal(engine);
        us.push_back(u.normalized());
    }
    const auto quad = parallel_map(cfg.samples, cfg.threads, [&](std::size_t s) {
        auto noise = std::make_shared<const NoiseRealization>(sample_path_noise(spec, cfg, s));
        const PathRealization path = simulate(model, x, noise);
        const Mat sigma = reduced_malliavin(model, path, path.grid.back()).sigma;
        std::vector<double> q(us.size());
        for (std::size_t k = 0; k < us.size(); ++k) q[k] = us[k].dot(sigma * us[k]);
        return q;
    });
    std::vector<SmallBallRow> rows;
    const double n = static_cast<double>(quad.size());
    for (const double eps : eps_grid) {
        SmallBallRow row;
        row.eps = eps;
        for (std::size_t k = 0; k < us.size(); ++k) {
            std::size_t count = 0;
            for (const auto& q : quad)
                if (q[k] <= eps) ++count;
            const double p = static_cast<double>(count) / n;
            if (p > row.probability) {
                row.probability = p;
                row.argmax = static_cast<int>(k);
            }
        }
        rows.push_back(row);
    }
    return rows;
}

InverseMoment inverse_moment_probe(const ModelSpec& model, const LevyMeasureSpec& spec, const Vec& x, double p,
                                   const McConfig& cfg) {
    validate(cfg);
    if (!(p >= 1.0)) throw ConfigurationError("inverse moment order p must be at least 1");
    const auto dets = parallel_map(cfg.samples, cfg.threads, [&](std::size_t s) {
        auto noise = std::make_shared<const NoiseRealization>(sample_path_noise(spec, cfg, s));
        const PathRealization path = simulate(model, x, noise);
        return reduced_malliavin(model, path, path.grid.back()).sigma.determinant();
    });
    std::vector<double> values;
    values.reserve(dets.size());
    double clipped = 0.0;
    for (double det : dets) {
        if (det < cfg.ridge) clipped += 1.0;
        values.push_back(std::pow(std::max(det, cfg.ridge), -p));
    }
    InverseMoment out;
    out.estimate = summarize(values, cfg.antithetic);
    out.clipped_fraction = clipped / static_cast<double>(dets.size());
    out.flagged = out.clipped_fraction > 1e-3;
    return out;
}

Decomposition semigroup_decomposition(const ModelSpec& model, const LevyMeasureSpec& spec, const TestFunction& f,
                                      const Vec& x, const McConfig& cfg) {
    validate(cfg);
    Decomposition out;
    out.direct = mc_expectation(model, spec, f, x, cfg);
    const double lt = spec.big_jump_rate * cfg.horizon;
    out.zero_jump_weight = std::exp(-lt);
    if (spec.big_jump_rate <= 0.0) {
        out.conditioned = out.direct;
        out.strata = 1;
        return out;
    }
    std::vector<double> weights;
    double tail = 1.0;
    for (int n = 0; n < 1000 && tail > 1e-12; ++n) {
        const double w = std::exp(-lt + n * std::log(lt) - std::lgamma(n + 1.0));
        weights.push_back(w);
        tail -= w;
    }
    out.strata = static_cast<int>(weights.size());
    LevyMeasureSpec small = spec;
    small.big_jump_rate = 0.0;
    const int d = model.dim();
    double mean = 0.0, var = 0.0;
    std::size_t total = 0;
    for (std::size_t n = 0; n < weights.size(); ++n) {
        const std::size_t count =
            std::max<std::size_t>(2, static_cast<std::size_t>(std::llround(weights[n] * static_cast<double>(cfg.samples))));
        const std::string stream = cfg.stream + "/decompose/" + std::to_string(n);
        const auto values = parallel_map(count, cfg.threads, [&](std::size_t k) {
            Engine engine = make_engine(derive_seed(cfg.seed, stream, k));
            std::uniform_real_distribution<double> uniform;
            std::normal_distribution<double> normal;
            std::vector<double> times(n);
            for (auto& t : times) t = cfg.horizon * (1.0 - uniform(engine));
            std::sort(times.begin(), times.end());
            const double lo = std::pow(spec.big_jump_law.r_min, d);
            const double hi = std::pow(spec.big_jump_law.r_max, d);
            std::vector<Eigen::VectorXd> marks;
            for (std::size_t m = 0; m < n; ++m) {
                const double r = std::pow(lo + uniform(engine) * (hi - lo), 1.0 / d);
                Eigen::VectorXd z(d);
                if (d == 1) {
                    z(0) = (engine() >> 63) ? 1.0 : -1.0;
                } else {
                    for (int i = 0; i < d; ++i) z(i) = normal(engine);
                    z.normalize();
                }
                marks.push_back(r * z);
            }
            Vec state = x;
            double start = 0.0;
            for (std::size_t m = 0; m <= n; ++m) {
                const double end = m < n ? times[m] : cfg.horizon;
                if (end > start) {
                    const NoiseRealization seg = sample_small_noise(small, end - start, cfg.step, engine);
                    state = integrate_endpoint(model, state, seg);
                }
                if (m < n) state += model.A2 * marks[m];
                start = end;
            }
            return f.value(state);
        });
        const Estimate e = summarize(values);
        const double sd2 = e.std_error * e.std_error;  // already divided by count
        mean += weights[n] * e.mean;
        var += weights[n] * weights[n] * sd2;
        total += count;
    }
    out.conditioned.mean = mean;
    out.conditioned.std_error = std::sqrt(var);
    out.conditioned.samples = total;
    return out;
}

void gaussian_moments(const Eigen::MatrixXd& B, const Eigen::MatrixXd& A1, const Vec& x, double t, Vec& mean,
                      Eigen::MatrixXd& cov) {
    const int d = static_cast<int>(B.rows());
    mean = (B * t).exp() * Eigen::VectorXd(x);
    Eigen::MatrixXd C = Eigen::MatrixXd::Zero(2 * d, 2 * d);
    C.topLeftCorner(d, d) = -B;
    C.topRightCorner(d, d) = A1 * A1.transpose();
    C.bottomRightCorner(d, d) = B.transpose();
    const Eigen::MatrixXd F = (C * t).exp();
    cov = F.bottomRightCorner(d, d).transpose() * F.topRightCorner(d, d);
    cov = 0.5 * (cov + cov.transpose()).eval();
}

double gaussian_density(const Vec& mean, const Eigen::MatrixXd& cov, const Vec& y) {
    const int d = static_cast<int>(mean.size());
    const Eigen::LLT<Eigen::MatrixXd> llt(cov);
    const Eigen::VectorXd r = llt.matrixL().solve(Eigen::VectorXd(y - mean));
    const double logdet = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
    return std::exp(-0.5 * r.squaredNorm() - 0.5 * logdet - 0.5 * d * std::log(2.0 * std::numbers::pi));
}

}  // namespace levylab

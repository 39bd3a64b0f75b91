#include "levylab/malliavin.hpp"

#include "levylab/parallel.hpp"

#include <array>
#include <cmath>
#include <sstream>

namespace levylab {

double smooth_step(double u) {
    if (u <= 0.0) return 0.0;
    if (u >= 1.0) return 1.0;
    const double a = std::exp(-1.0 / u);
    const double b = std::exp(-1.0 / (1.0 - u));
    return a / (a + b);
}

double smooth_step_derivative(double u) {
    if (u <= 0.0 || u >= 1.0) return 0.0;
    const double a = std::exp(-1.0 / u);
    const double b = std::exp(-1.0 / (1.0 - u));
    const double s = a + b;
    return a * b * (1.0 / (u * u) + 1.0 / ((1.0 - u) * (1.0 - u))) / (s * s);
}

ZetaValue zeta_eval(const Vec& z) {
    ZetaValue out;
    const double r = z.norm();
    out.gradient = Vec::Zero(z.size());
    if (r > 0.5) return out;
    if (r <= 0.25) {
        out.value = r * r * r;
        out.gradient = 3.0 * r * z;
        return out;
    }
    const double u = 2.0 - 4.0 * r;
    const double s = smooth_step(u);
    const double ds = smooth_step_derivative(u);
    out.value = r * r * r * s;
    out.gradient = (3.0 * r * s - 4.0 * r * r * ds) * z;
    return out;
}

Vec eta_eval(const LevyMeasureSpec& spec, const Vec& z) {
    const ZetaValue zv = zeta_eval(z);
    if (zv.value == 0.0) return zv.gradient;
    return zv.gradient + zv.value * spec.grad_log_kappa(z);
}

Perturbation Perturbation::canonical(int j) {
    Perturbation p;
    p.kind = Kind::Canonical;
    p.index = j;
    p.label = "Theta_j for j=" + std::to_string(j + 1);
    return p;
}

Perturbation Perturbation::constant(const Vec& h, const Vec& c) {
    Perturbation p;
    p.kind = Kind::Constant;
    p.h = h;
    p.c = c;
    p.label = "constant";
    return p;
}

Perturbation Perturbation::constant_h(const Vec& h) {
    Perturbation p = constant(h, Vec::Zero(h.size()));
    p.label = "constant_h";
    return p;
}

Perturbation Perturbation::zeta_direction(const Vec& c) {
    Perturbation p = constant(Vec::Zero(c.size()), c);
    p.label = "zeta_direction";
    return p;
}

Perturbation Perturbation::zero(int dim) {
    Perturbation p = constant(Vec::Zero(dim), Vec::Zero(dim));
    p.label = "zero";
    return p;
}

Vec PerturbationField::v(int k, const Vec& z) const {
    const double zeta = zeta_eval(z).value;
    if (zeta == 0.0) return Vec::Zero(z.size());
    return zeta * c.col(k);
}

PerturbationField sample_perturbation(const ModelSpec& model, const PathRealization& path, const Perturbation& theta) {
    const int d = path.dim();
    const int n = path.points();
    PerturbationField field;
    field.h.resize(d, n);
    field.c.resize(d, n);
    if (theta.kind == Perturbation::Kind::Constant) {
        if (theta.h.size() != d || theta.c.size() != d)
            throw ConfigurationError("perturbation vectors must have the model dimension");
        field.h.colwise() = Eigen::VectorXd(theta.h);
        field.c.colwise() = Eigen::VectorXd(theta.c);
        return field;
    }
    if (!path.has_jacobians()) throw ConfigurationError("canonical perturbation needs the Jacobian flow");
    if (theta.index < 0 || theta.index >= d) throw ConfigurationError("canonical perturbation index out of range");
    const Eigen::MatrixXd A1t = model.A1.transpose();
    const Eigen::MatrixXd A2t = model.A2.transpose();
    for (int k = 0; k < n; ++k) {
        const Vec row = path.K(k).row(theta.index).transpose();
        field.h.col(k) = A1t * row;
        field.c.col(k) = A2t * row;
    }
    return field;
}

namespace {

double cell(const PathRealization& path, int k) {
    return path.grid[static_cast<std::size_t>(k) + 1] - path.grid[static_cast<std::size_t>(k)];
}

/// Iterates the small jumps with grid index <= m in time order.
template <class Fn>
void for_small_jumps(const PathRealization& path, int m, Fn&& fn) {
    for (const auto& e : path.noise->small_jumps) {
        if (e.grid_index > m) break;
        fn(e);
    }
}

}  // namespace

Eigen::MatrixXd reduced_malliavin_path(const ModelSpec& model, const PathRealization& path) {
    const int d = path.dim();
    const int n = path.points();
    Eigen::MatrixXd out(d, d * n);
    const Eigen::MatrixXd Q1 = model.A1 * model.A1.transpose();
    const Eigen::MatrixXd Q2 = model.A2 * model.A2.transpose();
    Mat sigma = Mat::Zero(d, d);
    Mat prev = path.K(0) * Q1 * path.K(0).transpose();
    out.block(0, 0, d, d) = sigma;
    std::size_t j = 0;
    const auto& jumps = path.noise->small_jumps;
    for (int k = 0; k + 1 < n; ++k) {
        const Mat K = path.K(k + 1);
        const Mat next = K * Q1 * K.transpose();
        sigma += 0.5 * cell(path, k) * (prev + next);
        prev = next;
        while (j < jumps.size() && jumps[j].grid_index == k + 1) {
            const double zeta = zeta_eval(jumps[j].mark).value;
            if (zeta != 0.0) sigma += zeta * (K * Q2 * K.transpose());
            ++j;
        }
        out.block(0, d * (k + 1), d, d) = sigma;
    }
    return out;
}

ReducedMalliavin reduced_malliavin(const ModelSpec& model, const PathRealization& path, double t) {
    const int d = path.dim();
    const int m = path.index_of(t);
    ReducedMalliavin out;
    out.time = path.grid[static_cast<std::size_t>(m)];
    out.continuous = Mat::Zero(d, d);
    out.jump = Mat::Zero(d, d);
    const Eigen::MatrixXd Q1 = model.A1 * model.A1.transpose();
    const Eigen::MatrixXd Q2 = model.A2 * model.A2.transpose();
    Mat prev = path.K(0) * Q1 * path.K(0).transpose();
    for (int k = 0; k < m; ++k) {
        const Mat K = path.K(k + 1);
        const Mat next = K * Q1 * K.transpose();
        out.continuous += 0.5 * cell(path, k) * (prev + next);
        prev = next;
    }
    for_small_jumps(path, m, [&](const JumpEvent& e) {
        const double zeta = zeta_eval(e.mark).value;
        if (zeta == 0.0) return;
        const Mat K = path.K(e.grid_index);
        out.jump += zeta * (K * Q2 * K.transpose());
    });
    out.sigma = out.continuous + out.jump;
    return out;
}

DirectionalState directional_state(const ModelSpec& model, const PathRealization& path, const PerturbationField& field) {
    const int d = path.dim();
    const int n = path.points();
    DirectionalState out;
    out.variation.resize(d, n);
    out.recursive.resize(d, n);
    Vec integral = Vec::Zero(d);
    Vec y = Vec::Zero(d);
    out.variation.col(0) = integral;
    out.recursive.col(0) = y;
    const auto& jumps = path.noise->small_jumps;
    std::size_t j = 0;
    Vec source_prev = path.K(0) * model.A1 * field.h.col(0);
    Mat G = model.drift.jacobian(path.state(0));
    double worst = 0.0;
    for (int k = 0; k + 1 < n; ++k) {
        const double dt = cell(path, k);
        const Mat Kn = path.K(k + 1);
        const Mat Jn = path.J(k + 1);
        const Vec source_next = Kn * model.A1 * field.h.col(k + 1);
        Vec increment = 0.5 * dt * (source_prev + source_next);
        Vec jump_part = Vec::Zero(d);
        while (j < jumps.size() && jumps[j].grid_index == k + 1) {
            const Vec v = field.v(k + 1, jumps[j].mark);
            jump_part += model.A2 * v;
            ++j;
        }
        increment += Kn * jump_part;
        integral += increment;
        const Vec var = Jn * integral;

        const Mat Gm = model.drift.jacobian(path.pre_jump.col(k + 1));
        const Vec Gy = G * y;
        y = y + 0.5 * dt * (Gy + Gm * (y + dt * Gy)) + Jn * increment;

        out.variation.col(k + 1) = var;
        out.recursive.col(k + 1) = y;
        for (int i = 0; i < d; ++i)
            worst = std::max(worst, std::abs(var(i) - y(i)) / std::max(1.0, std::abs(var(i))));
        source_prev = source_next;
        G = (path.states.col(k + 1) == path.pre_jump.col(k + 1)) ? Gm : model.drift.jacobian(path.state(k + 1));
    }
    out.mismatch = worst;
    if (worst > 1e-8) {
        std::ostringstream msg;
        msg << "internal consistency: constant-variation and recursive forms of D_Theta X differ by " << worst;
        throw NumericalError(msg.str());
    }
    return out;
}

Mat stacked_directional_state(const ModelSpec& model, const PathRealization& path, double t) {
    const int d = path.dim();
    const int m = path.index_of(t);
    Mat out(d, d);
    for (int j = 0; j < d; ++j) {
        const PerturbationField field = sample_perturbation(model, path, Perturbation::canonical(j));
        const DirectionalState ds = directional_state(model, path, field);
        out.col(j) = ds.variation.col(m);
    }
    return out;
}

DirectionalJacobians directional_jacobians(const ModelSpec& model, const PathRealization& path,
                                           const PerturbationField& field, double t) {
    const int d = path.dim();
    const int m = path.index_of(t);
    const Eigen::MatrixXd Q1 = model.A1 * model.A1.transpose();
    const Eigen::MatrixXd Q2 = model.A2 * model.A2.transpose();
    const auto& jumps = path.noise->small_jumps;
    std::size_t j = 0;

    Vec integral = Vec::Zero(d);
    Vec y = Vec::Zero(d);
    Mat DJ = Mat::Zero(d, d);
    Mat DK = Mat::Zero(d, d);
    Mat DSigma = Mat::Zero(d, d);
    Vec source_prev = path.K(0) * model.A1 * field.h.col(0);
    Mat S_prev = Mat::Zero(d, d);  // D_Theta J_0 = 0
    for (int k = 0; k < m; ++k) {
        const double dt = cell(path, k);
        const Mat Jk = path.J(k);
        const Mat Jn = path.J(k + 1), Kn = path.K(k + 1);
        const Vec source_next = Kn * model.A1 * field.h.col(k + 1);
        integral += 0.5 * dt * (source_prev + source_next);
        source_prev = source_next;
        const Vec y_pre = Jn * integral;  // D_Theta X_{t_{k+1}-}
        Vec jump_part = Vec::Zero(d);
        Mat jump_sigma = Mat::Zero(d, d);
        std::size_t j_begin = j;
        while (j < jumps.size() && jumps[j].grid_index == k + 1) {
            jump_part += model.A2 * field.v(k + 1, jumps[j].mark);
            ++j;
        }
        integral += Kn * jump_part;

        const Vec xk = path.state(k);
        const Vec xm = path.pre_jump.col(k + 1);
        const Mat Gk = model.drift.jacobian(xk);
        const Mat Gm = model.drift.jacobian(xm);
        const Mat Hk = model.drift.hessian_contract(xk, y);
        const Mat Hm = model.drift.hessian_contract(xm, y_pre);
        const Mat Jp = Jk + dt * Gk * Jk;
        const Mat DJp = DJ + dt * (Hk * Jk + Gk * DJ);
        DJ += 0.5 * dt * (Hk * Jk + Gk * DJ + Hm * Jp + Gm * DJp);
        y = Jn * integral;

        const Mat DKn = -Kn * DJ * Kn;
        Mat S_next = DKn * Q1 * Kn.transpose();
        S_next += S_next.transpose().eval();
        DSigma += 0.5 * dt * (S_prev + S_next);
        S_prev = S_next;
        for (std::size_t i = j_begin; i < j; ++i) {
            const ZetaValue zv = zeta_eval(jumps[i].mark);
            if (zv.value == 0.0) continue;
            const Vec v = field.v(k + 1, jumps[i].mark);
            Mat term = DKn * Q2 * Kn.transpose();
            term += term.transpose().eval();
            jump_sigma += zv.value * term + (v.dot(zv.gradient)) * (Kn * Q2 * Kn.transpose());
        }
        DSigma += jump_sigma;
        DK = DKn;
    }
    return {DJ, DK, DSigma};
}

Vec eta_compensator(const LevyMeasureSpec& spec) {
    const int d = spec.dim;
    Vec out = Vec::Zero(d);
    const double upper = 0.5;  // support of zeta
    if (spec.inner_cutoff >= upper) return out;
    for (int l = 0; l < d; ++l) {
        auto f = [&](const Eigen::VectorXd& z) { return eta_eval(spec, z)(l); };
        out(l) = compensator_integral(spec, f, spec.inner_cutoff, upper).value;
    }
    return out;
}

double divergence(const ModelSpec& model, const LevyMeasureSpec& spec, const PathRealization& path,
                  const PerturbationField& field, double t, const Vec* compensator) {
    (void)model;
    const int m = path.index_of(t);
    const Vec comp = compensator ? *compensator : eta_compensator(spec);
    double brownian = 0.0;
    double drift = 0.0;
    for (int k = 0; k < m; ++k) {
        brownian += field.h.col(k).dot(path.noise->brownian.col(k));
        if (comp.squaredNorm() > 0.0)
            drift += 0.5 * cell(path, k) * (field.c.col(k).dot(comp) + field.c.col(k + 1).dot(comp));
    }
    double jumps = 0.0;
    for_small_jumps(path, m, [&](const JumpEvent& e) {
        const Vec eta = eta_eval(spec, e.mark);
        jumps += field.c.col(e.grid_index).dot(eta);
    });
    return -brownian + jumps - drift;
}

NoiseRealization perturb_noise(const NoiseRealization& noise, const PerturbationField& field, double eps) {
    NoiseRealization out = noise;
    if (eps == 0.0) return out;
    for (int k = 0; k < noise.cells(); ++k) {
        const double dt = noise.grid[static_cast<std::size_t>(k) + 1] - noise.grid[static_cast<std::size_t>(k)];
        out.brownian.col(k) += eps * dt * field.h.col(k);
    }
    for (std::size_t i = 0; i < out.small_jumps.size(); ++i) {
        JumpEvent& e = out.small_jumps[i];
        const Vec z = e.mark;
        const Vec moved = z + eps * field.v(e.grid_index, z);
        const double r = moved.norm();
        if (!(r > 0.0 && r < 1.0)) {
            std::ostringstream msg;
            msg << "perturbed mark of small jump " << i << " at t = " << e.time << " has |z| = " << r
                << " outside the punctured unit ball; eps = " << eps << " is too large";
            throw NumericalError(msg.str());
        }
        e.mark = moved;
    }
    return out;
}

double girsanov_gamma(const LevyMeasureSpec& spec, const Vec& c, const Vec& z, double eps) {
    const ZetaValue zv = zeta_eval(z);
    if (zv.value == 0.0) return 1.0;
    const Vec moved = z + eps * zv.value * c;
    if (moved.squaredNorm() == 0.0) return 0.0;
    return (1.0 + eps * c.dot(zv.gradient)) * spec.kappa(moved) / spec.kappa(z);
}

double GirsanovCompensator::operator()(const Vec& c, double eps) {
    std::vector<double> key(c.data(), c.data() + c.size());
    key.push_back(eps);
    {
        std::lock_guard lock(mutex_);
        const auto it = cache_.find(key);
        if (it != cache_.end()) return it->second;
    }
    double value = 0.0;
    if (eps != 0.0 && c.squaredNorm() > 0.0 && spec_.inner_cutoff < 0.5) {
        auto f = [&](const Eigen::VectorXd& z) {
            const Vec zz = z;
            return (girsanov_gamma(spec_, c, zz, eps) - 1.0) * spec_.kappa(z);
        };
        value = integrate_shell(f, spec_.dim, spec_.inner_cutoff, 0.5, spec_.quadrature).value;
    }
    std::lock_guard lock(mutex_);
    cache_.emplace(std::move(key), value);
    return value;
}

double girsanov_weight(const LevyMeasureSpec& spec, const PathRealization& path, const PerturbationField& field,
                       double eps, double t, GirsanovCompensator& compensator) {
    if (eps == 0.0) return 1.0;
    const int m = path.index_of(t);
    double log_q = 0.0;
    double g_prev = compensator(field.c.col(0), eps);
    for (int k = 0; k < m; ++k) {
        const double dt = cell(path, k);
        const Vec h = field.h.col(k);
        log_q -= eps * h.dot(path.noise->brownian.col(k)) + 0.5 * eps * eps * h.squaredNorm() * dt;
        const bool same = field.c.col(k + 1) == field.c.col(k);
        const double g_next = same ? g_prev : compensator(field.c.col(k + 1), eps);
        log_q -= 0.5 * dt * (g_prev + g_next);
        g_prev = g_next;
    }
    bool bad = false;
    double bad_time = 0.0;
    for_small_jumps(path, m, [&](const JumpEvent& e) {
        const double g = girsanov_gamma(spec, field.c.col(e.grid_index), e.mark, eps);
        if (!(g > 0.0)) {
            bad = true;
            bad_time = e.time;
            return;
        }
        log_q += std::log(g);
    });
    if (bad) {
        std::ostringstream msg;
        msg << "gamma_eps is not positive at the jump at t = " << bad_time << "; eps = " << eps
            << " exceeds the admissible range";
        throw NumericalError(msg.str());
    }
    return std::exp(log_q);
}

IbpResult ibp_residual(const ModelSpec& model, const LevyMeasureSpec& spec, const TestFunction& f,
                       const Perturbation& theta, const Vec& x0, const McConfig& cfg) {
    validate(cfg);
    if (!f.gradient) throw ConfigurationError("ibp_residual needs a differentiable test function");
    const Vec comp = eta_compensator(spec);
    struct Sample {
        double derivative = 0.0, weighted = 0.0, mismatch = 0.0;
    };
    const auto samples = parallel_map(cfg.samples, cfg.threads, [&](std::size_t i) {
        auto noise = std::make_shared<const NoiseRealization>(sample_path_noise(spec, cfg, i));
        const PathRealization path = simulate(model, x0, noise);
        const PerturbationField field = sample_perturbation(model, path, theta);
        const DirectionalState ds = directional_state(model, path, field);
        const int m = path.points() - 1;
        const Vec x = path.state(m);
        Sample s;
        s.derivative = f.gradient(x).dot(ds.variation.col(m));
        s.weighted = f.value(x) * divergence(model, spec, path, field, path.grid.back(), &comp);
        s.mismatch = ds.mismatch;
        return s;
    });
    std::vector<double> der, wei, res;
    der.reserve(samples.size());
    wei.reserve(samples.size());
    res.reserve(samples.size());
    IbpResult out;
    for (const auto& s : samples) {
        der.push_back(s.derivative);
        wei.push_back(s.weighted);
        res.push_back(s.derivative + s.weighted);
        out.max_mismatch = std::max(out.max_mismatch, s.mismatch);
    }
    out.derivative = summarize(der, cfg.antithetic);
    out.weighted = summarize(wei, cfg.antithetic);
    out.residual = summarize(res, cfg.antithetic);
    return out;
}

std::vector<GirsanovRow> girsanov_limit_check(const ModelSpec& model, const LevyMeasureSpec& spec,
                                              const TestFunction& f, const Perturbation& theta, const Vec& x0,
                                              const std::vector<double>& eps_list, const McConfig& cfg) {
    validate(cfg);
    const Vec comp = eta_compensator(spec);
    GirsanovCompensator compensator(spec);
    const std::size_t E = eps_list.size();
    // per sample: plain, then for each eps (Q, f(X^eps) Q, distance^2)
    const auto samples = parallel_map(cfg.samples, cfg.threads, [&](std::size_t i) {
        auto noise = std::make_shared<const NoiseRealization>(sample_path_noise(spec, cfg, i));
        const PathRealization path = simulate(model, x0, noise);
        const PerturbationField field = sample_perturbation(model, path, theta);
        const double t = path.grid.back();
        const double div = divergence(model, spec, path, field, t, &comp);
        std::vector<double> row(1 + 3 * E);
        row[0] = f.value(path.state(path.points() - 1));
        for (std::size_t e = 0; e < E; ++e) {
            const double eps = eps_list[e];
            const double q = girsanov_weight(spec, path, field, eps, t, compensator);
            const NoiseRealization moved = perturb_noise(*noise, field, eps);
            const Vec xe = integrate_endpoint(model, x0, moved);
            const double dist = eps == 0.0 ? 0.0 : (q - 1.0) / eps - div;
            row[1 + 3 * e] = q;
            row[2 + 3 * e] = f.value(xe) * q;
            row[3 + 3 * e] = dist * dist;
        }
        return row;
    });
    std::vector<GirsanovRow> out(E);
    std::vector<double> column(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) column[i] = samples[i][0];
    const Estimate plain = summarize(column, cfg.antithetic);
    for (std::size_t e = 0; e < E; ++e) {
        out[e].eps = eps_list[e];
        out[e].plain = plain;
        for (int part = 0; part < 3; ++part) {
            for (std::size_t i = 0; i < samples.size(); ++i) column[i] = samples[i][1 + 3 * e + static_cast<std::size_t>(part)];
            const Estimate est = summarize(column, cfg.antithetic);
            if (part == 0) out[e].weight = est;
            if (part == 1) out[e].reweighted = est;
            if (part == 2) out[e].l2_distance = est;
        }
    }
    return out;
}

}  // namespace levylab

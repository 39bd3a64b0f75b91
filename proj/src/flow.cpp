#include "levylab/flow.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <ostream>
#include <sstream>

namespace levylab {

void validate(const ModelSpec& model) {
    const int d = model.dim();
    std::ostringstream problems;
    if (model.A1.rows() != d || model.A1.cols() != d) problems << "A1 must be " << d << "x" << d << "; ";
    if (model.A2.rows() != d || model.A2.cols() != d) problems << "A2 must be " << d << "x" << d << "; ";
    if (!model.A1.allFinite() || !model.A2.allFinite()) problems << "A1 and A2 must be finite; ";
    if (!problems.str().empty()) throw ConfigurationError(problems.str());
}

double derivative_oracle_mismatch(const ModelSpec& model, std::uint64_t seed, int probes) {
    const int d = model.dim();
    Engine engine = make_engine(seed);
    std::normal_distribution<double> normal(0.0, 2.0);
    double worst = 0.0;
    auto richardson = [](auto&& diff, double h) { return (4.0 * diff(0.5 * h) - diff(h)) / 3.0; };
    for (int p = 0; p < probes; ++p) {
        Vec x(d), y(d);
        for (int i = 0; i < d; ++i) x(i) = normal(engine);
        for (int i = 0; i < d; ++i) y(i) = normal(engine);
        const Mat J = model.drift.jacobian(x);
        Mat Jfd(d, d);
        for (int j = 0; j < d; ++j) {
            auto diff = [&](double h) -> Vec {
                Vec xp = x, xm = x;
                xp(j) += h;
                xm(j) -= h;
                return (model.drift.value(xp) - model.drift.value(xm)) / (2.0 * h);
            };
            Jfd.col(j) = richardson(diff, 1e-2);
        }
        worst = std::max(worst, (J - Jfd).norm() / std::max(1.0, J.norm()));
        const Mat H = model.drift.hessian_contract(x, y);
        auto hdiff = [&](double h) -> Mat {
            return (model.drift.jacobian(x + h * y) - model.drift.jacobian(x - h * y)) / (2.0 * h);
        };
        const Mat Hfd = richardson(hdiff, 1e-2);
        worst = std::max(worst, (H - Hfd).norm() / std::max(1.0, H.norm()));
    }
    return worst;
}

int PathRealization::index_of(double t) const {
    const double tol = 1e-12 * std::max(1.0, std::abs(grid.back()));
    const auto it = std::lower_bound(grid.begin(), grid.end(), t - tol);
    if (it == grid.end() || std::abs(*it - t) > tol) {
        std::ostringstream msg;
        msg << "time " << t << " is not a grid point";
        throw ConfigurationError(msg.str());
    }
    return static_cast<int>(it - grid.begin());
}

namespace {

void check_noise(const ModelSpec& model, const NoiseRealization& noise) {
    if (noise.dim != model.dim()) throw ConfigurationError("noise dimension does not match the model");
}

[[noreturn]] void non_finite(double t) {
    std::ostringstream msg;
    msg << "state became non-finite at t = " << t;
    throw NumericalError(msg.str());
}

/// Adds A2 * (sum of marks at grid index k) to x, advancing the event cursors.
template <class V>
void apply_jumps(const ModelSpec& model, const NoiseRealization& noise, int k, std::size_t& small, std::size_t& big,
                 V& x) {
    while (small < noise.small_jumps.size() && noise.small_jumps[small].grid_index == k) {
        x += model.A2 * noise.small_jumps[small].mark;
        ++small;
    }
    while (big < noise.big_jumps.size() && noise.big_jumps[big].grid_index == k) {
        x += model.A2 * noise.big_jumps[big].mark;
        ++big;
    }
}

}  // namespace

PathRealization integrate(const ModelSpec& model, const Vec& x0, std::shared_ptr<const NoiseRealization> noise) {
    check_noise(model, *noise);
    const int d = model.dim();
    const int n = static_cast<int>(noise->grid.size());
    PathRealization path;
    path.grid = noise->grid;
    path.states.resize(d, n);
    path.pre_jump.resize(d, n);
    path.noise = noise;
    const bool subst = noise->substitute.size() > 0;
    Vec x = x0;
    path.states.col(0) = x;
    path.pre_jump.col(0) = x;
    std::size_t small = 0, big = 0;
    for (int k = 0; k + 1 < n; ++k) {
        const double dt = noise->grid[static_cast<std::size_t>(k) + 1] - noise->grid[static_cast<std::size_t>(k)];
        Vec next = x + dt * model.drift.value(x);
        next.noalias() += model.A1 * noise->brownian.col(k);
        if (subst) next.noalias() += model.A2 * noise->substitute.col(k);
        path.pre_jump.col(k + 1) = next;
        apply_jumps(model, *noise, k + 1, small, big, next);
        if (!next.allFinite()) non_finite(noise->grid[static_cast<std::size_t>(k) + 1]);
        path.states.col(k + 1) = next;
        x = next;
    }
    return path;
}

Vec integrate_endpoint(const ModelSpec& model, const Vec& x0, const NoiseRealization& noise) {
    check_noise(model, noise);
    const int n = static_cast<int>(noise.grid.size());
    const bool subst = noise.substitute.size() > 0;
    Vec x = x0;
    std::size_t small = 0, big = 0;
    for (int k = 0; k + 1 < n; ++k) {
        const double dt = noise.grid[static_cast<std::size_t>(k) + 1] - noise.grid[static_cast<std::size_t>(k)];
        Vec next = x + dt * model.drift.value(x);
        next.noalias() += model.A1 * noise.brownian.col(k);
        if (subst) next.noalias() += model.A2 * noise.substitute.col(k);
        apply_jumps(model, noise, k + 1, small, big, next);
        x = next;
    }
    if (!x.allFinite()) non_finite(noise.horizon);
    return x;
}

void jacobian_flow(const ModelSpec& model, PathRealization& path) {
    const int d = path.dim();
    const int n = path.points();
    path.jacobian.resize(d, d * n);
    path.inverse_jacobian.resize(d, d * n);
    Mat J = Mat::Identity(d, d);
    Mat K = Mat::Identity(d, d);
    path.jacobian.block(0, 0, d, d) = J;
    path.inverse_jacobian.block(0, 0, d, d) = K;
    Mat G = model.drift.jacobian(path.state(0));
    for (int k = 0; k + 1 < n; ++k) {
        const double dt = path.grid[static_cast<std::size_t>(k) + 1] - path.grid[static_cast<std::size_t>(k)];
        const Vec pre = path.pre_jump.col(k + 1);
        const Mat Gm = model.drift.jacobian(pre);
        const Mat GJ = G * J;
        const Mat KG = K * G;
        const Mat Jp = J + dt * GJ;
        const Mat Kp = K - dt * KG;
        J += 0.5 * dt * (GJ + Gm * Jp);
        K -= 0.5 * dt * (KG + Kp * Gm);
        if (!J.allFinite() || !K.allFinite()) non_finite(path.grid[static_cast<std::size_t>(k) + 1]);
        path.jacobian.block(0, d * (k + 1), d, d) = J;
        path.inverse_jacobian.block(0, d * (k + 1), d, d) = K;
        if (path.states.col(k + 1) == path.pre_jump.col(k + 1))
            G = Gm;
        else
            G = model.drift.jacobian(path.state(k + 1));
    }
}

PathRealization simulate(const ModelSpec& model, const Vec& x0, std::shared_ptr<const NoiseRealization> noise) {
    PathRealization path = integrate(model, x0, std::move(noise));
    jacobian_flow(model, path);
    return path;
}

PathRealization linear_exact(const Eigen::MatrixXd& B, const Eigen::MatrixXd& A1, const Eigen::MatrixXd& A2,
                             const Vec& x0, std::shared_ptr<const NoiseRealization> noise) {
    const int d = static_cast<int>(B.rows());
    const int n = static_cast<int>(noise->grid.size());
    PathRealization path;
    path.grid = noise->grid;
    path.states.resize(d, n);
    path.pre_jump.resize(d, n);
    path.noise = noise;
    ModelSpec jumps_only;
    jumps_only.drift = Drift::zero(d);
    jumps_only.A1 = Eigen::MatrixXd::Zero(d, d);
    jumps_only.A2 = A2;
    const bool subst = noise->substitute.size() > 0;
    double cached_dt = -1.0;
    Eigen::MatrixXd full, half;
    Vec x = x0;
    path.states.col(0) = x;
    path.pre_jump.col(0) = x;
    std::size_t small = 0, big = 0;
    for (int k = 0; k + 1 < n; ++k) {
        const double dt = noise->grid[static_cast<std::size_t>(k) + 1] - noise->grid[static_cast<std::size_t>(k)];
        if (dt != cached_dt) {
            full = (B * dt).exp();
            half = (B * (0.5 * dt)).exp();
            cached_dt = dt;
        }
        Vec noise_term = A1 * noise->brownian.col(k);
        if (subst) noise_term += A2 * noise->substitute.col(k);
        Vec next = full * x + half * noise_term;
        path.pre_jump.col(k + 1) = next;
        apply_jumps(jumps_only, *noise, k + 1, small, big, next);
        path.states.col(k + 1) = next;
        x = next;
    }
    return path;
}

double generator_apply(const ModelSpec& model, const LevyMeasureSpec& spec, const TestFunction& f, const Vec& x) {
    if (!f.gradient || !f.hessian) throw ConfigurationError("generator_apply needs a twice differentiable f");
    const int d = model.dim();
    const Vec grad = f.gradient(x);
    const Mat hess = f.hessian(x);
    const double fx = f.value(x);
    double total = model.drift.value(x).dot(grad);
    const Eigen::MatrixXd A1A1 = model.A1 * model.A1.transpose();
    total += 0.5 * (A1A1.array() * hess.array()).sum();
    if (spec.inner_cutoff < 1.0) {
        auto jump = [&](const Eigen::VectorXd& z) {
            const Vec shift = model.A2 * z;
            return f.value(x + shift) - fx - shift.dot(grad);
        };
        total += compensator_integral(spec, jump, spec.inner_cutoff, 1.0).value;
    }
    if (spec.gaussian_substitute) {
        const Eigen::MatrixXd C = model.A2 * small_jump_covariance(spec) * model.A2.transpose();
        total += 0.5 * (C.array() * hess.array()).sum();
    }
    if (spec.big_jump_rate > 0.0) {
        const double lo = spec.big_jump_law.r_min, hi = spec.big_jump_law.r_max;
        const double volume = sphere_area(d) * (std::pow(hi, d) - std::pow(lo, d)) / d;
        auto big = [&](const Eigen::VectorXd& z) { return f.value(x + model.A2 * z) - fx; };
        double mean = 0.0;
        if (hi > lo) mean = integrate_shell(big, d, lo, hi, spec.quadrature).value / volume;
        else {
            // point mass on the sphere |z| = r_min
            auto on_sphere = [&](const Eigen::VectorXd& u) { return big(lo * u); };
            mean = integrate_sphere(on_sphere, d, spec.quadrature.sphere_order) / sphere_area(d);
        }
        total += spec.big_jump_rate * mean;
    }
    return total;
}

void write_path_csv(std::ostream& out, const PathRealization& path, bool with_jacobians) {
    const int d = path.dim();
    out << "t";
    for (int i = 0; i < d; ++i) out << ",x" << (i + 1);
    const bool jac = with_jacobians && path.has_jacobians();
    if (jac) {
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) out << ",J" << (i + 1) << (j + 1);
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) out << ",K" << (i + 1) << (j + 1);
    }
    out << '\n';
    const auto old = out.precision(17);
    for (int k = 0; k < path.points(); ++k) {
        out << path.grid[static_cast<std::size_t>(k)];
        for (int i = 0; i < d; ++i) out << ',' << path.states(i, k);
        if (jac) {
            const Mat J = path.J(k), K = path.K(k);
            for (int i = 0; i < d; ++i)
                for (int j = 0; j < d; ++j) out << ',' << J(i, j);
            for (int i = 0; i < d; ++i)
                for (int j = 0; j < d; ++j) out << ',' << K(i, j);
        }
        out << '\n';
    }
    out.precision(old);
}

}  // namespace levylab

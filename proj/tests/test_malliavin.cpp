#include "levylab/malliavin.hpp"
#include "levylab/presets.hpp"

#include <gtest/gtest.h>

#include <vector>

#include <cmath>

using namespace levylab;

namespace {

/// b = 0, A1 = 0, A2 = I in d = 2 with a single jump of mark (0.2, 0) at t = 1/2.
struct OneJump {
    ModelSpec model{"zero", Drift::zero(2), Eigen::MatrixXd::Zero(2, 2), Eigen::MatrixXd::Identity(2, 2)};
    LevyMeasureSpec levy = pure_power_measure(2, 1.0, 1.0, 0.1);
    std::shared_ptr<NoiseRealization> noise = std::make_shared<NoiseRealization>();

    OneJump() {
        noise->dim = 2;
        noise->horizon = 1.0;
        noise->macro_step = 0.5;
        noise->grid = {0.0, 0.5, 1.0};
        noise->brownian = Eigen::MatrixXd::Zero(2, 2);
        Eigen::VectorXd z(2);
        z << 0.2, 0.0;
        noise->small_jumps.push_back({0.5, z, 1});
    }
};

}  // namespace

TEST(Malliavin, SmoothStep) {
    EXPECT_EQ(smooth_step(0.0), 0.0);
    EXPECT_EQ(smooth_step(1.0), 1.0);
    EXPECT_NEAR(smooth_step(0.5), 0.5, 1e-15);
    const double u = 0.3, h = 1e-6;
    EXPECT_NEAR(smooth_step_derivative(u), (smooth_step(u + h) - smooth_step(u - h)) / (2 * h), 1e-8);
}

TEST(Malliavin, ZetaAndEta) {
    Vec z(1);
    z << 0.2;
    EXPECT_NEAR(zeta_eval(z).value, 0.008, 1e-15);
    EXPECT_NEAR(zeta_eval(z).gradient(0), 0.12, 1e-15);
    // kappa = |z|^{-2}: eta = 3 r^2 - 2 r^2 = r^2
    EXPECT_NEAR(eta_eval(pure_power_measure(1, 1.0, 1.0, 0.1), z)(0), 0.04, 1e-15);
    z << 0.6;
    EXPECT_EQ(zeta_eval(z).value, 0.0);
    // gradient on the transition band matches finite differences
    Vec y(2);
    y << 0.25, 0.2;
    const double h = 1e-7;
    for (int i = 0; i < 2; ++i) {
        Vec p = y, m = y;
        p(i) += h;
        m(i) -= h;
        EXPECT_NEAR(zeta_eval(y).gradient(i), (zeta_eval(p).value - zeta_eval(m).value) / (2 * h), 1e-8);
    }
}

TEST(Malliavin, SigmaForOneJump) {
    OneJump s;
    const PathRealization path = simulate(s.model, Vec::Zero(2), s.noise);
    const ReducedMalliavin rm = reduced_malliavin(s.model, path, 1.0);
    EXPECT_TRUE(rm.sigma.isApprox(0.008 * Mat::Identity(2, 2), 1e-14));
    EXPECT_TRUE(rm.continuous.isZero(0.0));
    const Mat before = reduced_malliavin(s.model, path, 0.5).sigma;
    EXPECT_TRUE(before.isApprox(0.008 * Mat::Identity(2, 2), 1e-14));  // jump at t counts on [0, t]
}

TEST(Malliavin, PerturbedMark) {
    OneJump s;
    const PathRealization path = simulate(s.model, Vec::Zero(2), s.noise);
    const PerturbationField field = sample_perturbation(s.model, path, Perturbation::canonical(0));
    for (const double eps : {0.5, 0.1}) {
        const NoiseRealization moved = perturb_noise(*s.noise, field, eps);
        EXPECT_NEAR(moved.small_jumps[0].mark(0), 0.2 + 0.008 * eps, 1e-15);
        EXPECT_EQ(moved.small_jumps[0].mark(1), 0.0);
    }
}

TEST(Malliavin, DirectionalStateIdentity) {
    for (const auto& name : preset_names()) {
        const Preset p = make_preset(name);
        auto noise = std::make_shared<const NoiseRealization>(sample_noise(p.levy, 1.0, 1e-3, 17));
        const PathRealization path = simulate(p.model, p.x0, noise);
        const Mat lhs = stacked_directional_state(p.model, path, 1.0);
        const Mat rhs = path.J(path.points() - 1) * reduced_malliavin(p.model, path, 1.0).sigma;
        EXPECT_LT((lhs - rhs).cwiseAbs().maxCoeff(), 1e-8) << name;
        for (int j = 0; j < p.model.dim(); ++j) {
            const auto field = sample_perturbation(p.model, path, Perturbation::canonical(j));
            EXPECT_LT(directional_state(p.model, path, field).mismatch, 1e-8) << name;
        }
    }
}

TEST(Malliavin, DirectionalJacobiansMatchPerturbation) {
    // D_Theta J against a central difference in eps; agreement is first order in the step.
    const Preset p = make_preset("pure_jump");
    std::vector<double> errors;
    for (double h : {1e-3, 1e-4}) {
        auto noise = std::make_shared<const NoiseRealization>(sample_noise(p.levy, 0.5, h, 23));
        const PathRealization path = simulate(p.model, p.x0, noise);
        const auto field = sample_perturbation(p.model, path, Perturbation::canonical(1));
        const DirectionalJacobians dj = directional_jacobians(p.model, path, field, 0.5);
        const double eps = 1e-5;
        auto jacobian_at = [&](double e) {
            auto moved = std::make_shared<const NoiseRealization>(perturb_noise(*noise, field, e));
            const PathRealization q = simulate(p.model, p.x0, moved);
            return Mat(q.J(q.points() - 1));
        };
        const Mat fd = (jacobian_at(eps) - jacobian_at(-eps)) / (2 * eps);
        errors.push_back((fd - dj.DJ).cwiseAbs().maxCoeff() / std::max(1.0, dj.DJ.cwiseAbs().maxCoeff()));
        const Mat K = path.K(path.points() - 1);
        EXPECT_TRUE(dj.DK.isApprox(-K * dj.DJ * K, 1e-12));
    }
    EXPECT_LT(errors[0], 1e-5);
    EXPECT_LT(errors[1], 0.2 * errors[0]);
}

TEST(Malliavin, EtaCompensatorVanishesForSymmetricKappa) {
    EXPECT_TRUE(eta_compensator(make_preset("pure_jump").levy).isZero(0.0));
}

TEST(Malliavin, GirsanovGammaAndWeightAtZero) {
    const Preset p = make_preset("kolmogorov_mixed");
    Vec c(2), z(2);
    c << 1.0, 0.0;
    z << 0.1, 0.05;
    EXPECT_EQ(girsanov_gamma(p.levy, c, z, 0.0), 1.0);
    // d/deps gamma at 0 = c . eta
    const double h = 1e-6;
    EXPECT_NEAR((girsanov_gamma(p.levy, c, z, h) - girsanov_gamma(p.levy, c, z, -h)) / (2 * h),
                c.dot(eta_eval(p.levy, z)), 1e-8);
    auto noise = std::make_shared<const NoiseRealization>(sample_noise(p.levy, 1.0, 1e-2, 3));
    const PathRealization path = simulate(p.model, p.x0, noise);
    const auto field = sample_perturbation(p.model, path, Perturbation::canonical(0));
    GirsanovCompensator comp(p.levy);
    EXPECT_NEAR(girsanov_weight(p.levy, path, field, 0.0, 1.0, comp), 1.0, 1e-14);
}

TEST(Malliavin, IbpResidualGaussianSmallSample) {
    const Preset p = make_preset("gaussian");
    McConfig cfg;
    cfg.samples = 4000;
    cfg.step = 1e-2;
    cfg.seed = 5;
    const IbpResult r = ibp_residual(p.model, p.levy, tanh_function(1, 0), Perturbation::canonical(0), p.x0, cfg);
    EXPECT_LE(std::abs(r.residual.mean), 3.0 * r.residual.std_error + 5.0 * cfg.step);
    EXPECT_LT(r.max_mismatch, 1e-8);
    EXPECT_THROW(ibp_residual(p.model, p.levy, halfspace_indicator(Vec::Ones(1), 0.0), Perturbation::canonical(0), p.x0,
                              cfg),
                 ConfigurationError);
}

#include "levylab/levy_noise.hpp"
#include "levylab/mc.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <sstream>

using namespace levylab;

TEST(LevyMeasure, OreyConstantOfPurePower) {
    for (const double eps : {1e-1, 1e-2, 1e-3}) {
        EXPECT_NEAR(orey_constant(pure_power_measure(1, 1.0, 1.0, 0.1), {eps})[0].value, 2.0, 1e-8);
        EXPECT_NEAR(orey_constant(pure_power_measure(2, 1.0, 1.0, 0.1), {eps})[0].value, 2.0 * std::numbers::pi, 1e-7);
    }
    // d = 1, alpha = 1/2: eps^{-3/2} * 2 eps^{3/2} / (3/2) = 4/3
    EXPECT_NEAR(orey_constant(pure_power_measure(1, 0.5, 1.0, 0.1), {1e-3})[0].value, 4.0 / 3.0, 1e-8);
}

TEST(LevyMeasure, MomentLowerBound) {
    // d = 1, alpha = 1.5, p = 2: integral 2 eps^{1/2} / (1/2) = 4 eps^{1/2}, ratio 4
    const auto rows = moment_lowerbound_check(pure_power_measure(1, 1.5, 1.0, 0.1), 2.0, {0.25, 0.01});
    EXPECT_NEAR(rows[0].integral, 2.0, 1e-8);
    EXPECT_NEAR(rows[0].ratio, 4.0, 1e-8);
    EXPECT_NEAR(rows[1].ratio, 4.0, 1e-8);
    // stable-like amplitude 1 + z1^2/2 in d = 2, alpha = 1, p = 3, eps = 0.2:
    // int_0^eps r^3 r^{-3} (2 pi + pi r^2 / 2) r dr = pi eps^2 + pi eps^4 / 8
    const auto sl = moment_lowerbound_check(stable_like_measure(2, 1.0, "1 + 0.5*z1^2", 1.5, 0.02), 3.0, {0.2});
    EXPECT_NEAR(sl[0].integral, std::numbers::pi * (0.04 + 0.0016 / 8.0), 1e-9);
    EXPECT_THROW(moment_lowerbound_check(pure_power_measure(1, 1.0, 1.0, 0.1), 1.0, {0.1}), ConfigurationError);
}

TEST(LevyMeasure, CompensatorIntegrals) {
    const LevyMeasureSpec spec = pure_power_measure(1, 1.0, 1.0, 0.1);
    // odd integrand vanishes exactly after symmetrization
    EXPECT_EQ(compensator_integral(spec, [](const Eigen::VectorXd& z) { return z(0); }, 0.0, 1.0).value, 0.0);
    EXPECT_EQ(compensator_integral(spec, [](const Eigen::VectorXd& z) { return std::pow(z(0), 3); }, 0.1, 1.0).value, 0.0);
    // int_{|z|<1} z^2 |z|^{-2} = 2 ; int_{|z|<1/2} |z|^3 |z|^{-2} = 1/4 * ... = 2 * (1/2)^2 / 2 = 1/4
    EXPECT_NEAR(compensator_integral(spec, [](const Eigen::VectorXd& z) { return z(0) * z(0); }, 0.0, 1.0).value, 2.0,
                1e-9);
    EXPECT_NEAR(compensator_integral(spec, [](const Eigen::VectorXd& z) { return std::pow(std::abs(z(0)), 3); }, 0.0, 0.5)
                    .value,
                0.25, 1e-10);
    EXPECT_NEAR(compensator_integral(spec, [](const Eigen::VectorXd& z) { return z(0) * z(0); }, 0.1, 1.0).value, 1.8,
                1e-12);
    EXPECT_THROW(compensator_integral(spec, [](const Eigen::VectorXd&) { return 1.0; }, 0.5, 2.0), ConfigurationError);
}

TEST(LevyMeasure, BandIntensityAndCovariance) {
    // d = 1, alpha = 1, delta = 0.1: 2 (1/delta - 1) = 18
    EXPECT_NEAR(band_intensity(pure_power_measure(1, 1.0, 1.0, 0.1)), 18.0, 1e-9);
    // d = 2: 2 pi (1/delta - 1)
    EXPECT_NEAR(band_intensity(pure_power_measure(2, 1.0, 1.0, 0.02)), 2.0 * std::numbers::pi * 49.0, 1e-7);
    // substitute covariance int_{|z|<delta} z z^T kappa = (2 pi delta / 2) I in d = 2
    const Eigen::MatrixXd cov = small_jump_covariance(pure_power_measure(2, 1.0, 1.0, 0.02));
    EXPECT_NEAR(cov(0, 0), std::numbers::pi * 0.02, 1e-12);
    EXPECT_NEAR(cov(0, 1), 0.0, 1e-15);
}

TEST(LevyMeasure, ValidationMessages) {
    LevyMeasureSpec bad = pure_power_measure(1, 1.0, 1.0, 0.1);
    bad.alpha = 2.5;
    try {
        validate(bad);
        FAIL();
    } catch (const ConfigurationError& e) {
        EXPECT_NE(std::string(e.what()).find("alpha must lie in (0,2)"), std::string::npos);
    }
    LevyMeasureSpec above = stable_like_measure(1, 1.0, "1 + z1^2", 1.0, 0.1);
    EXPECT_THROW(validate(above), ConfigurationError);

    // a hugely oversized envelope drives the acceptance rate below the floor
    LevyMeasureSpec loose = stable_like_measure(1, 1.0, "1", 5000.0, 0.1);
    try {
        sample_noise(loose, 1.0, 0.1, 1);
        FAIL();
    } catch (const ConfigurationError& e) {
        EXPECT_NE(std::string(e.what()).find("a_max = 5000"), std::string::npos) << e.what();
    }
    const auto diag = validate(stable_like_measure(2, 1.0, "1 + 0.5*z1^2", 1.5, 0.02));
    EXPECT_GT(diag.acceptance_rate, 0.6);
    EXPECT_LT(diag.acceptance_rate, 1.0);
    EXPECT_EQ(diag.max_symmetry_defect, 0.0);
}

TEST(LevyNoise, GridInvariantsAndDeterminism) {
    const LevyMeasureSpec spec = pure_power_measure(2, 1.0, 1.0, 0.05);
    const NoiseRealization a = sample_noise(spec, 1.0, 0.01, 42);
    const NoiseRealization b = sample_noise(spec, 1.0, 0.01, 42);
    EXPECT_TRUE(a == b);
    std::string why;
    EXPECT_TRUE(check_noise_invariants(a, &why)) << why;
    EXPECT_EQ(a.grid.front(), 0.0);
    EXPECT_EQ(a.grid.back(), 1.0);
    for (const auto& e : a.small_jumps) {
        EXPECT_EQ(a.grid[static_cast<std::size_t>(e.grid_index)], e.time);
        EXPECT_GE(e.mark.norm(), 0.05);
        EXPECT_LT(e.mark.norm(), 1.0);
    }
    EXPECT_FALSE(a == sample_noise(spec, 1.0, 0.01, 43));
}

TEST(LevyNoise, MeanJumpCountMatchesIntensity) {
    // 18 expected jumps per unit time; mean over 400 paths within 4 standard errors
    const LevyMeasureSpec spec = pure_power_measure(1, 1.0, 1.0, 0.1);
    double total = 0.0;
    for (std::uint64_t i = 0; i < 400; ++i) total += static_cast<double>(sample_noise(spec, 1.0, 0.1, i).small_jumps.size());
    EXPECT_NEAR(total / 400.0, 18.0, 4.0 * std::sqrt(18.0 / 400.0));
}

TEST(LevyNoise, BigJumpsLieInTheShell) {
    LevyMeasureSpec spec = pure_power_measure(2, 1.0, 1.0, 0.2);
    spec.big_jump_rate = 5.0;
    spec.big_jump_law = BigJumpLaw{1.0, 2.0};
    std::size_t count = 0;
    for (std::uint64_t i = 0; i < 50; ++i) {
        const NoiseRealization n = sample_noise(spec, 1.0, 0.1, i);
        for (const auto& e : n.big_jumps) {
            EXPECT_GE(e.mark.norm(), 1.0);
            EXPECT_LE(e.mark.norm(), 2.0);
        }
        count += n.big_jumps.size();
    }
    EXPECT_GT(count, 150u);
}

TEST(LevyNoise, TextRoundTrip) {
    LevyMeasureSpec spec = pure_power_measure(2, 1.3, 1.0, 0.1);
    spec.big_jump_rate = 1.0;
    spec.gaussian_substitute = true;
    spec.prepare();
    const NoiseRealization a = sample_noise(spec, 0.5, 0.05, 9);
    std::stringstream ss;
    write_noise(ss, a);
    const NoiseRealization b = read_noise(ss);
    EXPECT_TRUE(a == b);
    std::istringstream broken("levylab-noise 1\nbogus 1 2 3\n");
    EXPECT_THROW(read_noise(broken), ConfigurationError);
}

TEST(LevyNoise, CoarseningPreservesIncrements) {
    const LevyMeasureSpec spec = pure_power_measure(1, 1.0, 1.0, 0.2);
    const NoiseRealization fine = sample_noise(spec, 1.0, 0.01, 5);
    const NoiseRealization coarse = coarsen_noise(fine, 0.05);
    EXPECT_TRUE(check_noise_invariants(coarse));
    EXPECT_NEAR(coarse.brownian.sum(), fine.brownian.sum(), 1e-12);
    EXPECT_EQ(coarse.small_jumps.size(), fine.small_jumps.size());
    EXPECT_LT(coarse.grid.size(), fine.grid.size());
    const NoiseRealization part = restrict_noise(fine, 0.2, 0.6);
    EXPECT_NEAR(part.grid.front(), 0.0, 1e-15);
    EXPECT_NEAR(part.grid.back(), 0.4, 1e-12);
}

TEST(LevyNoise, AntitheticNegatesEverything) {
    LevyMeasureSpec spec = pure_power_measure(1, 1.0, 1.0, 0.1);
    spec.gaussian_substitute = true;
    spec.prepare();
    McConfig cfg;
    cfg.antithetic = true;
    cfg.samples = 2;
    const NoiseRealization a = sample_path_noise(spec, cfg, 0);
    const NoiseRealization b = sample_path_noise(spec, cfg, 1);
    EXPECT_TRUE((a.brownian + b.brownian).isZero(0.0));
    EXPECT_TRUE((a.substitute + b.substitute).isZero(0.0));
    ASSERT_EQ(a.small_jumps.size(), b.small_jumps.size());
    for (std::size_t i = 0; i < a.small_jumps.size(); ++i) EXPECT_EQ(a.small_jumps[i].mark, -b.small_jumps[i].mark);
}

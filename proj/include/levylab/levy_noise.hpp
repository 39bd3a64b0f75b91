#pragma once

#include "levylab/expression.hpp"
#include "levylab/quadrature.hpp"
#include "levylab/rng.hpp"
#include "levylab/types.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace levylab {

class ConfigurationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Normalized big-jump law: uniform in volume on the shell r_min <= |z| <= r_max.
struct BigJumpLaw {
    double r_min = 1.0;
    double r_max = 2.0;
};

/// Small-jump density kappa(z) = a(z) |z|^{-d-alpha} on 0 < |z| < 1 and a
/// compound Poisson big-jump part. Simulation keeps only delta <= |z| < 1 of
/// the small jumps.
struct LevyMeasureSpec {
    int dim = 1;
    double alpha = 1.0;
    Expression amplitude{1.0};
    double envelope = 1.0;  ///< a_max, upper bound of a(z) used by the rejection sampler
    double inner_cutoff = 0.1;
    double big_jump_rate = 0.0;
    BigJumpLaw big_jump_law;
    bool gaussian_substitute = false;
    double acceptance_floor = 1e-3;
    QuadratureOptions quadrature;

    /// Precomputes the band intensity, sampler acceptance rate and substitute
    /// covariance. Called by the factory functions; call again after editing fields.
    void prepare();

    double kappa(const Eigen::Ref<const Eigen::VectorXd>& z) const;
    Vec grad_log_kappa(const Eigen::Ref<const Eigen::VectorXd>& z) const;
    double amplitude_at(const Eigen::Ref<const Eigen::VectorXd>& z) const;

    struct Cache {
        double alpha = 0.0, envelope = 0.0, inner_cutoff = 0.0;
        int dim = 0;
        std::string amplitude;
        bool substitute = false;
        double band_intensity = 0.0;
        double envelope_intensity = 0.0;
        Eigen::MatrixXd substitute_factor;  ///< Cholesky factor of the removed-band covariance
    };
    std::shared_ptr<const Cache> cache;

    /// Cached values if they match the current fields, else freshly computed ones.
    std::shared_ptr<const Cache> prepared() const;
};

/// kappa(z) = scale |z|^{-d-alpha}
LevyMeasureSpec pure_power_measure(int dim, double alpha, double scale, double inner_cutoff);

/// kappa(z) = a(z) |z|^{-d-alpha} with a given as an expression in z1..zd, r.
LevyMeasureSpec stable_like_measure(int dim, double alpha, const std::string& amplitude, double envelope,
                                    double inner_cutoff);

/// Results of the construction-time checks on a LevyMeasureSpec.
struct LevyDiagnostics {
    double grad_log_bound = 0.0;  ///< C_1 with |grad log kappa(z)| <= C_1 / |z| on the probe set
    double band_intensity = 0.0;  ///< integral of kappa over delta <= |z| < 1
    double envelope_intensity = 0.0;
    double acceptance_rate = 0.0;
    double max_symmetry_defect = 0.0;
};

/// Validates symmetry, positivity, the gradient bound and finite band activity.
/// Throws ConfigurationError on violations.
LevyDiagnostics validate(const LevyMeasureSpec& spec, std::uint64_t seed = 0x5eed);

/// Integral of kappa over delta <= |z| < 1 (quadrature).
double band_intensity(const LevyMeasureSpec& spec);

/// Covariance of the removed band, integral over |z| < delta of z z^T kappa.
Eigen::MatrixXd small_jump_covariance(const LevyMeasureSpec& spec);

struct OreyRow {
    double eps = 0.0;
    double value = 0.0;
    double error = 0.0;
};

/// eps^{alpha-2} times the integral of |z|^2 kappa over |z| <= eps.
std::vector<OreyRow> orey_constant(const LevyMeasureSpec& spec, const std::vector<double>& eps_list);

struct MomentRow {
    double eps = 0.0;
    double integral = 0.0;
    double ratio = 0.0;
    double error = 0.0;
};

/// Integral of |z|^p kappa over |z| <= eps and its ratio to eps^{p-alpha}.
std::vector<MomentRow> moment_lowerbound_check(const LevyMeasureSpec& spec, double p,
                                               const std::vector<double>& eps_list);

/// Integral of f kappa over lower <= |z| < upper. The integrand is symmetrized
/// as (f(z) + f(-z)) / 2 before quadrature, so odd integrands give exactly 0.
QuadratureResult compensator_integral(const LevyMeasureSpec& spec,
                                      const std::function<double(const Eigen::VectorXd&)>& f, double lower,
                                      double upper);

struct JumpEvent {
    double time = 0.0;
    Eigen::VectorXd mark;
    int grid_index = 0;  ///< index k with grid[k] == time
};

/// Brownian increments on a jump-adapted grid plus explicit jump events.
struct NoiseRealization {
    int dim = 1;
    double horizon = 0.0;
    double macro_step = 0.0;
    std::uint64_t seed = 0;
    std::vector<double> grid;
    Eigen::MatrixXd brownian;    ///< d x cells
    Eigen::MatrixXd substitute;  ///< d x cells, Gaussian substitute increments (empty if unused)
    std::vector<JumpEvent> small_jumps;
    std::vector<JumpEvent> big_jumps;

    int cells() const { return static_cast<int>(grid.size()) - 1; }
    bool operator==(const NoiseRealization& other) const;
};

/// Samples the truncated noise on [0, T] with macro step h.
NoiseRealization sample_noise(const LevyMeasureSpec& spec, double horizon, double macro_step, std::uint64_t seed);

/// Samples only the small-jump band, Brownian part and substitute (no big jumps),
/// with an explicit engine. Used by the big-jump conditioned estimator.
NoiseRealization sample_small_noise(const LevyMeasureSpec& spec, double horizon, double macro_step, Engine& engine);

/// Fine noise summed onto the coarser macro grid of step `coarse_step` (an
/// integer multiple of the fine step). Jump events are kept.
NoiseRealization coarsen_noise(const NoiseRealization& fine, double coarse_step);

/// Noise restricted to the grid interval [t0, t1] and shifted to start at 0.
/// Both endpoints must be grid points; jumps at exactly t0 belong to the earlier piece.
NoiseRealization restrict_noise(const NoiseRealization& noise, double t0, double t1);

void write_noise(std::ostream& out, const NoiseRealization& noise);
NoiseRealization read_noise(std::istream& in);

/// Indicator-style helper: the jump-adapted grid invariants hold.
bool check_noise_invariants(const NoiseRealization& noise, std::string* why = nullptr);

}  // namespace levylab

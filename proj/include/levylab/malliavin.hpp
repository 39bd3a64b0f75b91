#pragma once

#include "levylab/flow.hpp"
#include "levylab/mc.hpp"

#include <map>
#include <mutex>
#include <string>
#include <vector>

namespace levylab {

/// S(u) = E(u) / (E(u) + E(1-u)), E(u) = exp(-1/u) for u > 0: the smooth step
/// with S = 0 for u <= 0 and S = 1 for u >= 1.
double smooth_step(double u);
double smooth_step_derivative(double u);

struct ZetaValue {
    double value = 0.0;
    Vec gradient;
};

/// zeta(z) = |z|^3 for |z| <= 1/4, |z|^3 S(2 - 4|z|) on (1/4, 1/2], 0 beyond.
ZetaValue zeta_eval(const Vec& z);

/// eta(z) = grad zeta + zeta grad log kappa
Vec eta_eval(const LevyMeasureSpec& spec, const Vec& z);

/// Bismut direction Theta = (h, v) with v(s, z) = c(s) zeta(z).
///
/// Canonical Theta_j: h(s) = (K_s A1)^T e_j and c(s) = (K_s A2)^T e_j.
/// Constant: h and c fixed vectors (constant_h, zeta_direction presets).
struct Perturbation {
    enum class Kind { Canonical, Constant };
    Kind kind = Kind::Constant;
    int index = 0;
    Vec h;
    Vec c;
    std::string label;

    static Perturbation canonical(int j);
    static Perturbation constant(const Vec& h, const Vec& c);
    static Perturbation constant_h(const Vec& h);
    static Perturbation zeta_direction(const Vec& c);
    static Perturbation zero(int dim);
};

/// h and c sampled on the grid of a path (d x n each).
struct PerturbationField {
    Eigen::MatrixXd h;
    Eigen::MatrixXd c;

    /// v(s_k, z) = c_k zeta(z); zero outside |z| <= 1/2.
    Vec v(int k, const Vec& z) const;
};

PerturbationField sample_perturbation(const ModelSpec& model, const PathRealization& path, const Perturbation& theta);

struct ReducedMalliavin {
    double time = 0.0;
    Mat sigma;
    Mat continuous;
    Mat jump;
};

/// Sigma_t: trapezoid of K A1 A1^T K^T plus sum over small jumps of K A2 A2^T K^T zeta(z).
ReducedMalliavin reduced_malliavin(const ModelSpec& model, const PathRealization& path, double t);

/// Sigma at every grid point, d x (d n).
Eigen::MatrixXd reduced_malliavin_path(const ModelSpec& model, const PathRealization& path);

struct DirectionalState {
    Eigen::MatrixXd variation;  ///< constant-variation form, d x n
    Eigen::MatrixXd recursive;  ///< discrete variational equation, d x n
    double mismatch = 0.0;
};

/// D_Theta X on the grid in both forms; throws NumericalError if they differ
/// by more than 1e-8 (relative to max(1, |value|)).
DirectionalState directional_state(const ModelSpec& model, const PathRealization& path, const PerturbationField& field);

/// Columns D_{Theta_j} X_t, j = 1..d, for the canonical directions.
Mat stacked_directional_state(const ModelSpec& model, const PathRealization& path, double t);

struct DirectionalJacobians {
    Mat DJ;
    Mat DK;
    Mat DSigma;
};

/// D_Theta J_t, D_Theta K_t = -K (D_Theta J) K and D_Theta Sigma_t.
DirectionalJacobians directional_jacobians(const ModelSpec& model, const PathRealization& path,
                                           const PerturbationField& field, double t);

/// Integrals of eta_l kappa over the band (exactly 0 for symmetric kappa).
Vec eta_compensator(const LevyMeasureSpec& spec);

/// div Theta on [0, t]: -sum h_k . dW_k + sum_i c . eta(z_i) - t c-weighted compensator.
double divergence(const ModelSpec& model, const LevyMeasureSpec& spec, const PathRealization& path,
                  const PerturbationField& field, double t, const Vec* compensator = nullptr);

/// Brownian increments shifted by eps h_k dt_k; marks z -> z + eps v(s, z).
NoiseRealization perturb_noise(const NoiseRealization& noise, const PerturbationField& field, double eps);

/// Cache of G(c, eps) = integral of (gamma_eps - 1) kappa over delta <= |z| <= 1/2.
class GirsanovCompensator {
public:
    explicit GirsanovCompensator(const LevyMeasureSpec& spec) : spec_(spec) {}
    double operator()(const Vec& c, double eps);

private:
    const LevyMeasureSpec& spec_;
    std::map<std::vector<double>, double> cache_;
    std::mutex mutex_;
};

/// gamma_eps(c, z) = (1 + eps c . grad zeta) kappa(z + eps c zeta) / kappa(z)
double girsanov_gamma(const LevyMeasureSpec& spec, const Vec& c, const Vec& z, double eps);

/// Q^eps_t for the perturbation field on [0, t].
double girsanov_weight(const LevyMeasureSpec& spec, const PathRealization& path, const PerturbationField& field,
                       double eps, double t, GirsanovCompensator& compensator);

struct IbpResult {
    Estimate residual;
    Estimate derivative;  ///< E D_Theta F
    Estimate weighted;    ///< E F div Theta
    double max_mismatch = 0.0;
};

/// Monte Carlo E(D_Theta F) + E(F div Theta) with F = f(X_t).
IbpResult ibp_residual(const ModelSpec& model, const LevyMeasureSpec& spec, const TestFunction& f,
                       const Perturbation& theta, const Vec& x0, const McConfig& cfg);

struct GirsanovRow {
    double eps = 0.0;
    Estimate weight;        ///< E Q^eps
    Estimate reweighted;    ///< E f(X o Theta^eps) Q^eps
    Estimate plain;         ///< E f(X)
    Estimate l2_distance;   ///< E |(Q^eps - 1)/eps - div Theta|^2
};

/// Girsanov checks for each eps on common samples.
std::vector<GirsanovRow> girsanov_limit_check(const ModelSpec& model, const LevyMeasureSpec& spec,
                                              const TestFunction& f, const Perturbation& theta, const Vec& x0,
                                              const std::vector<double>& eps_list, const McConfig& cfg);

}  // namespace levylab

#pragma once

#include "levylab/malliavin.hpp"
#include "levylab/mc.hpp"

#include <string>
#include <vector>

namespace levylab {

/// P_t f(x) by plain Monte Carlo over cfg.samples paths on [0, cfg.horizon].
Estimate mc_expectation(const ModelSpec& model, const LevyMeasureSpec& spec, const TestFunction& f, const Vec& x,
                        const McConfig& cfg);

/// Endpoints X_t of cfg.samples paths, d x N.
Eigen::MatrixXd sample_endpoints(const ModelSpec& model, const LevyMeasureSpec& spec, const Vec& x,
                                 const McConfig& cfg);

/// Scott rule sigma_i N^{-1/(d+4)} per dimension, times cfg.bandwidth_scale,
/// unless cfg.bandwidth is given.
std::vector<double> kde_bandwidth(const Eigen::MatrixXd& samples, const McConfig& cfg);

/// Product grid given by one axis per dimension; points are enumerated with
/// the last axis fastest.
struct KdeGrid {
    std::vector<std::vector<double>> axes;
    std::size_t size() const;
    Vec point(std::size_t index) const;
};

/// Uniform axis [lo, hi] with `points` nodes.
std::vector<double> linspace(double lo, double hi, int points);

struct KdeResult {
    std::vector<double> values;
    std::vector<double> cell_stderr;
    std::vector<double> bandwidth;
    std::size_t samples = 0;
};

/// Gaussian product-kernel density of the given samples on the grid.
KdeResult kde_evaluate(const Eigen::MatrixXd& samples, const std::vector<double>& bandwidth, const KdeGrid& grid);

KdeResult kde_density(const ModelSpec& model, const LevyMeasureSpec& spec, const Vec& x, const McConfig& cfg,
                      const KdeGrid& grid);

/// Trapezoid integral of grid values over the product grid.
double trapezoid_mass(const std::vector<double>& values, const KdeGrid& grid);

/// Smooth cutoff Phi_n(Sigma) = S(n + 1 - |Sigma|_F) S(n (n + 1) (det Sigma - 1/(n + 1))).
double phi_cutoff(const Mat& sigma, int n);
/// Directional derivative of Phi_n along dSigma.
double phi_cutoff_derivative(const Mat& sigma, const Mat& dsigma, int n);

enum class GradientSide {
    Initial,  ///< d/dx_i E f(X_t(x))
    Terminal  ///< E (d_i f)(X_t(x)), the density-side weight
};

struct GradientResult {
    Estimate estimate;
    double conditioning_warnings = 0.0;  ///< fraction of paths with Phi > 0 and det Sigma below the ridge
    double mean_cutoff = 0.0;            ///< mean of Phi_n(Sigma_t)
};

/// Malliavin weight estimator E[f(X_t) H^i_t].
GradientResult ibp_gradient(const ModelSpec& model, const LevyMeasureSpec& spec, const TestFunction& f, const Vec& x,
                            const McConfig& cfg, int i, GradientSide side = GradientSide::Initial);

/// Central difference of mc_expectation in x_i with common random numbers.
Estimate finite_difference_gradient(const ModelSpec& model, const LevyMeasureSpec& spec, const TestFunction& f,
                                    const Vec& x, const McConfig& cfg, int i, double dx);

struct FellerProbe {
    std::vector<Vec> points;
    std::vector<Estimate> values;
    double max_oscillation = 0.0;
    double max_ratio = 0.0;  ///< largest adjacent |difference| / combined stderr
    bool flagged = false;    ///< a jump above 4 stderr and above the threshold
};

FellerProbe strong_feller_probe(const ModelSpec& model, const LevyMeasureSpec& spec, const TestFunction& f,
                                const std::vector<Vec>& x_line, const McConfig& cfg, double threshold = 0.25);

struct SmallBallRow {
    double eps = 0.0;
    double probability = 0.0;  ///< sup over directions of P(u Sigma u <= eps)
    int argmax = 0;
};

/// Directions: coordinate axes first, then random unit vectors up to `directions`.
std::vector<SmallBallRow> smallball_curve(const ModelSpec& model, const LevyMeasureSpec& spec, const Vec& x,
                                          int directions, const std::vector<double>& eps_grid, const McConfig& cfg);

struct InverseMoment {
    Estimate estimate;
    double clipped_fraction = 0.0;
    bool flagged = false;  ///< clipped fraction above 0.1%
};

InverseMoment inverse_moment_probe(const ModelSpec& model, const LevyMeasureSpec& spec, const Vec& x, double p,
                                   const McConfig& cfg);

struct Decomposition {
    Estimate direct;
    Estimate conditioned;
    double zero_jump_weight = 0.0;
    int strata = 0;
};

/// Direct P_t f(x) versus the estimator stratified over the number of big jumps.
Decomposition semigroup_decomposition(const ModelSpec& model, const LevyMeasureSpec& spec, const TestFunction& f,
                                      const Vec& x, const McConfig& cfg);

/// Gaussian oracle for linear drift without jumps: mean e^{Bt} x and covariance
/// integral of e^{Bs} A1 A1^T e^{B^T s} ds (Van Loan).
void gaussian_moments(const Eigen::MatrixXd& B, const Eigen::MatrixXd& A1, const Vec& x, double t, Vec& mean,
                      Eigen::MatrixXd& cov);

double gaussian_density(const Vec& mean, const Eigen::MatrixXd& cov, const Vec& y);

}  // namespace levylab

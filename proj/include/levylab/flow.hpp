#pragma once

#include "levylab/drift.hpp"
#include "levylab/levy_noise.hpp"
#include "levylab/test_functions.hpp"
#include "levylab/types.hpp"

#include <iosfwd>
#include <memory>
#include <stdexcept>
#include <string>

namespace levylab {

class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// dX = b(X) dt + A1 dW + A2 dL
struct ModelSpec {
    std::string name;
    Drift drift = Drift::zero(1);
    Eigen::MatrixXd A1 = Eigen::MatrixXd::Identity(1, 1);
    Eigen::MatrixXd A2 = Eigen::MatrixXd::Zero(1, 1);

    int dim() const { return drift.dim(); }
};

/// Shape checks; throws ConfigurationError.
void validate(const ModelSpec& model);

/// Central-difference (Richardson extrapolated) Jacobian and Hessian probes
/// compared against the analytic oracles; returns the worst relative mismatch.
double derivative_oracle_mismatch(const ModelSpec& model, std::uint64_t seed, int probes = 16);

/// States and Jacobian flow along one noise realization.
struct PathRealization {
    std::vector<double> grid;
    Eigen::MatrixXd states;            ///< d x n, post-jump values
    Eigen::MatrixXd pre_jump;          ///< d x n, X_{t-}
    Eigen::MatrixXd jacobian;          ///< d x (d n), block k is J at grid[k]
    Eigen::MatrixXd inverse_jacobian;  ///< d x (d n), block k is K at grid[k]
    std::shared_ptr<const NoiseRealization> noise;

    int dim() const { return static_cast<int>(states.rows()); }
    int points() const { return static_cast<int>(grid.size()); }
    bool has_jacobians() const { return jacobian.size() > 0; }

    Vec state(int k) const { return states.col(k); }
    Mat J(int k) const { return jacobian.block(0, dim() * k, dim(), dim()); }
    Mat K(int k) const { return inverse_jacobian.block(0, dim() * k, dim(), dim()); }

    /// Grid index of time t (must be a grid point up to 1e-12 relative).
    int index_of(double t) const;
};

/// Euler-Maruyama on the jump-adapted grid; jumps applied at their times.
PathRealization integrate(const ModelSpec& model, const Vec& x0, std::shared_ptr<const NoiseRealization> noise);

/// Fills J and K by Heun steps using grad b at X_k and X_{k+1-}.
void jacobian_flow(const ModelSpec& model, PathRealization& path);

/// integrate followed by jacobian_flow.
PathRealization simulate(const ModelSpec& model, const Vec& x0, std::shared_ptr<const NoiseRealization> noise);

/// State at the horizon only, without storing the path.
Vec integrate_endpoint(const ModelSpec& model, const Vec& x0, const NoiseRealization& noise);

/// Variation-of-constants oracle for b(x) = Bx (Brownian cells weighted at midpoints).
PathRealization linear_exact(const Eigen::MatrixXd& B, const Eigen::MatrixXd& A1, const Eigen::MatrixXd& A2,
                             const Vec& x0, std::shared_ptr<const NoiseRealization> noise);

/// Generator of the truncated model applied to f at x.
double generator_apply(const ModelSpec& model, const LevyMeasureSpec& spec, const TestFunction& f, const Vec& x);

/// CSV with columns t, x1..xd and optionally J_ij, K_ij.
void write_path_csv(std::ostream& out, const PathRealization& path, bool with_jacobians);

}  // namespace levylab

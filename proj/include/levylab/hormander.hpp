#pragma once

#include "levylab/flow.hpp"
#include "levylab/rng.hpp"

#include <vector>

namespace levylab {

/// B_0 = I, B_k = b.grad B_{k-1} - grad b B_{k-1} + 1/2 (A1 A1^T) : grad^2 B_{k-1}
/// evaluated at x, plus the stacked controllability-type matrix and its
/// singular values.
struct BracketTower {
    Vec x;
    int order = 0;
    std::vector<Mat> B;
    Eigen::MatrixXd stack;  ///< [A1, B_1 A1, ..., B_n A1, A2, B_1 A2, ..., B_n A2]
    Eigen::VectorXd singular_values;
};

/// Derivative order of b needed to evaluate B_n: n if A1 = 0, else 2n - 1.
int required_drift_order(const ModelSpec& model, int n);

/// Throws ConfigurationError naming the needed order if the drift declares less.
BracketTower brackets(const ModelSpec& model, const Vec& x, int n);

struct RankResult {
    int rank = 0;
    double sigma_min = 0.0;  ///< d-th largest singular value of the stack
    double sigma_max = 0.0;
    bool pass = false;
};

/// rank = #{sigma > tol sigma_max sqrt(d)}; pass iff rank = d.
RankResult rank_condition(const BracketTower& tower, double tol = 1e-10);

/// First n in [0, max_order] at which the rank saturates, or -1.
int saturation_order(const ModelSpec& model, const Vec& x, int max_order = 4, double tol = 1e-10);

/// M(x) = A1 A1^T + B_1 A1 A1^T B_1^T + A2 A2^T + B_1 A2 A2^T B_1^T with B_1 = -grad b(x).
Mat first_order_matrix(const ModelSpec& model, const Vec& x);

/// min over unit u of u^T M u from `samples` random directions, refined by
/// projected gradient descent on the sphere.
double lambda_min_search(const Mat& M, Engine& engine, int samples = 1000);

struct UniformResult {
    std::vector<double> lambda_min;         ///< eigen-solve per point
    std::vector<double> lambda_min_search;  ///< random-direction search per point
    double c2 = 0.0;                        ///< min over the grid
};

UniformResult uniform_first_order(const ModelSpec& model, const std::vector<Vec>& x_grid, std::uint64_t seed = 7);

/// Rank of [A, B A, ..., B^steps A], A = [A1 A2], with the rank_condition tolerance rule.
int kalman_rank(const Eigen::MatrixXd& B, const Eigen::MatrixXd& A1, const Eigen::MatrixXd& A2, int steps,
                double tol = 1e-10);

}  // namespace levylab

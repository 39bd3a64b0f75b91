#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <functional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace levylab {

struct QuadratureOptions {
    double rel_tol = 1e-8;
    double abs_tol = 1e-14;
    int max_subdivisions = 4000;
    int max_shells = 600;
    int sphere_order = 48;
};

struct QuadratureResult {
    double value = 0.0;
    double error = 0.0;
    std::size_t evaluations = 0;
};

/// Thrown when an adaptive rule cannot reach its tolerance. `trace()` carries
/// the refinement history (one line per level) for diagnostics.
class QuadratureError : public std::runtime_error {
public:
    QuadratureError(const std::string& what, std::vector<std::string> trace)
        : std::runtime_error(what), trace_(std::move(trace)) {}
    const std::vector<std::string>& trace() const noexcept { return trace_; }

private:
    std::vector<std::string> trace_;
};

/// Gauss-Legendre nodes and weights on [-1, 1].
std::vector<std::pair<double, double>> gauss_legendre(int n);

/// Globally adaptive 15-point Gauss-Kronrod on [a, b].
QuadratureResult integrate_interval(const std::function<double(double)>& f, double a, double b,
                                    const QuadratureOptions& opts = {});

/// Integral of g over (lower, upper) split into dyadic shells toward `lower`.
/// `lower` may be 0 for integrands with an integrable power singularity at the
/// origin; the tail is closed geometrically once the shell ratio settles.
QuadratureResult integrate_radial(const std::function<double(double)>& g, double lower, double upper,
                                  const QuadratureOptions& opts = {});

/// Surface measure of the unit sphere S^{dim-1}.
double sphere_area(int dim);

/// Fixed-order product rule on S^{dim-1}. For dim = 1 the "sphere" is {-1, +1}.
double integrate_sphere(const std::function<double(const Eigen::VectorXd&)>& f, int dim, int order);

/// Integral of f over the shell {lower <= |z| < upper} in R^dim (radial x sphere product rule).
QuadratureResult integrate_shell(const std::function<double(const Eigen::VectorXd&)>& f, int dim, double lower,
                                 double upper, const QuadratureOptions& opts = {});

}  // namespace levylab

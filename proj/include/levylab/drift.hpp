#pragma once

#include "levylab/types.hpp"

#include <cmath>
#include <optional>
#include <string>
#include <vector>

namespace levylab {

/// Smooth drift families with analytic first and second derivatives.
///
///   zero                b = 0
///   linear              b = B x
///   sin                 b_i = a sin(x_i)
///   gradient_potential  b_i = -s tanh(x_i) - c sum_{j != i} sin(x_i - x_j)
///   kolmogorov          b = (beta sin(x_2), x_1), d = 2
class Drift {
public:
    enum class Kind { Zero, Linear, Sin, GradientPotential, Kolmogorov };

    static Drift zero(int dim);
    static Drift linear(const Eigen::MatrixXd& B);
    static Drift sin(int dim, double amplitude);
    static Drift gradient_potential(int dim, double confinement, double coupling);
    static Drift kolmogorov(double beta);

    Kind kind() const { return kind_; }
    int dim() const { return dim_; }
    std::string name() const;

    /// Highest derivative order the oracles provide. The presets are smooth, so
    /// this is unbounded unless lowered by configuration.
    int declared_order() const { return declared_order_; }
    void set_declared_order(int order) { declared_order_ = order; }

    /// b(x) for any scalar type supporting + - *, sin, cos and tanh.
    template <class S, class In>
    std::vector<S> evaluate(const In& x) const;

    Vec value(const Vec& x) const;
    /// (grad b)_{ij} = d_j b^i
    Mat jacobian(const Vec& x) const;
    /// sum_k (d_j d_k b^i)(x) y_k, the second derivative applied to y.
    Mat hessian_contract(const Vec& x, const Vec& y) const;

    /// B if the drift is exactly x -> Bx.
    std::optional<Eigen::MatrixXd> linear_matrix() const;

    /// Upper bound for the operator norm of grad b over R^d.
    double jacobian_bound() const;

    const Eigen::MatrixXd& matrix() const { return B_; }
    double param_a() const { return a_; }
    double param_b() const { return b_; }

private:
    Kind kind_ = Kind::Zero;
    int dim_ = 1;
    int declared_order_ = 1 << 20;
    Eigen::MatrixXd B_;
    double a_ = 0.0;
    double b_ = 0.0;
};

template <class S, class In>
std::vector<S> Drift::evaluate(const In& x) const {
    using std::cos;
    using std::sin;
    using std::tanh;
    std::vector<S> out;
    out.reserve(static_cast<std::size_t>(dim_));
    switch (kind_) {
        case Kind::Zero:
            for (int i = 0; i < dim_; ++i) out.push_back(x[0] * 0.0);
            break;
        case Kind::Linear:
            for (int i = 0; i < dim_; ++i) {
                S acc = x[0] * B_(i, 0);
                for (int j = 1; j < dim_; ++j) acc = acc + x[static_cast<std::size_t>(j)] * B_(i, j);
                out.push_back(acc);
            }
            break;
        case Kind::Sin:
            for (int i = 0; i < dim_; ++i) out.push_back(sin(x[static_cast<std::size_t>(i)]) * a_);
            break;
        case Kind::GradientPotential:
            for (int i = 0; i < dim_; ++i) {
                S acc = tanh(x[static_cast<std::size_t>(i)]) * (-a_);
                for (int j = 0; j < dim_; ++j) {
                    if (j == i) continue;
                    acc = acc - sin(x[static_cast<std::size_t>(i)] - x[static_cast<std::size_t>(j)]) * b_;
                }
                out.push_back(acc);
            }
            break;
        case Kind::Kolmogorov:
            out.push_back(sin(x[1]) * a_);
            out.push_back(x[0] * 1.0);
            break;
    }
    return out;
}

}  // namespace levylab

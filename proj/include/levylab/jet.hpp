#pragma once

#include <Eigen/Dense>

#include <memory>
#include <vector>

namespace levylab {

/// Monomial bookkeeping shared by all jets of a given (dim, order).
class JetSpace {
public:
    JetSpace(int dim, int order);

    int dim() const { return dim_; }
    int order() const { return order_; }
    int size() const { return static_cast<int>(exponents_.size()); }
    const std::vector<int>& exponent(int m) const { return exponents_[static_cast<std::size_t>(m)]; }
    int degree(int m) const { return degree_[static_cast<std::size_t>(m)]; }
    int index_of(const std::vector<int>& exponent) const;

    struct Product {
        int a, b, out;
    };
    const std::vector<Product>& products() const { return products_; }

    /// derivative(i)[m] = (index of m - e_i, exponent of x_i in m); index -1 if x_i absent.
    const std::vector<std::pair<int, int>>& derivative(int i) const { return derivative_[static_cast<std::size_t>(i)]; }

private:
    int dim_, order_;
    std::vector<std::vector<int>> exponents_;
    std::vector<int> degree_;
    std::vector<Product> products_;
    std::vector<std::vector<std::pair<int, int>>> derivative_;
};

/// Truncated multivariate Taylor polynomial: f(x0 + h) = sum_m c_m h^m up to
/// total degree `order`.
class Jet {
public:
    Jet() = default;
    Jet(std::shared_ptr<const JetSpace> space, double constant);

    static Jet variable(std::shared_ptr<const JetSpace> space, int i, double at);

    double value() const { return coeffs_(0); }
    const Eigen::VectorXd& coefficients() const { return coeffs_; }
    const std::shared_ptr<const JetSpace>& space() const { return space_; }

    /// Partial derivative in x_i (one fewer valid degree).
    Jet derivative(int i) const;

    /// Taylor coefficient of the monomial with the given exponents.
    double coefficient(const std::vector<int>& exponent) const;

    Jet& operator+=(const Jet& o);
    Jet& operator-=(const Jet& o);
    Jet& operator*=(double s);

    friend Jet operator+(Jet a, const Jet& b) { return a += b; }
    friend Jet operator-(Jet a, const Jet& b) { return a -= b; }
    friend Jet operator-(Jet a) { return a *= -1.0; }
    friend Jet operator*(Jet a, double s) { return a *= s; }
    friend Jet operator*(double s, Jet a) { return a *= s; }
    friend Jet operator+(Jet a, double s) {
        a.coeffs_(0) += s;
        return a;
    }
    friend Jet operator*(const Jet& a, const Jet& b);

    /// sum_k derivs[k] / k! (this - value)^k, i.e. composition with a scalar
    /// function whose derivatives at value() are `derivs`.
    Jet compose(const std::vector<double>& derivs) const;

private:
    std::shared_ptr<const JetSpace> space_;
    Eigen::VectorXd coeffs_;
};

Jet sin(const Jet& x);
Jet cos(const Jet& x);
Jet exp(const Jet& x);
Jet tanh(const Jet& x);

/// Derivatives 0..order of tanh at u.
std::vector<double> tanh_derivatives(double u, int order);

}  // namespace levylab

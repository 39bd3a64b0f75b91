#include "levylab/drift.hpp"

#include <stdexcept>

namespace levylab {

namespace {

void check_dim(int dim) {
    if (dim < 1 || dim > kMaxDim) throw std::invalid_argument("drift dimension must lie in [1, " + std::to_string(kMaxDim) + "]");
}

double sech2(double x) {
    const double c = std::cosh(x);
    return 1.0 / (c * c);
}

}  // namespace

Drift Drift::zero(int dim) {
    check_dim(dim);
    Drift d;
    d.kind_ = Kind::Zero;
    d.dim_ = dim;
    return d;
}

Drift Drift::linear(const Eigen::MatrixXd& B) {
    if (B.rows() != B.cols()) throw std::invalid_argument("linear drift matrix must be square");
    check_dim(static_cast<int>(B.rows()));
    Drift d;
    d.kind_ = Kind::Linear;
    d.dim_ = static_cast<int>(B.rows());
    d.B_ = B;
    return d;
}

Drift Drift::sin(int dim, double amplitude) {
    check_dim(dim);
    Drift d;
    d.kind_ = Kind::Sin;
    d.dim_ = dim;
    d.a_ = amplitude;
    return d;
}

Drift Drift::gradient_potential(int dim, double confinement, double coupling) {
    check_dim(dim);
    Drift d;
    d.kind_ = Kind::GradientPotential;
    d.dim_ = dim;
    d.a_ = confinement;
    d.b_ = coupling;
    return d;
}

Drift Drift::kolmogorov(double beta) {
    Drift d;
    d.kind_ = Kind::Kolmogorov;
    d.dim_ = 2;
    d.a_ = beta;
    return d;
}

std::string Drift::name() const {
    switch (kind_) {
        case Kind::Zero: return "zero";
        case Kind::Linear: return "linear";
        case Kind::Sin: return "sin";
        case Kind::GradientPotential: return "gradient_potential";
        case Kind::Kolmogorov: return "kolmogorov";
    }
    return "unknown";
}

Vec Drift::value(const Vec& x) const {
    Vec out(dim_);
    switch (kind_) {
        case Kind::Zero:
            out.setZero();
            break;
        case Kind::Linear:
            out.noalias() = B_ * x;
            break;
        case Kind::Sin:
            for (int i = 0; i < dim_; ++i) out(i) = a_ * std::sin(x(i));
            break;
        case Kind::GradientPotential:
            for (int i = 0; i < dim_; ++i) {
                double acc = -a_ * std::tanh(x(i));
                for (int j = 0; j < dim_; ++j)
                    if (j != i) acc -= b_ * std::sin(x(i) - x(j));
                out(i) = acc;
            }
            break;
        case Kind::Kolmogorov:
            out(0) = a_ * std::sin(x(1));
            out(1) = x(0);
            break;
    }
    return out;
}

Mat Drift::jacobian(const Vec& x) const {
    Mat g = Mat::Zero(dim_, dim_);
    switch (kind_) {
        case Kind::Zero:
            break;
        case Kind::Linear:
            g = B_;
            break;
        case Kind::Sin:
            for (int i = 0; i < dim_; ++i) g(i, i) = a_ * std::cos(x(i));
            break;
        case Kind::GradientPotential:
            for (int i = 0; i < dim_; ++i) {
                g(i, i) = -a_ * sech2(x(i));
                for (int j = 0; j < dim_; ++j) {
                    if (j == i) continue;
                    const double c = b_ * std::cos(x(i) - x(j));
                    g(i, i) -= c;
                    g(i, j) = c;
                }
            }
            break;
        case Kind::Kolmogorov:
            g(0, 1) = a_ * std::cos(x(1));
            g(1, 0) = 1.0;
            break;
    }
    return g;
}

Mat Drift::hessian_contract(const Vec& x, const Vec& y) const {
    Mat h = Mat::Zero(dim_, dim_);
    switch (kind_) {
        case Kind::Zero:
        case Kind::Linear:
            break;
        case Kind::Sin:
            for (int i = 0; i < dim_; ++i) h(i, i) = -a_ * std::sin(x(i)) * y(i);
            break;
        case Kind::GradientPotential:
            for (int i = 0; i < dim_; ++i) {
                h(i, i) = 2.0 * a_ * std::tanh(x(i)) * sech2(x(i)) * y(i);
                for (int j = 0; j < dim_; ++j) {
                    if (j == i) continue;
                    const double w = b_ * std::sin(x(i) - x(j)) * (y(i) - y(j));
                    h(i, i) += w;
                    h(i, j) -= w;
                }
            }
            break;
        case Kind::Kolmogorov:
            h(0, 1) = -a_ * std::sin(x(1)) * y(1);
            break;
    }
    return h;
}

std::optional<Eigen::MatrixXd> Drift::linear_matrix() const {
    if (kind_ == Kind::Linear) return B_;
    if (kind_ == Kind::Zero) return Eigen::MatrixXd::Zero(dim_, dim_);
    if (kind_ == Kind::Sin && a_ == 0.0) return Eigen::MatrixXd::Zero(dim_, dim_);
    if (kind_ == Kind::Kolmogorov && a_ == 0.0) {
        Eigen::MatrixXd B = Eigen::MatrixXd::Zero(2, 2);
        B(1, 0) = 1.0;
        return B;
    }
    return std::nullopt;
}

double Drift::jacobian_bound() const {
    switch (kind_) {
        case Kind::Zero: return 0.0;
        case Kind::Linear: return Eigen::JacobiSVD<Eigen::MatrixXd>(B_).singularValues()(0);
        case Kind::Sin: return std::abs(a_);
        case Kind::GradientPotential: return std::abs(a_) + 2.0 * std::abs(b_) * (dim_ - 1);
        case Kind::Kolmogorov: return std::max(1.0, std::abs(a_));
    }
    return 0.0;
}

}  // namespace levylab

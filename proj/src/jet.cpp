#include "levylab/jet.hpp"

#include <cmath>
#include <map>
#include <stdexcept>

namespace levylab {

namespace {

void enumerate(int dim, int order, std::vector<int>& current, int pos, int remaining,
               std::vector<std::vector<int>>& out) {
    if (pos == dim) {
        out.push_back(current);
        return;
    }
    for (int e = 0; e <= remaining; ++e) {
        current[static_cast<std::size_t>(pos)] = e;
        enumerate(dim, order, current, pos + 1, remaining - e, out);
    }
    current[static_cast<std::size_t>(pos)] = 0;
}

}  // namespace

JetSpace::JetSpace(int dim, int order) : dim_(dim), order_(order) {
    if (dim < 1 || order < 0) throw std::invalid_argument("JetSpace: need dim >= 1 and order >= 0");
    std::vector<std::vector<int>> all;
    std::vector<int> current(static_cast<std::size_t>(dim), 0);
    enumerate(dim, order, current, 0, order, all);
    // graded order: degree first, so the constant term is index 0
    for (int deg = 0; deg <= order; ++deg) {
        for (const auto& e : all) {
            int s = 0;
            for (int v : e) s += v;
            if (s == deg) {
                exponents_.push_back(e);
                degree_.push_back(deg);
            }
        }
    }
    std::map<std::vector<int>, int> lookup;
    for (int m = 0; m < size(); ++m) lookup[exponents_[static_cast<std::size_t>(m)]] = m;
    for (int a = 0; a < size(); ++a) {
        for (int b = 0; b < size(); ++b) {
            if (degree_[static_cast<std::size_t>(a)] + degree_[static_cast<std::size_t>(b)] > order) continue;
            std::vector<int> e = exponents_[static_cast<std::size_t>(a)];
            for (int i = 0; i < dim; ++i) e[static_cast<std::size_t>(i)] += exponents_[static_cast<std::size_t>(b)][static_cast<std::size_t>(i)];
            products_.push_back({a, b, lookup.at(e)});
        }
    }
    derivative_.resize(static_cast<std::size_t>(dim));
    for (int i = 0; i < dim; ++i) {
        auto& table = derivative_[static_cast<std::size_t>(i)];
        table.assign(static_cast<std::size_t>(size()), {-1, 0});
        for (int m = 0; m < size(); ++m) {
            std::vector<int> e = exponents_[static_cast<std::size_t>(m)];
            const int p = e[static_cast<std::size_t>(i)];
            if (p == 0) continue;
            e[static_cast<std::size_t>(i)] -= 1;
            table[static_cast<std::size_t>(m)] = {lookup.at(e), p};
        }
    }
}

int JetSpace::index_of(const std::vector<int>& exponent) const {
    for (int m = 0; m < size(); ++m)
        if (exponents_[static_cast<std::size_t>(m)] == exponent) return m;
    return -1;
}

Jet::Jet(std::shared_ptr<const JetSpace> space, double constant)
    : space_(std::move(space)), coeffs_(Eigen::VectorXd::Zero(space_->size())) {
    coeffs_(0) = constant;
}

Jet Jet::variable(std::shared_ptr<const JetSpace> space, int i, double at) {
    Jet j(space, at);
    if (space->order() >= 1) {
        std::vector<int> e(static_cast<std::size_t>(space->dim()), 0);
        e[static_cast<std::size_t>(i)] = 1;
        j.coeffs_(space->index_of(e)) = 1.0;
    }
    return j;
}

Jet Jet::derivative(int i) const {
    Jet out(space_, 0.0);
    const auto& table = space_->derivative(i);
    for (int m = 0; m < space_->size(); ++m) {
        const auto [target, p] = table[static_cast<std::size_t>(m)];
        if (target >= 0) out.coeffs_(target) += p * coeffs_(m);
    }
    return out;
}

double Jet::coefficient(const std::vector<int>& exponent) const {
    const int m = space_->index_of(exponent);
    return m < 0 ? 0.0 : coeffs_(m);
}

Jet& Jet::operator+=(const Jet& o) {
    coeffs_ += o.coeffs_;
    return *this;
}

Jet& Jet::operator-=(const Jet& o) {
    coeffs_ -= o.coeffs_;
    return *this;
}

Jet& Jet::operator*=(double s) {
    coeffs_ *= s;
    return *this;
}

Jet operator*(const Jet& a, const Jet& b) {
    Jet out(a.space_, 0.0);
    for (const auto& p : a.space_->products()) out.coeffs_(p.out) += a.coeffs_(p.a) * b.coeffs_(p.b);
    return out;
}

Jet Jet::compose(const std::vector<double>& derivs) const {
    const int order = space_->order();
    Jet shift = *this;
    shift.coeffs_(0) = 0.0;
    std::vector<double> taylor(static_cast<std::size_t>(order) + 1);
    double factorial = 1.0;
    for (int k = 0; k <= order; ++k) {
        if (k > 0) factorial *= k;
        taylor[static_cast<std::size_t>(k)] = derivs[static_cast<std::size_t>(k)] / factorial;
    }
    Jet result(space_, taylor[static_cast<std::size_t>(order)]);
    for (int k = order - 1; k >= 0; --k) {
        result = result * shift;
        result.coeffs_(0) += taylor[static_cast<std::size_t>(k)];
    }
    return result;
}

Jet sin(const Jet& x) {
    const int order = x.space()->order();
    const double s = std::sin(x.value()), c = std::cos(x.value());
    std::vector<double> d(static_cast<std::size_t>(order) + 1);
    const double cycle[4] = {s, c, -s, -c};
    for (int k = 0; k <= order; ++k) d[static_cast<std::size_t>(k)] = cycle[k % 4];
    return x.compose(d);
}

Jet cos(const Jet& x) {
    const int order = x.space()->order();
    const double s = std::sin(x.value()), c = std::cos(x.value());
    std::vector<double> d(static_cast<std::size_t>(order) + 1);
    const double cycle[4] = {c, -s, -c, s};
    for (int k = 0; k <= order; ++k) d[static_cast<std::size_t>(k)] = cycle[k % 4];
    return x.compose(d);
}

Jet exp(const Jet& x) {
    const std::vector<double> d(static_cast<std::size_t>(x.space()->order()) + 1, std::exp(x.value()));
    return x.compose(d);
}

std::vector<double> tanh_derivatives(double u, int order) {
    // d^k/du^k tanh = P_k(T), P_0 = T, P_{k+1}(T) = P_k'(T) (1 - T^2)
    const double t = std::tanh(u);
    std::vector<double> poly = {0.0, 1.0};
    std::vector<double> out;
    for (int k = 0; k <= order; ++k) {
        double v = 0.0;
        for (std::size_t i = poly.size(); i-- > 0;) v = v * t + poly[i];
        out.push_back(v);
        std::vector<double> deriv(poly.size() > 1 ? poly.size() - 1 : 1, 0.0);
        for (std::size_t i = 1; i < poly.size(); ++i) deriv[i - 1] = static_cast<double>(i) * poly[i];
        std::vector<double> next(deriv.size() + 2, 0.0);
        for (std::size_t i = 0; i < deriv.size(); ++i) {
            next[i] += deriv[i];
            next[i + 2] -= deriv[i];
        }
        poly = std::move(next);
    }
    return out;
}

Jet tanh(const Jet& x) { return x.compose(tanh_derivatives(x.value(), x.space()->order())); }

}  // namespace levylab

#include "levylab/test_functions.hpp"

#include <cmath>
#include <stdexcept>

namespace levylab {

TestFunction TestFunction::scaled(double c) const {
    TestFunction out;
    out.name = name;
    const TestFunction base = *this;
    out.value = [base, c](const Vec& x) { return c * base.value(x); };
    if (base.gradient) out.gradient = [base, c](const Vec& x) -> Vec { return c * base.gradient(x); };
    if (base.hessian) out.hessian = [base, c](const Vec& x) -> Mat { return c * base.hessian(x); };
    return out;
}

TestFunction constant_function(int dim, double c) {
    TestFunction f;
    f.name = "constant";
    f.value = [c](const Vec&) { return c; };
    f.gradient = [dim](const Vec&) -> Vec { return Vec::Zero(dim); };
    f.hessian = [dim](const Vec&) -> Mat { return Mat::Zero(dim, dim); };
    return f;
}

TestFunction coordinate_function(int dim, int j) {
    TestFunction f;
    f.name = "coordinate";
    f.value = [j](const Vec& x) { return x(j); };
    f.gradient = [dim, j](const Vec&) -> Vec {
        Vec g = Vec::Zero(dim);
        g(j) = 1.0;
        return g;
    };
    f.hessian = [dim](const Vec&) -> Mat { return Mat::Zero(dim, dim); };
    return f;
}

TestFunction square_function(int dim, int j) {
    TestFunction f;
    f.name = "square";
    f.value = [j](const Vec& x) { return x(j) * x(j); };
    f.gradient = [dim, j](const Vec& x) -> Vec {
        Vec g = Vec::Zero(dim);
        g(j) = 2.0 * x(j);
        return g;
    };
    f.hessian = [dim, j](const Vec&) -> Mat {
        Mat h = Mat::Zero(dim, dim);
        h(j, j) = 2.0;
        return h;
    };
    return f;
}

TestFunction tanh_function(int dim, int j) {
    TestFunction f;
    f.name = "tanh";
    f.value = [j](const Vec& x) { return std::tanh(x(j)); };
    f.gradient = [dim, j](const Vec& x) -> Vec {
        Vec g = Vec::Zero(dim);
        const double c = std::cosh(x(j));
        g(j) = 1.0 / (c * c);
        return g;
    };
    f.hessian = [dim, j](const Vec& x) -> Mat {
        Mat h = Mat::Zero(dim, dim);
        const double t = std::tanh(x(j));
        h(j, j) = -2.0 * t * (1.0 - t * t);
        return h;
    };
    return f;
}

TestFunction bump_function(const Vec& center, double radius) {
    TestFunction f;
    f.name = "bump";
    const double r2 = radius * radius;
    f.value = [center, r2](const Vec& x) {
        const double q = (x - center).squaredNorm() / r2;
        return q < 1.0 ? std::exp(-1.0 / (1.0 - q)) : 0.0;
    };
    // q = |x-c|^2 / r^2, g(q) = exp(-1/(1-q)), g' = -g/(1-q)^2, dq/dx = 2(x-c)/r^2
    f.gradient = [center, r2](const Vec& x) -> Vec {
        const Vec y = x - center;
        const double q = y.squaredNorm() / r2;
        if (q >= 1.0) return Vec::Zero(x.size());
        const double g = std::exp(-1.0 / (1.0 - q));
        const double gp = -g / ((1.0 - q) * (1.0 - q));
        return gp * 2.0 / r2 * y;
    };
    f.hessian = [center, r2](const Vec& x) -> Mat {
        const Vec y = x - center;
        const int d = static_cast<int>(x.size());
        const double q = y.squaredNorm() / r2;
        if (q >= 1.0) return Mat::Zero(d, d);
        const double s = 1.0 - q;
        const double g = std::exp(-1.0 / s);
        const double gp = -g / (s * s);
        // g'' = g (1 - 2s) / s^4
        const double gpp = g * (1.0 - 2.0 * s) / (s * s * s * s);
        Mat h = (gp * 2.0 / r2) * Mat::Identity(d, d);
        h += (gpp * 4.0 / (r2 * r2)) * (y * y.transpose());
        return h;
    };
    return f;
}

TestFunction halfspace_indicator(const Vec& normal, double offset) {
    TestFunction f;
    f.name = "halfspace";
    f.value = [normal, offset](const Vec& x) { return normal.dot(x) > offset ? 1.0 : 0.0; };
    return f;
}

TestFunction gaussian_bump(const Vec& center, double width) {
    TestFunction f;
    f.name = "gaussian";
    const double s2 = width * width;
    f.value = [center, s2](const Vec& x) { return std::exp(-0.5 * (x - center).squaredNorm() / s2); };
    f.gradient = [center, s2](const Vec& x) -> Vec {
        const Vec y = x - center;
        return -std::exp(-0.5 * y.squaredNorm() / s2) / s2 * y;
    };
    f.hessian = [center, s2](const Vec& x) -> Mat {
        const Vec y = x - center;
        const int d = static_cast<int>(x.size());
        const double g = std::exp(-0.5 * y.squaredNorm() / s2);
        Mat h = (y * y.transpose()) / (s2 * s2);
        h -= Mat::Identity(d, d) / s2;
        return g * h;
    };
    return f;
}

TestFunction make_test_function(const std::string& name, int dim, int index, double param, const Vec& center) {
    if (index < 0 || index >= dim) throw std::invalid_argument("test function index out of range");
    if (name == "constant") return constant_function(dim, param);
    if (name == "coordinate") return coordinate_function(dim, index);
    if (name == "square") return square_function(dim, index);
    if (name == "tanh") return tanh_function(dim, index);
    if (name == "bump") return bump_function(center, param);
    if (name == "gaussian") return gaussian_bump(center, param);
    if (name == "halfspace") {
        Vec u = Vec::Zero(dim);
        u(index) = 1.0;
        return halfspace_indicator(u, param);
    }
    throw std::invalid_argument("unknown test function '" + name + "'");
}

}  // namespace levylab

#pragma once

#include "levylab/types.hpp"

#include <functional>
#include <string>

namespace levylab {

/// Scalar observable with optional derivative oracles. Discontinuous
/// functions leave `gradient` and `hessian` empty.
struct TestFunction {
    std::string name;
    std::function<double(const Vec&)> value;
    std::function<Vec(const Vec&)> gradient;
    std::function<Mat(const Vec&)> hessian;

    bool smooth() const { return static_cast<bool>(gradient); }
    double operator()(const Vec& x) const { return value(x); }

    /// Multiplies every value and derivative by c.
    TestFunction scaled(double c) const;
};

TestFunction constant_function(int dim, double c);
/// f(x) = x_j (0-based j)
TestFunction coordinate_function(int dim, int j);
/// f(x) = x_j^2
TestFunction square_function(int dim, int j);
/// f(x) = tanh(x_j)
TestFunction tanh_function(int dim, int j);
/// f(x) = exp(-1 / (1 - |x - c|^2 / r^2)) inside the ball, 0 outside
TestFunction bump_function(const Vec& center, double radius);
/// f(x) = 1{u . x > a}
TestFunction halfspace_indicator(const Vec& normal, double offset);
/// f(x) = exp(-|x - c|^2 / (2 s^2))
TestFunction gaussian_bump(const Vec& center, double width);

/// Resolves a preset by name: constant, coordinate, square, tanh, bump,
/// halfspace, gaussian. `params` holds (index / offset / radius) as applicable.
TestFunction make_test_function(const std::string& name, int dim, int index, double param, const Vec& center);

}  // namespace levylab

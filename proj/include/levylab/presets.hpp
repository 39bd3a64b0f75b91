#pragma once

#include "levylab/flow.hpp"

#include <string>
#include <vector>

namespace levylab {

/// Named model + noise pairs used by the acceptance runs and the CLI.
///
///   gaussian          d=1, b = -x, A1 = 1, no jumps
///   kolmogorov        d=2, b = (sin x2, x1), A1 = 0, A2 = diag(1, 0), alpha = 1 pure power
///   kolmogorov_mixed  kolmogorov with A1 = diag(1/2, 0) and big jumps at rate 1/2
///   pure_jump         d=2, b = sin, A1 = 0, A2 = I, a(z) = 1 + z1^2 / 2
///   jump1d            d=1, b = 0, A1 = A2 = 1, kappa = |z|^-2 with Gaussian substitute
struct Preset {
    ModelSpec model;
    LevyMeasureSpec levy;
    Vec x0;
    double horizon = 1.0;
};

Preset make_preset(const std::string& name);
std::vector<std::string> preset_names();

}  // namespace levylab

#include "levylab/presets.hpp"

namespace levylab {

namespace {

Eigen::MatrixXd diag2(double a, double b) {
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(2, 2);
    m(0, 0) = a;
    m(1, 1) = b;
    return m;
}

Vec vec2(double a, double b) {
    Vec v(2);
    v << a, b;
    return v;
}

}  // namespace

std::vector<std::string> preset_names() { return {"gaussian", "kolmogorov", "kolmogorov_mixed", "pure_jump", "jump1d"}; }

Preset make_preset(const std::string& name) {
    Preset p;
    if (name == "gaussian") {
        p.model.name = name;
        p.model.drift = Drift::linear(-Eigen::MatrixXd::Identity(1, 1));
        p.model.A1 = Eigen::MatrixXd::Identity(1, 1);
        p.model.A2 = Eigen::MatrixXd::Zero(1, 1);
        p.levy = pure_power_measure(1, 1.0, 1.0, 1.0);
        p.x0 = Vec::Constant(1, 0.5);
    } else if (name == "kolmogorov" || name == "kolmogorov_mixed") {
        const bool mixed = name == "kolmogorov_mixed";
        p.model.name = name;
        p.model.drift = Drift::kolmogorov(1.0);
        p.model.A1 = diag2(mixed ? 0.5 : 0.0, 0.0);
        p.model.A2 = diag2(1.0, 0.0);
        p.levy = pure_power_measure(2, 1.0, 1.0, 0.02);
        p.levy.big_jump_rate = mixed ? 0.5 : 0.0;
        p.x0 = vec2(0.2, -0.3);
    } else if (name == "pure_jump") {
        p.model.name = name;
        p.model.drift = Drift::sin(2, 1.0);
        p.model.A1 = Eigen::MatrixXd::Zero(2, 2);
        p.model.A2 = Eigen::MatrixXd::Identity(2, 2);
        p.levy = stable_like_measure(2, 1.0, "1 + 0.5*z1^2", 1.5, 0.02);
        p.x0 = vec2(0.3, 0.1);
    } else if (name == "jump1d") {
        p.model.name = name;
        p.model.drift = Drift::zero(1);
        p.model.A1 = Eigen::MatrixXd::Identity(1, 1);
        p.model.A2 = Eigen::MatrixXd::Identity(1, 1);
        p.levy = pure_power_measure(1, 1.0, 1.0, 0.01);
        p.levy.gaussian_substitute = true;
        p.levy.prepare();
        p.x0 = Vec::Zero(1);
    } else {
        throw ConfigurationError("unknown preset '" + name + "'");
    }
    return p;
}

}  // namespace levylab

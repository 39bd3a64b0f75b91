#pragma once

#include "levylab/flow.hpp"
#include "levylab/malliavin.hpp"
#include "levylab/mc.hpp"

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace levylab {

/// All validation problems found in one pass, each prefixed with its line.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(std::vector<std::string> errors);
    const std::vector<std::string>& errors() const { return errors_; }

private:
    std::vector<std::string> errors_;
};

/// Observable named in a command section (function = ..., index, param, center).
struct FunctionChoice {
    std::string name = "tanh";
    int index = 0;
    double param = 0.0;
    std::vector<double> center;
};

struct PerturbationChoice {
    std::string kind = "canonical";  ///< canonical | constant_h | zeta_direction
    int index = 0;
    std::vector<double> vector;
};

struct NoiseSection {
    std::vector<double> orey_eps{1e-1, 1e-2, 1e-3};
    double moment_p = 2.0;
    int paths = 16;
    bool write_sample = false;
};

struct SimulateSection {
    int paths = 1;
    bool jacobians = true;
};

struct BracketsSection {
    int order = 2;
    double tol = 1e-10;
    std::vector<double> points;  ///< flattened, dim entries per point; empty = x0
};

struct ConSection {
    double lo = -1.0;
    double hi = 1.0;
    int points = 5;  ///< per axis
};

struct IbpSection {
    FunctionChoice function;
    PerturbationChoice perturbation;
};

struct GirsanovSection {
    FunctionChoice function;
    PerturbationChoice perturbation;
    std::vector<double> eps{0.2, 0.1, 0.05};
};

struct GradientSection {
    FunctionChoice function;
    int coordinate = 0;
    std::string side = "initial";  ///< initial | terminal
    double fd_step = 1e-2;
};

struct DensitySection {
    std::vector<double> lo;
    std::vector<double> hi;
    int points = 41;
};

struct SmallballSection {
    int directions = 32;
    std::vector<double> eps{1e-1, 1e-2, 1e-3, 1e-4};
    double moment_p = 1.0;
};

struct DecomposeSection {
    FunctionChoice function;
};

struct ExperimentConfig {
    ModelSpec model;
    LevyMeasureSpec levy;
    McConfig mc;
    Vec x0;
    NoiseSection noise;
    SimulateSection simulate;
    BracketsSection brackets;
    ConSection con;
    IbpSection ibp;
    GirsanovSection girsanov;
    GradientSection gradient;
    DensitySection density;
    SmallballSection smallball;
    DecomposeSection decompose;
    std::string output_dir;  ///< empty = not set
    std::string text;        ///< source text, hashed for provenance
};

/// Sectioned key = value text; '#' starts a comment. Arrays are comma or
/// whitespace separated numbers, matrices row-major. Throws ConfigError.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);

TestFunction resolve_function(const FunctionChoice& choice, int dim);
Perturbation resolve_perturbation(const PerturbationChoice& choice, int dim);

}  // namespace levylab

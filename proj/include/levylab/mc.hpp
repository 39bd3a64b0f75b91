#pragma once

#include "levylab/levy_noise.hpp"

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace levylab {

struct McConfig {
    std::size_t samples = 10000;
    double step = 1e-3;
    double horizon = 1.0;
    std::uint64_t seed = 1;
    unsigned threads = 1;
    std::string stream = "mc";
    /// Per-dimension KDE bandwidth; empty selects the Scott rule.
    std::vector<double> bandwidth;
    double bandwidth_scale = 1.0;
    int cutoff_level = 1000000;
    double ridge = 1e-12;
    /// Pair sample 2m with the sign-flipped noise of sample 2m+1.
    bool antithetic = false;
};

void validate(const McConfig& cfg);

struct Estimate {
    double mean = 0.0;
    double std_error = 0.0;
    std::size_t samples = 0;
};

/// Sample mean and standard error; with `paired`, consecutive entries are
/// averaged first (antithetic pairs).
Estimate summarize(const std::vector<double>& values, bool paired = false);

/// Noise of sample `index` under cfg: stream (cfg.seed, cfg.stream, index), or
/// the sign-flipped partner when cfg.antithetic and index is odd.
NoiseRealization sample_path_noise(const LevyMeasureSpec& spec, const McConfig& cfg, std::size_t index);

/// Brownian increments, substitute increments and all marks multiplied by -1.
NoiseRealization negate_noise(const NoiseRealization& noise);

}  // namespace levylab

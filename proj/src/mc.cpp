#include "levylab/mc.hpp"

#include <cmath>

namespace levylab {

void validate(const McConfig& cfg) {
    if (cfg.samples < 1) throw ConfigurationError("samples must be at least 1");
    if (!(cfg.step > 0.0)) throw ConfigurationError("step must be positive");
    if (!(cfg.horizon > 0.0)) throw ConfigurationError("horizon must be positive");
    for (double b : cfg.bandwidth)
        if (!(b > 0.0)) throw ConfigurationError("bandwidth must be positive");
    if (!(cfg.bandwidth_scale > 0.0)) throw ConfigurationError("bandwidth scale must be positive");
    if (cfg.cutoff_level < 1) throw ConfigurationError("cutoff level must be at least 1");
    if (cfg.antithetic && cfg.samples % 2 != 0) throw ConfigurationError("antithetic sampling needs an even sample count");
}

Estimate summarize(const std::vector<double>& values, bool paired) {
    std::vector<double> pairs;
    const std::vector<double>* data = &values;
    if (paired) {
        pairs.reserve(values.size() / 2);
        for (std::size_t i = 0; i + 1 < values.size(); i += 2) pairs.push_back(0.5 * (values[i] + values[i + 1]));
        data = &pairs;
    }
    Estimate e;
    e.samples = values.size();
    const std::size_t n = data->size();
    if (n == 0) return e;
    double sum = 0.0;
    for (double v : *data) sum += v;
    e.mean = sum / static_cast<double>(n);
    if (n > 1) {
        double ss = 0.0;
        for (double v : *data) ss += (v - e.mean) * (v - e.mean);
        e.std_error = std::sqrt(ss / static_cast<double>(n - 1) / static_cast<double>(n));
    }
    return e;
}

NoiseRealization negate_noise(const NoiseRealization& noise) {
    NoiseRealization out = noise;
    out.brownian = -noise.brownian;
    if (noise.substitute.size() > 0) out.substitute = -noise.substitute;
    for (auto& e : out.small_jumps) e.mark = -e.mark;
    for (auto& e : out.big_jumps) e.mark = -e.mark;
    return out;
}

NoiseRealization sample_path_noise(const LevyMeasureSpec& spec, const McConfig& cfg, std::size_t index) {
    if (cfg.antithetic) {
        const NoiseRealization base =
            sample_noise(spec, cfg.horizon, cfg.step, derive_seed(cfg.seed, cfg.stream, index / 2));
        return (index % 2 == 0) ? base : negate_noise(base);
    }
    return sample_noise(spec, cfg.horizon, cfg.step, derive_seed(cfg.seed, cfg.stream, index));
}

}  // namespace levylab

#include "levylab/levy_noise.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

namespace levylab {

namespace {

double radius_of(const Eigen::Ref<const Eigen::VectorXd>& z) { return z.norm(); }

void random_direction(Engine& engine, std::normal_distribution<double>& normal, Eigen::Ref<Eigen::VectorXd> out) {
    const int d = static_cast<int>(out.size());
    if (d == 1) {
        out(0) = (engine() >> 63) ? 1.0 : -1.0;
        return;
    }
    double n2 = 0.0;
    do {
        for (int i = 0; i < d; ++i) out(i) = normal(engine);
        n2 = out.squaredNorm();
    } while (n2 < 1e-300);
    out /= std::sqrt(n2);
}

double envelope_mass(const LevyMeasureSpec& spec) {
    // a_max * |S^{d-1}| * (delta^{-alpha} - 1) / alpha
    if (spec.inner_cutoff >= 1.0) return 0.0;
    return spec.envelope * sphere_area(spec.dim) * (std::pow(spec.inner_cutoff, -spec.alpha) - 1.0) / spec.alpha;
}

std::shared_ptr<LevyMeasureSpec::Cache> compute_cache(const LevyMeasureSpec& spec) {
    auto c = std::make_shared<LevyMeasureSpec::Cache>();
    c->alpha = spec.alpha;
    c->envelope = spec.envelope;
    c->inner_cutoff = spec.inner_cutoff;
    c->dim = spec.dim;
    c->amplitude = spec.amplitude.text();
    c->substitute = spec.gaussian_substitute;
    c->band_intensity = band_intensity(spec);
    c->envelope_intensity = envelope_mass(spec);
    if (spec.gaussian_substitute) {
        const Eigen::MatrixXd cov = small_jump_covariance(spec);
        Eigen::LLT<Eigen::MatrixXd> llt(cov);
        if (llt.info() != Eigen::Success)
            throw ConfigurationError("gaussian substitute covariance is not positive definite");
        c->substitute_factor = llt.matrixL();
    }
    return c;
}

bool cache_matches(const LevyMeasureSpec::Cache& c, const LevyMeasureSpec& spec) {
    return c.alpha == spec.alpha && c.envelope == spec.envelope && c.inner_cutoff == spec.inner_cutoff &&
           c.dim == spec.dim && c.amplitude == spec.amplitude.text() && c.substitute == spec.gaussian_substitute;
}

}  // namespace

double LevyMeasureSpec::amplitude_at(const Eigen::Ref<const Eigen::VectorXd>& z) const {
    if (amplitude.is_constant()) return amplitude.constant_value();
    return amplitude.eval<double>(z);
}

double LevyMeasureSpec::kappa(const Eigen::Ref<const Eigen::VectorXd>& z) const {
    const double r = radius_of(z);
    return amplitude_at(z) * std::pow(r, -dim - alpha);
}

Vec LevyMeasureSpec::grad_log_kappa(const Eigen::Ref<const Eigen::VectorXd>& z) const {
    const double r2 = z.squaredNorm();
    Vec g = -(dim + alpha) / r2 * z;
    if (!amplitude.is_constant()) {
        Eigen::VectorXd grad;
        const double a = amplitude.value_and_gradient(z, grad);
        g += grad / a;
    }
    return g;
}

void LevyMeasureSpec::prepare() { cache = compute_cache(*this); }

std::shared_ptr<const LevyMeasureSpec::Cache> LevyMeasureSpec::prepared() const {
    if (cache && cache_matches(*cache, *this)) return cache;
    return compute_cache(*this);
}

LevyMeasureSpec pure_power_measure(int dim, double alpha, double scale, double inner_cutoff) {
    LevyMeasureSpec spec;
    spec.dim = dim;
    spec.alpha = alpha;
    spec.amplitude = Expression(scale);
    spec.envelope = scale;
    spec.inner_cutoff = inner_cutoff;
    spec.prepare();
    return spec;
}

LevyMeasureSpec stable_like_measure(int dim, double alpha, const std::string& amplitude, double envelope,
                                    double inner_cutoff) {
    LevyMeasureSpec spec;
    spec.dim = dim;
    spec.alpha = alpha;
    spec.amplitude = Expression::parse(amplitude, dim);
    spec.envelope = envelope;
    spec.inner_cutoff = inner_cutoff;
    spec.prepare();
    return spec;
}

double band_intensity(const LevyMeasureSpec& spec) {
    if (spec.inner_cutoff >= 1.0) return 0.0;
    auto f = [&](const Eigen::VectorXd& z) { return spec.kappa(z); };
    return integrate_shell(f, spec.dim, spec.inner_cutoff, 1.0, spec.quadrature).value;
}

Eigen::MatrixXd small_jump_covariance(const LevyMeasureSpec& spec) {
    const int d = spec.dim;
    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(d, d);
    const double upper = std::min(spec.inner_cutoff, 1.0);
    for (int i = 0; i < d; ++i) {
        for (int j = i; j < d; ++j) {
            auto f = [&](const Eigen::VectorXd& z) { return z(i) * z(j) * spec.kappa(z); };
            cov(i, j) = cov(j, i) = integrate_shell(f, d, 0.0, upper, spec.quadrature).value;
        }
    }
    return cov;
}

LevyDiagnostics validate(const LevyMeasureSpec& spec, std::uint64_t seed) {
    std::ostringstream problems;
    if (spec.dim < 1 || spec.dim > kMaxDim) problems << "dim must lie in [1," << kMaxDim << "]; ";
    if (!(spec.alpha > 0.0 && spec.alpha < 2.0)) problems << "alpha must lie in (0,2); ";
    if (!(spec.inner_cutoff > 0.0 && spec.inner_cutoff <= 1.0)) problems << "delta must lie in (0,1]; ";
    if (!(spec.big_jump_rate >= 0.0)) problems << "big_jump_rate must be nonnegative; ";
    if (!(spec.big_jump_law.r_min >= 1.0 && spec.big_jump_law.r_max >= spec.big_jump_law.r_min))
        problems << "big-jump shell must satisfy 1 <= r_min <= r_max; ";
    if (!(spec.envelope > 0.0)) problems << "envelope must be positive; ";
    if (spec.amplitude.dim() != 0 && !spec.amplitude.is_constant() && spec.amplitude.dim() != spec.dim)
        problems << "amplitude expression dimension does not match dim; ";
    if (!problems.str().empty()) throw ConfigurationError(problems.str());

    LevyDiagnostics diag;
    Engine engine = make_engine(seed);
    std::normal_distribution<double> normal;
    std::uniform_real_distribution<double> uniform;
    Eigen::VectorXd z(spec.dim);
    for (int k = 0; k < 512; ++k) {
        random_direction(engine, normal, z);
        const double r = std::pow(10.0, -4.0 * uniform(engine));
        z *= std::min(r, 0.999);
        const double kp = spec.kappa(z);
        const double km = spec.kappa(-z);
        if (!(kp > 0.0) || !std::isfinite(kp)) {
            std::ostringstream msg;
            msg << "kappa must be positive and finite; got " << kp << " at |z| = " << z.norm();
            throw ConfigurationError(msg.str());
        }
        diag.max_symmetry_defect = std::max(diag.max_symmetry_defect, std::abs(kp - km) / kp);
        if (spec.amplitude_at(z) > spec.envelope * (1.0 + 1e-12)) {
            std::ostringstream msg;
            msg << "amplitude a(z) = " << spec.amplitude_at(z) << " exceeds the envelope constant a_max = "
                << spec.envelope;
            throw ConfigurationError(msg.str());
        }
        diag.grad_log_bound = std::max(diag.grad_log_bound, z.norm() * spec.grad_log_kappa(z).norm());
    }
    if (diag.max_symmetry_defect > 1e-12) {
        std::ostringstream msg;
        msg << "kappa is not symmetric: relative defect " << diag.max_symmetry_defect;
        throw ConfigurationError(msg.str());
    }
    const auto cache = spec.prepared();
    diag.band_intensity = cache->band_intensity;
    diag.envelope_intensity = cache->envelope_intensity;
    diag.acceptance_rate = diag.envelope_intensity > 0.0 ? diag.band_intensity / diag.envelope_intensity : 1.0;
    if (!std::isfinite(diag.band_intensity)) throw ConfigurationError("kappa has infinite mass on the band");
    return diag;
}

std::vector<OreyRow> orey_constant(const LevyMeasureSpec& spec, const std::vector<double>& eps_list) {
    if (eps_list.empty()) throw ConfigurationError("orey_constant: eps_list is empty");
    std::vector<OreyRow> rows;
    for (const double eps : eps_list) {
        if (!(eps > 0.0 && eps < 1.0)) throw ConfigurationError("orey_constant: eps must lie in (0,1)");
        auto f = [&](const Eigen::VectorXd& z) { return z.squaredNorm() * spec.kappa(z); };
        const QuadratureResult q = integrate_shell(f, spec.dim, 0.0, eps, spec.quadrature);
        const double scale = std::pow(eps, spec.alpha - 2.0);
        rows.push_back({eps, scale * q.value, scale * q.error});
    }
    return rows;
}

std::vector<MomentRow> moment_lowerbound_check(const LevyMeasureSpec& spec, double p,
                                               const std::vector<double>& eps_list) {
    if (!(p >= 2.0)) throw ConfigurationError("moment_lowerbound_check: p must be at least 2");
    if (eps_list.empty()) throw ConfigurationError("moment_lowerbound_check: eps_list is empty");
    std::vector<MomentRow> rows;
    for (const double eps : eps_list) {
        if (!(eps > 0.0 && eps <= 1.0)) throw ConfigurationError("moment_lowerbound_check: eps must lie in (0,1]");
        auto f = [&](const Eigen::VectorXd& z) { return std::pow(z.norm(), p) * spec.kappa(z); };
        const QuadratureResult q = integrate_shell(f, spec.dim, 0.0, eps, spec.quadrature);
        rows.push_back({eps, q.value, q.value / std::pow(eps, p - spec.alpha), q.error});
    }
    return rows;
}

QuadratureResult compensator_integral(const LevyMeasureSpec& spec,
                                      const std::function<double(const Eigen::VectorXd&)>& f, double lower,
                                      double upper) {
    if (!(lower >= 0.0 && upper > lower && upper <= 1.0))
        throw ConfigurationError("compensator_integral: need 0 <= lower < upper <= 1");
    auto g = [&](const Eigen::VectorXd& z) {
        const double even = 0.5 * (f(z) + f(-z));
        return even == 0.0 ? 0.0 : even * spec.kappa(z);
    };
    return integrate_shell(g, spec.dim, lower, upper, spec.quadrature);
}

bool NoiseRealization::operator==(const NoiseRealization& o) const {
    auto same_events = [](const std::vector<JumpEvent>& a, const std::vector<JumpEvent>& b) {
        if (a.size() != b.size()) return false;
        for (std::size_t i = 0; i < a.size(); ++i)
            if (a[i].time != b[i].time || a[i].grid_index != b[i].grid_index || a[i].mark != b[i].mark) return false;
        return true;
    };
    return dim == o.dim && horizon == o.horizon && macro_step == o.macro_step && seed == o.seed && grid == o.grid &&
           brownian.rows() == o.brownian.rows() && brownian.cols() == o.brownian.cols() && brownian == o.brownian &&
           substitute.rows() == o.substitute.rows() && substitute.cols() == o.substitute.cols() &&
           substitute == o.substitute && same_events(small_jumps, o.small_jumps) &&
           same_events(big_jumps, o.big_jumps);
}

namespace {

std::vector<double> macro_grid(double horizon, double macro_step) {
    const int m = std::max(1, static_cast<int>(std::ceil(horizon / macro_step - 1e-9)));
    std::vector<double> grid(static_cast<std::size_t>(m) + 1);
    for (int k = 0; k <= m; ++k) grid[static_cast<std::size_t>(k)] = horizon * k / m;
    grid.back() = horizon;
    return grid;
}

void sample_small_jumps(const LevyMeasureSpec& spec, const LevyMeasureSpec::Cache& cache, double horizon,
                        Engine& engine, std::normal_distribution<double>& normal,
                        std::vector<JumpEvent>& out) {
    if (spec.inner_cutoff >= 1.0 || cache.envelope_intensity <= 0.0) return;
    const double acceptance = cache.band_intensity / cache.envelope_intensity;
    if (acceptance < spec.acceptance_floor) {
        std::ostringstream msg;
        msg << "rejection sampler acceptance rate " << acceptance << " is below the floor " << spec.acceptance_floor
            << "; the envelope constant a_max = " << spec.envelope << " is too large for this kappa";
        throw ConfigurationError(msg.str());
    }
    std::uniform_real_distribution<double> uniform;
    std::poisson_distribution<long> count(cache.envelope_intensity * horizon);
    const long proposals = count(engine);
    const double tail = std::pow(spec.inner_cutoff, -spec.alpha) - 1.0;
    const bool constant = spec.amplitude.is_constant();
    const double accept_constant = constant ? spec.amplitude.constant_value() / spec.envelope : 1.0;
    Eigen::VectorXd z(spec.dim);
    for (long i = 0; i < proposals; ++i) {
        const double time = horizon * (1.0 - uniform(engine));
        const double r = std::pow(1.0 + uniform(engine) * tail, -1.0 / spec.alpha);
        random_direction(engine, normal, z);
        z *= r;
        const double u = uniform(engine);
        const double a = constant ? spec.amplitude.constant_value() : spec.amplitude.eval<double>(z);
        if (a > spec.envelope * (1.0 + 1e-12)) {
            std::ostringstream msg;
            msg << "amplitude a(z) = " << a << " exceeds the envelope constant a_max = " << spec.envelope;
            throw ConfigurationError(msg.str());
        }
        const double p = constant ? accept_constant : a / spec.envelope;
        if (u < p) out.push_back({time, z, 0});
    }
}

void sample_big_jumps(const LevyMeasureSpec& spec, double horizon, Engine& engine,
                      std::normal_distribution<double>& normal, std::vector<JumpEvent>& out) {
    if (spec.big_jump_rate <= 0.0) return;
    std::uniform_real_distribution<double> uniform;
    std::poisson_distribution<long> count(spec.big_jump_rate * horizon);
    const long n = count(engine);
    const double lo = std::pow(spec.big_jump_law.r_min, spec.dim);
    const double hi = std::pow(spec.big_jump_law.r_max, spec.dim);
    Eigen::VectorXd z(spec.dim);
    for (long i = 0; i < n; ++i) {
        const double time = horizon * (1.0 - uniform(engine));
        const double r = std::pow(lo + uniform(engine) * (hi - lo), 1.0 / spec.dim);
        random_direction(engine, normal, z);
        out.push_back({time, r * z, 0});
    }
}

void finish_noise(const LevyMeasureSpec& spec, const LevyMeasureSpec::Cache& cache, NoiseRealization& noise,
                  Engine& engine, std::normal_distribution<double>& normal) {
    auto by_time = [](const JumpEvent& a, const JumpEvent& b) { return a.time < b.time; };
    std::sort(noise.small_jumps.begin(), noise.small_jumps.end(), by_time);
    std::sort(noise.big_jumps.begin(), noise.big_jumps.end(), by_time);
    std::vector<double> grid = macro_grid(noise.horizon, noise.macro_step);
    for (const auto& e : noise.small_jumps) grid.push_back(e.time);
    for (const auto& e : noise.big_jumps) grid.push_back(e.time);
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
    noise.grid = std::move(grid);
    auto index_of = [&](double t) {
        return static_cast<int>(std::lower_bound(noise.grid.begin(), noise.grid.end(), t) - noise.grid.begin());
    };
    for (auto& e : noise.small_jumps) e.grid_index = index_of(e.time);
    for (auto& e : noise.big_jumps) e.grid_index = index_of(e.time);

    const int d = spec.dim;
    const int cells = noise.cells();
    noise.brownian.resize(d, cells);
    for (int k = 0; k < cells; ++k) {
        const double s = std::sqrt(noise.grid[static_cast<std::size_t>(k) + 1] - noise.grid[static_cast<std::size_t>(k)]);
        for (int i = 0; i < d; ++i) noise.brownian(i, k) = s * normal(engine);
    }
    if (spec.gaussian_substitute && spec.inner_cutoff > 0.0) {
        noise.substitute.resize(d, cells);
        Eigen::VectorXd g(d);
        for (int k = 0; k < cells; ++k) {
            const double s =
                std::sqrt(noise.grid[static_cast<std::size_t>(k) + 1] - noise.grid[static_cast<std::size_t>(k)]);
            for (int i = 0; i < d; ++i) g(i) = normal(engine);
            noise.substitute.col(k) = s * (cache.substitute_factor * g);
        }
    }
}

NoiseRealization sample_impl(const LevyMeasureSpec& spec, double horizon, double macro_step, Engine& engine,
                             bool with_big) {
    if (!(horizon > 0.0)) throw ConfigurationError("sample_noise: horizon must be positive");
    if (!(macro_step > 0.0)) throw ConfigurationError("sample_noise: macro step must be positive");
    const auto cache = spec.prepared();
    NoiseRealization noise;
    noise.dim = spec.dim;
    noise.horizon = horizon;
    noise.macro_step = macro_step;
    std::normal_distribution<double> normal;
    sample_small_jumps(spec, *cache, horizon, engine, normal, noise.small_jumps);
    if (with_big) sample_big_jumps(spec, horizon, engine, normal, noise.big_jumps);
    finish_noise(spec, *cache, noise, engine, normal);
    return noise;
}

}  // namespace

NoiseRealization sample_noise(const LevyMeasureSpec& spec, double horizon, double macro_step, std::uint64_t seed) {
    Engine engine = make_engine(seed);
    NoiseRealization noise = sample_impl(spec, horizon, macro_step, engine, true);
    noise.seed = seed;
    return noise;
}

NoiseRealization sample_small_noise(const LevyMeasureSpec& spec, double horizon, double macro_step, Engine& engine) {
    return sample_impl(spec, horizon, macro_step, engine, false);
}

NoiseRealization coarsen_noise(const NoiseRealization& fine, double coarse_step) {
    const std::vector<double> coarse_macro = macro_grid(fine.horizon, coarse_step);
    const double tol = 1e-9 * fine.horizon;
    std::vector<char> keep(fine.grid.size(), 0);
    std::size_t f = 0;
    for (const double t : coarse_macro) {
        while (f < fine.grid.size() && fine.grid[f] < t - tol) ++f;
        if (f == fine.grid.size() || std::abs(fine.grid[f] - t) > tol)
            throw ConfigurationError("coarsen_noise: coarse macro grid is not contained in the fine grid");
        keep[f] = 1;
    }
    for (const auto& e : fine.small_jumps) keep[static_cast<std::size_t>(e.grid_index)] = 1;
    for (const auto& e : fine.big_jumps) keep[static_cast<std::size_t>(e.grid_index)] = 1;

    NoiseRealization out;
    out.dim = fine.dim;
    out.horizon = fine.horizon;
    out.macro_step = coarse_step;
    out.seed = fine.seed;
    std::vector<int> new_index(fine.grid.size(), -1);
    for (std::size_t k = 0; k < fine.grid.size(); ++k) {
        if (keep[k]) {
            new_index[k] = static_cast<int>(out.grid.size());
            out.grid.push_back(fine.grid[k]);
        }
    }
    const int cells = out.cells();
    out.brownian = Eigen::MatrixXd::Zero(fine.dim, cells);
    const bool subst = fine.substitute.size() > 0;
    if (subst) out.substitute = Eigen::MatrixXd::Zero(fine.dim, cells);
    int current = 0;
    for (int k = 0; k < fine.cells(); ++k) {
        out.brownian.col(current) += fine.brownian.col(k);
        if (subst) out.substitute.col(current) += fine.substitute.col(k);
        if (keep[static_cast<std::size_t>(k) + 1]) ++current;
    }
    out.small_jumps = fine.small_jumps;
    out.big_jumps = fine.big_jumps;
    for (auto& e : out.small_jumps) e.grid_index = new_index[static_cast<std::size_t>(e.grid_index)];
    for (auto& e : out.big_jumps) e.grid_index = new_index[static_cast<std::size_t>(e.grid_index)];
    return out;
}

NoiseRealization restrict_noise(const NoiseRealization& noise, double t0, double t1) {
    auto find = [&](double t) {
        const auto it = std::lower_bound(noise.grid.begin(), noise.grid.end(), t - 1e-12 * noise.horizon);
        if (it == noise.grid.end() || std::abs(*it - t) > 1e-12 * noise.horizon)
            throw ConfigurationError("restrict_noise: endpoints must be grid points");
        return static_cast<int>(it - noise.grid.begin());
    };
    const int i0 = find(t0);
    const int i1 = find(t1);
    if (i1 <= i0) throw ConfigurationError("restrict_noise: need t0 < t1");
    NoiseRealization out;
    out.dim = noise.dim;
    out.macro_step = noise.macro_step;
    out.seed = noise.seed;
    const double base = noise.grid[static_cast<std::size_t>(i0)];
    for (int k = i0; k <= i1; ++k) out.grid.push_back(noise.grid[static_cast<std::size_t>(k)] - base);
    out.grid.front() = 0.0;
    out.horizon = out.grid.back();
    out.brownian = noise.brownian.middleCols(i0, i1 - i0);
    if (noise.substitute.size() > 0) out.substitute = noise.substitute.middleCols(i0, i1 - i0);
    auto copy = [&](const std::vector<JumpEvent>& in, std::vector<JumpEvent>& dst) {
        for (const auto& e : in) {
            if (e.grid_index > i0 && e.grid_index <= i1)
                dst.push_back({out.grid[static_cast<std::size_t>(e.grid_index - i0)], e.mark, e.grid_index - i0});
        }
    };
    copy(noise.small_jumps, out.small_jumps);
    copy(noise.big_jumps, out.big_jumps);
    return out;
}

void write_noise(std::ostream& out, const NoiseRealization& noise) {
    const auto old_precision = out.precision(17);
    out << "levylab-noise 1\n";
    out << "meta " << noise.dim << ' ' << noise.seed << ' ' << noise.horizon << ' ' << noise.macro_step << '\n';
    for (int k = 0; k < noise.cells(); ++k) {
        out << "cell " << noise.grid[static_cast<std::size_t>(k)] << ' ' << noise.grid[static_cast<std::size_t>(k) + 1];
        for (int i = 0; i < noise.dim; ++i) out << ' ' << noise.brownian(i, k);
        out << '\n';
    }
    if (noise.substitute.size() > 0) {
        for (int k = 0; k < noise.cells(); ++k) {
            out << "gauss " << noise.grid[static_cast<std::size_t>(k)];
            for (int i = 0; i < noise.dim; ++i) out << ' ' << noise.substitute(i, k);
            out << '\n';
        }
    }
    auto events = [&](const char* kind, const std::vector<JumpEvent>& list) {
        for (const auto& e : list) {
            out << kind << ' ' << e.time;
            for (int i = 0; i < noise.dim; ++i) out << ' ' << e.mark(i);
            out << '\n';
        }
    };
    events("small", noise.small_jumps);
    events("big", noise.big_jumps);
    out.precision(old_precision);
}

NoiseRealization read_noise(std::istream& in) {
    NoiseRealization noise;
    std::string line;
    if (!std::getline(in, line) || line != "levylab-noise 1")
        throw ConfigurationError("read_noise: missing 'levylab-noise 1' header");
    std::vector<Eigen::VectorXd> cells, gauss;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::istringstream s(line);
        std::string kind;
        s >> kind;
        auto read_vec = [&](int d) {
            Eigen::VectorXd v(d);
            for (int i = 0; i < d; ++i) s >> v(i);
            return v;
        };
        if (kind == "meta") {
            s >> noise.dim >> noise.seed >> noise.horizon >> noise.macro_step;
        } else if (kind == "cell") {
            double a = 0, b = 0;
            s >> a >> b;
            if (noise.grid.empty()) noise.grid.push_back(a);
            noise.grid.push_back(b);
            cells.push_back(read_vec(noise.dim));
        } else if (kind == "gauss") {
            double a = 0;
            s >> a;
            gauss.push_back(read_vec(noise.dim));
        } else if (kind == "small" || kind == "big") {
            JumpEvent e;
            s >> e.time;
            e.mark = read_vec(noise.dim);
            (kind == "small" ? noise.small_jumps : noise.big_jumps).push_back(std::move(e));
        } else {
            throw ConfigurationError("read_noise: unknown record '" + kind + "' on line " + std::to_string(line_no));
        }
        if (s.fail()) throw ConfigurationError("read_noise: malformed line " + std::to_string(line_no));
    }
    noise.brownian.resize(noise.dim, static_cast<int>(cells.size()));
    for (std::size_t k = 0; k < cells.size(); ++k) noise.brownian.col(static_cast<int>(k)) = cells[k];
    if (!gauss.empty()) {
        noise.substitute.resize(noise.dim, static_cast<int>(gauss.size()));
        for (std::size_t k = 0; k < gauss.size(); ++k) noise.substitute.col(static_cast<int>(k)) = gauss[k];
    }
    auto index_of = [&](double t) {
        return static_cast<int>(std::lower_bound(noise.grid.begin(), noise.grid.end(), t) - noise.grid.begin());
    };
    for (auto& e : noise.small_jumps) e.grid_index = index_of(e.time);
    for (auto& e : noise.big_jumps) e.grid_index = index_of(e.time);
    return noise;
}

bool check_noise_invariants(const NoiseRealization& noise, std::string* why) {
    auto fail = [&](const std::string& msg) {
        if (why) *why = msg;
        return false;
    };
    if (noise.grid.size() < 2 || noise.grid.front() != 0.0 || noise.grid.back() != noise.horizon)
        return fail("grid must run from 0 to the horizon");
    for (std::size_t k = 1; k < noise.grid.size(); ++k)
        if (!(noise.grid[k] > noise.grid[k - 1])) return fail("grid is not strictly increasing");
    if (noise.brownian.rows() != noise.dim || noise.brownian.cols() != noise.cells())
        return fail("brownian increments do not match the grid");
    for (const auto* list : {&noise.small_jumps, &noise.big_jumps}) {
        for (std::size_t i = 0; i < list->size(); ++i) {
            const JumpEvent& e = (*list)[i];
            if (i > 0 && !(e.time > (*list)[i - 1].time)) return fail("jump times are not strictly increasing");
            if (e.grid_index < 1 || e.grid_index >= static_cast<int>(noise.grid.size()) ||
                noise.grid[static_cast<std::size_t>(e.grid_index)] != e.time)
                return fail("jump time is not a grid point");
        }
    }
    return true;
}

}  // namespace levylab

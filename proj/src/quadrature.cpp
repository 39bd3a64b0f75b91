#include "levylab/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <queue>
#include <sstream>

namespace levylab {

namespace {

// QUADPACK G7-K15 abscissae and weights.
constexpr double kXgk[8] = {0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
                            0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
                            0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
                            0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
constexpr double kWgk[8] = {0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
                            0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
                            0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
                            0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
constexpr double kWg[4] = {0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
                           0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Segment {
    double a, b, value, error;
    bool operator<(const Segment& other) const { return error < other.error; }
};

Segment gk15(const std::function<double(double)>& f, double a, double b) {
    const double center = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    const double fc = f(center);
    double kronrod = fc * kWgk[7];
    double gauss = fc * kWg[3];
    for (int j = 0; j < 7; ++j) {
        const double dx = half * kXgk[j];
        const double sum = f(center - dx) + f(center + dx);
        kronrod += kWgk[j] * sum;
        if (j % 2 == 1) gauss += kWg[j / 2] * sum;
    }
    return {a, b, kronrod * half, std::abs((kronrod - gauss) * half)};
}

}  // namespace

std::vector<std::pair<double, double>> gauss_legendre(int n) {
    std::vector<std::pair<double, double>> rule(static_cast<std::size_t>(n));
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0, p1 = 0.0;
            for (int k = 1; k <= n; ++k) {
                const double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p2) / k;
            }
            dp = n * (x * p0 - p1) / (x * x - 1.0);
            const double dx = p0 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        rule[static_cast<std::size_t>(i)] = {-x, w};
        rule[static_cast<std::size_t>(n - 1 - i)] = {x, w};
    }
    return rule;
}

QuadratureResult integrate_interval(const std::function<double(double)>& f, double a, double b,
                                    const QuadratureOptions& opts) {
    QuadratureResult out;
    if (!(b > a)) return out;
    std::priority_queue<Segment> queue;
    Segment first = gk15(f, a, b);
    double value = first.value;
    double error = first.error;
    queue.push(first);
    std::size_t evals = 15;
    int splits = 0;
    while (error > std::max(opts.abs_tol, opts.rel_tol * std::abs(value))) {
        if (splits >= opts.max_subdivisions) {
            std::ostringstream msg;
            msg << "adaptive quadrature on [" << a << ", " << b << "] did not converge: value " << value
                << ", error estimate " << error << " after " << splits << " subdivisions";
            std::vector<std::string> trace;
            for (int k = 0; k < 5 && !queue.empty(); ++k) {
                const Segment s = queue.top();
                queue.pop();
                std::ostringstream line;
                line << "worst segment [" << s.a << ", " << s.b << "] value " << s.value << " error " << s.error;
                trace.push_back(line.str());
            }
            throw QuadratureError(msg.str(), std::move(trace));
        }
        const Segment worst = queue.top();
        queue.pop();
        const double mid = 0.5 * (worst.a + worst.b);
        const Segment left = gk15(f, worst.a, mid);
        const Segment right = gk15(f, mid, worst.b);
        value += left.value + right.value - worst.value;
        error += left.error + right.error - worst.error;
        queue.push(left);
        queue.push(right);
        evals += 30;
        ++splits;
    }
    // Re-sum to avoid drift from the incremental updates.
    double total = 0.0, total_err = 0.0;
    while (!queue.empty()) {
        total += queue.top().value;
        total_err += queue.top().error;
        queue.pop();
    }
    out.value = total;
    out.error = total_err;
    out.evaluations = evals;
    return out;
}

QuadratureResult integrate_radial(const std::function<double(double)>& g, double lower, double upper,
                                  const QuadratureOptions& opts) {
    QuadratureResult out;
    if (!(upper > lower)) return out;
    QuadratureOptions shell_opts = opts;
    std::vector<std::string> trace;
    double total = 0.0, error = 0.0;
    double prev = 0.0, prev_ratio = 0.0;
    int stable = 0;
    double hi = upper;
    for (int k = 0; k < opts.max_shells; ++k) {
        const double lo = std::max(lower, 0.5 * hi);
        shell_opts.abs_tol = std::max(opts.abs_tol, 0.1 * opts.rel_tol * std::abs(total));
        const QuadratureResult shell = integrate_interval(g, lo, hi, shell_opts);
        total += shell.value;
        error += shell.error;
        out.evaluations += shell.evaluations;
        std::ostringstream line;
        line << "shell " << k << " [" << lo << ", " << hi << "] contribution " << shell.value;
        trace.push_back(line.str());
        if (lo <= lower) {
            out.value = total;
            out.error = error;
            return out;
        }
        // Geometric closure only toward the origin; a positive lower limit is reached in finitely many shells.
        if (lower == 0.0 && k > 0 && prev != 0.0) {
            const double ratio = shell.value / prev;
            stable = (std::abs(ratio - prev_ratio) <= 1e-9 * std::max(1.0, std::abs(ratio))) ? stable + 1 : 0;
            prev_ratio = ratio;
            if (ratio >= 0.0 && ratio < 1.0) {
                const double tail = shell.value * ratio / (1.0 - ratio);
                const bool small_tail = std::abs(tail) <= opts.rel_tol * std::abs(total);
                if (small_tail || stable >= 3) {
                    out.value = total + tail;
                    out.error = error + (small_tail ? std::abs(tail) : 1e-9 * std::abs(tail));
                    return out;
                }
            }
        }
        if (shell.value == 0.0 && prev == 0.0 && k > 2) {
            out.value = total;
            out.error = error;
            return out;
        }
        prev = shell.value;
        hi = lo;
    }
    std::ostringstream msg;
    msg << "radial quadrature toward " << lower << " did not converge after " << opts.max_shells
        << " dyadic shells (integrand may not be integrable at the origin); running total " << total;
    if (trace.size() > 8) trace.erase(trace.begin(), trace.end() - 8);
    throw QuadratureError(msg.str(), std::move(trace));
}

double sphere_area(int dim) {
    // 2 pi^{d/2} / Gamma(d/2)
    return 2.0 * std::pow(std::numbers::pi, 0.5 * dim) / std::tgamma(0.5 * dim);
}

namespace {

double sphere_recursive(const std::function<double(const Eigen::VectorXd&)>& f, int dim, int order,
                        Eigen::VectorXd& point, int offset, double scale) {
    // point.tail(dim) (from offset) ranges over scale * S^{dim-1}
    if (dim == 1) {
        point(offset) = scale;
        const double plus = f(point);
        point(offset) = -scale;
        const double minus = f(point);
        return plus + minus;
    }
    if (dim == 2) {
        const int n = std::max(4, order + (order % 2));
        const double w = 2.0 * std::numbers::pi / n;
        double sum = 0.0;
        for (int k = 0; k < n / 2; ++k) {
            const double theta = 2.0 * std::numbers::pi * (k + 0.5) / n;
            const double c = scale * std::cos(theta), s = scale * std::sin(theta);
            point(offset) = c;
            point(offset + 1) = s;
            sum += f(point);
            point(offset) = -c;
            point(offset + 1) = -s;
            sum += f(point);
        }
        return w * sum;
    }
    const int m = std::max(4, order / 2);
    const auto rule = gauss_legendre(m);
    double sum = 0.0;
    for (const auto& [x, w] : rule) {
        const double theta = 0.5 * std::numbers::pi * (x + 1.0);
        const double s = std::sin(theta);
        point(offset) = scale * std::cos(theta);
        const double inner = sphere_recursive(f, dim - 1, order, point, offset + 1, scale * s);
        sum += 0.5 * std::numbers::pi * w * std::pow(s, dim - 2) * inner;
    }
    return sum;
}

}  // namespace

double integrate_sphere(const std::function<double(const Eigen::VectorXd&)>& f, int dim, int order) {
    Eigen::VectorXd point(dim);
    return sphere_recursive(f, dim, order, point, 0, 1.0);
}

QuadratureResult integrate_shell(const std::function<double(const Eigen::VectorXd&)>& f, int dim, double lower,
                                 double upper, const QuadratureOptions& opts) {
    Eigen::VectorXd point(dim);
    auto radial = [&](double r) {
        if (r <= 0.0) return 0.0;
        auto scaled = [&](const Eigen::VectorXd& z) { return f(z); };
        const double s = sphere_recursive(scaled, dim, opts.sphere_order, point, 0, r);
        return std::pow(r, dim - 1) * s;
    };
    return integrate_radial(radial, lower, upper, opts);
}

}  // namespace levylab

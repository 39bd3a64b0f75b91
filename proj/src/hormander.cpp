#include "levylab/hormander.hpp"

#include "levylab/jet.hpp"

#include <cmath>
#include <sstream>

namespace levylab {

int required_drift_order(const ModelSpec& model, int n) {
    if (n <= 0) return 0;
    const bool diffusive = model.A1.squaredNorm() > 0.0;
    return diffusive ? 2 * n - 1 : n;
}

BracketTower brackets(const ModelSpec& model, const Vec& x, int n) {
    if (n < 0) throw ConfigurationError("bracket order must be nonnegative");
    const int d = model.dim();
    const int needed = required_drift_order(model, n);
    if (model.drift.declared_order() < needed) {
        std::ostringstream msg;
        msg << "brackets up to order " << n << " need drift derivatives up to order " << needed
            << "; the drift declares order " << model.drift.declared_order();
        throw ConfigurationError(msg.str());
    }
    BracketTower tower;
    tower.x = x;
    tower.order = n;
    tower.B.push_back(Mat::Identity(d, d));
    if (n > 0) {
        auto space = std::make_shared<const JetSpace>(d, needed);
        std::vector<Jet> xs;
        for (int i = 0; i < d; ++i) xs.push_back(Jet::variable(space, i, x(i)));
        const std::vector<Jet> b = model.drift.evaluate<Jet>(xs);
        std::vector<std::vector<Jet>> db(static_cast<std::size_t>(d));  // db[i][l] = d_l b_i
        for (int i = 0; i < d; ++i)
            for (int l = 0; l < d; ++l) db[static_cast<std::size_t>(i)].push_back(b[static_cast<std::size_t>(i)].derivative(l));
        const Eigen::MatrixXd Q = model.A1 * model.A1.transpose();

        std::vector<Jet> prev;  // row-major d x d
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) prev.emplace_back(space, i == j ? 1.0 : 0.0);
        for (int k = 1; k <= n; ++k) {
            std::vector<Jet> next;
            next.reserve(static_cast<std::size_t>(d * d));
            for (int i = 0; i < d; ++i) {
                for (int j = 0; j < d; ++j) {
                    const Jet& entry = prev[static_cast<std::size_t>(i * d + j)];
                    Jet acc(space, 0.0);
                    for (int l = 0; l < d; ++l) {
                        const Jet dl = entry.derivative(l);
                        acc += b[static_cast<std::size_t>(l)] * dl;
                        acc -= db[static_cast<std::size_t>(i)][static_cast<std::size_t>(l)] * prev[static_cast<std::size_t>(l * d + j)];
                        for (int m = 0; m < d; ++m) {
                            if (Q(l, m) == 0.0) continue;
                            acc += (0.5 * Q(l, m)) * dl.derivative(m);
                        }
                    }
                    next.push_back(std::move(acc));
                }
            }
            Mat Bk(d, d);
            for (int i = 0; i < d; ++i)
                for (int j = 0; j < d; ++j) Bk(i, j) = next[static_cast<std::size_t>(i * d + j)].value();
            tower.B.push_back(Bk);
            prev = std::move(next);
        }
    }
    tower.stack.resize(d, 2 * (n + 1) * d);
    for (int k = 0; k <= n; ++k) {
        tower.stack.block(0, k * d, d, d) = tower.B[static_cast<std::size_t>(k)] * model.A1;
        tower.stack.block(0, (n + 1 + k) * d, d, d) = tower.B[static_cast<std::size_t>(k)] * model.A2;
    }
    tower.singular_values = Eigen::JacobiSVD<Eigen::MatrixXd>(tower.stack).singularValues();
    return tower;
}

namespace {

int numerical_rank(const Eigen::VectorXd& sv, int d, double tol) {
    if (sv.size() == 0 || sv(0) == 0.0) return 0;
    const double threshold = tol * sv(0) * std::sqrt(static_cast<double>(d));
    int rank = 0;
    for (int i = 0; i < sv.size(); ++i)
        if (sv(i) > threshold) ++rank;
    return rank;
}

}  // namespace

RankResult rank_condition(const BracketTower& tower, double tol) {
    const int d = static_cast<int>(tower.stack.rows());
    RankResult r;
    const auto& sv = tower.singular_values;
    r.rank = numerical_rank(sv, d, tol);
    r.sigma_max = sv.size() > 0 ? sv(0) : 0.0;
    r.sigma_min = sv.size() >= d ? sv(d - 1) : 0.0;
    r.pass = r.rank == d;
    return r;
}

int saturation_order(const ModelSpec& model, const Vec& x, int max_order, double tol) {
    for (int n = 0; n <= max_order; ++n)
        if (rank_condition(brackets(model, x, n), tol).pass) return n;
    return -1;
}

Mat first_order_matrix(const ModelSpec& model, const Vec& x) {
    const Mat B1 = -model.drift.jacobian(x);
    const Eigen::MatrixXd Q1 = model.A1 * model.A1.transpose();
    const Eigen::MatrixXd Q2 = model.A2 * model.A2.transpose();
    Mat M = Q1 + Q2;
    M += B1 * (Q1 + Q2) * B1.transpose();
    return 0.5 * (M + M.transpose());
}

double lambda_min_search(const Mat& M, Engine& engine, int samples) {
    const int d = static_cast<int>(M.rows());
    std::normal_distribution<double> normal;
    Vec best(d), u(d);
    double best_value = std::numeric_limits<double>::infinity();
    for (int s = 0; s < samples; ++s) {
        for (int i = 0; i < d; ++i) u(i) = normal(engine);
        u.normalize();
        const double v = u.dot(M * u);
        if (v < best_value) {
            best_value = v;
            best = u;
        }
    }
    const double scale = std::max(M.norm(), 1e-300);
    const double step = 1.0 / scale;
    for (int iter = 0; iter < 100000; ++iter) {
        const Vec Mu = M * best;
        const double rho = best.dot(Mu);
        Vec next = best - step * (Mu - rho * best);
        next.normalize();
        const double value = next.dot(M * next);
        if (!(value < best_value)) break;
        const double change = best_value - value;
        best = next;
        best_value = value;
        if (change <= 1e-17 * scale) break;
    }
    return best_value;
}

UniformResult uniform_first_order(const ModelSpec& model, const std::vector<Vec>& x_grid, std::uint64_t seed) {
    if (x_grid.empty()) throw ConfigurationError("uniform_first_order: grid is empty");
    UniformResult out;
    Engine engine = make_engine(seed);
    out.c2 = std::numeric_limits<double>::infinity();
    for (const Vec& x : x_grid) {
        const Mat M = first_order_matrix(model, x);
        const double lam = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(M, Eigen::EigenvaluesOnly).eigenvalues()(0);
        out.lambda_min.push_back(lam);
        out.lambda_min_search.push_back(lambda_min_search(M, engine));
        out.c2 = std::min(out.c2, lam);
    }
    return out;
}

int kalman_rank(const Eigen::MatrixXd& B, const Eigen::MatrixXd& A1, const Eigen::MatrixXd& A2, int steps,
                double tol) {
    const int d = static_cast<int>(B.rows());
    Eigen::MatrixXd A(d, A1.cols() + A2.cols());
    A << A1, A2;
    Eigen::MatrixXd C(d, A.cols() * (steps + 1));
    Eigen::MatrixXd P = A;
    for (int k = 0; k <= steps; ++k) {
        C.middleCols(k * A.cols(), A.cols()) = P;
        P = B * P;
    }
    return numerical_rank(Eigen::JacobiSVD<Eigen::MatrixXd>(C).singularValues(), d, tol);
}

}  // namespace levylab

#pragma once

#include <Eigen/Dense>
#include <unsupported/Eigen/AutoDiff>

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace levylab {

class ExpressionError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Small arithmetic expression over z1..zd and r = |z|, used for the
/// amplitude a(z) of a stable-like jump density.
///
/// Grammar: + - * / ^ (right associative), unary minus, parentheses, numeric
/// literals, and the functions sin cos exp log sqrt abs tanh.
class Expression {
public:
    enum class Op { Const, Var, Radius, Add, Sub, Mul, Div, Pow, Neg, Sin, Cos, Exp, Log, Sqrt, Abs, Tanh };

    struct Node {
        Op op = Op::Const;
        double value = 0.0;
        int var = 0;
        int lhs = -1;
        int rhs = -1;
    };

    Expression() : Expression(1.0) {}
    explicit Expression(double constant);

    /// Parses `text` for a d-dimensional argument. Throws ExpressionError with
    /// the offending column on malformed input or out-of-range variables.
    static Expression parse(const std::string& text, int dim);

    const std::string& text() const { return text_; }
    int dim() const { return dim_; }
    bool is_constant() const { return nodes_[static_cast<std::size_t>(root_)].op == Op::Const; }
    double constant_value() const { return nodes_[static_cast<std::size_t>(root_)].value; }

    template <class S, class Vec>
    S eval(const Vec& z) const {
        return eval_node<S>(root_, z);
    }

    double operator()(const Eigen::VectorXd& z) const;

    /// Value and gradient by forward-mode automatic differentiation.
    double value_and_gradient(const Eigen::VectorXd& z, Eigen::VectorXd& grad) const;

private:
    template <class S, class Vec>
    S eval_node(int idx, const Vec& z) const;

    std::vector<Node> nodes_;
    int root_ = 0;
    int dim_ = 0;
    std::string text_;

    friend class ExpressionParser;
};

namespace detail {

inline double scalar_value(double x) { return x; }
template <class D>
double scalar_value(const Eigen::AutoDiffScalar<D>& x) {
    return x.value();
}

template <class S>
S integer_power(S base, long n) {
    if (n < 0) return S(1.0) / integer_power(base, -n);
    S result(1.0);
    S factor = base;
    while (n > 0) {
        if (n & 1) result = result * factor;
        n >>= 1;
        if (n > 0) factor = factor * factor;
    }
    return result;
}

}  // namespace detail

template <class S, class Vec>
S Expression::eval_node(int idx, const Vec& z) const {
    using std::abs;
    using std::cos;
    using std::exp;
    using std::log;
    using std::pow;
    using std::sin;
    using std::sqrt;
    using std::tanh;
    const Node& n = nodes_[static_cast<std::size_t>(idx)];
    switch (n.op) {
        case Op::Const:
            return S(n.value);
        case Op::Var:
            return S(z(n.var));
        case Op::Radius: {
            S sum(0.0);
            for (int i = 0; i < dim_; ++i) sum = sum + S(z(i)) * S(z(i));
            return sqrt(sum);
        }
        case Op::Add:
            return eval_node<S>(n.lhs, z) + eval_node<S>(n.rhs, z);
        case Op::Sub:
            return eval_node<S>(n.lhs, z) - eval_node<S>(n.rhs, z);
        case Op::Mul:
            return eval_node<S>(n.lhs, z) * eval_node<S>(n.rhs, z);
        case Op::Div:
            return eval_node<S>(n.lhs, z) / eval_node<S>(n.rhs, z);
        case Op::Pow: {
            const Node& e = nodes_[static_cast<std::size_t>(n.rhs)];
            const S base = eval_node<S>(n.lhs, z);
            if (e.op == Op::Const) {
                const double p = e.value;
                if (p == std::round(p) && std::abs(p) <= 64) return detail::integer_power(base, static_cast<long>(p));
                return pow(base, p);
            }
            return exp(eval_node<S>(n.rhs, z) * log(base));
        }
        case Op::Neg:
            return -eval_node<S>(n.lhs, z);
        case Op::Sin:
            return sin(eval_node<S>(n.lhs, z));
        case Op::Cos:
            return cos(eval_node<S>(n.lhs, z));
        case Op::Exp:
            return exp(eval_node<S>(n.lhs, z));
        case Op::Log:
            return log(eval_node<S>(n.lhs, z));
        case Op::Sqrt:
            return sqrt(eval_node<S>(n.lhs, z));
        case Op::Abs:
            return abs(eval_node<S>(n.lhs, z));
        case Op::Tanh:
            return tanh(eval_node<S>(n.lhs, z));
    }
    return S(0.0);
}

}  // namespace levylab

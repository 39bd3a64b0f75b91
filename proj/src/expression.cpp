#include "levylab/expression.hpp"

#include <cctype>
#include <sstream>

namespace levylab {

class ExpressionParser {
public:
    ExpressionParser(const std::string& text, int dim) : text_(text), dim_(dim) {}

    Expression run() {
        Expression e;
        e.nodes_.clear();
        e.dim_ = dim_;
        e.text_ = text_;
        out_ = &e;
        e.root_ = parse_sum();
        skip();
        if (pos_ < text_.size()) fail("unexpected '" + std::string(1, text_[pos_]) + "'");
        fold(e);
        return e;
    }

private:
    using Op = Expression::Op;

    [[noreturn]] void fail(const std::string& what) const {
        std::ostringstream msg;
        msg << "expression \"" << text_ << "\": " << what << " at column " << (pos_ + 1);
        throw ExpressionError(msg.str());
    }

    void skip() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }

    bool accept(char c) {
        skip();
        if (pos_ < text_.size() && text_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    int add(Expression::Node n) {
        out_->nodes_.push_back(n);
        return static_cast<int>(out_->nodes_.size()) - 1;
    }

    int binary(Op op, int lhs, int rhs) { return add({op, 0.0, 0, lhs, rhs}); }

    int parse_sum() {
        int lhs = parse_product();
        for (;;) {
            if (accept('+'))
                lhs = binary(Op::Add, lhs, parse_product());
            else if (accept('-'))
                lhs = binary(Op::Sub, lhs, parse_product());
            else
                return lhs;
        }
    }

    int parse_product() {
        int lhs = parse_unary();
        for (;;) {
            if (accept('*'))
                lhs = binary(Op::Mul, lhs, parse_unary());
            else if (accept('/'))
                lhs = binary(Op::Div, lhs, parse_unary());
            else
                return lhs;
        }
    }

    int parse_unary() {
        if (accept('-')) return add({Op::Neg, 0.0, 0, parse_unary(), -1});
        if (accept('+')) return parse_unary();
        return parse_power();
    }

    int parse_power() {
        const int base = parse_primary();
        if (accept('^')) return binary(Op::Pow, base, parse_unary());
        return base;
    }

    int parse_primary() {
        skip();
        if (pos_ >= text_.size()) fail("unexpected end of input");
        const char c = text_[pos_];
        if (accept('(')) {
            const int inner = parse_sum();
            if (!accept(')')) fail("expected ')'");
            return inner;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            const char* begin = text_.c_str() + pos_;
            char* end = nullptr;
            const double v = std::strtod(begin, &end);
            if (end == begin) fail("malformed number");
            pos_ += static_cast<std::size_t>(end - begin);
            return add({Op::Const, v, 0, -1, -1});
        }
        if (std::isalpha(static_cast<unsigned char>(c))) {
            const std::size_t start = pos_;
            while (pos_ < text_.size() && std::isalnum(static_cast<unsigned char>(text_[pos_]))) ++pos_;
            const std::string name = text_.substr(start, pos_ - start);
            if (name == "r") return add({Op::Radius, 0.0, 0, -1, -1});
            if (name == "pi") return add({Op::Const, 3.14159265358979323846, 0, -1, -1});
            if (name.size() > 1 && name[0] == 'z' &&
                name.find_first_not_of("0123456789", 1) == std::string::npos) {
                const int index = std::stoi(name.substr(1));
                if (index < 1 || index > dim_) {
                    pos_ = start;
                    fail("variable " + name + " outside z1..z" + std::to_string(dim_));
                }
                return add({Op::Var, 0.0, index - 1, -1, -1});
            }
            static const std::pair<const char*, Op> functions[] = {
                {"sin", Op::Sin},   {"cos", Op::Cos}, {"exp", Op::Exp},  {"log", Op::Log},
                {"sqrt", Op::Sqrt}, {"abs", Op::Abs}, {"tanh", Op::Tanh}};
            for (const auto& [fname, op] : functions) {
                if (name == fname) {
                    if (!accept('(')) fail("expected '(' after " + name);
                    const int arg = parse_sum();
                    if (!accept(')')) fail("expected ')'");
                    return add({op, 0.0, 0, arg, -1});
                }
            }
            pos_ = start;
            fail("unknown identifier '" + name + "'");
        }
        fail("unexpected '" + std::string(1, c) + "'");
    }

    // Folds constant subtrees so that is_constant() and constant exponents are
    // detected regardless of how the literal was written.
    static void fold(Expression& e) {
        for (auto& n : e.nodes_) {
            if (n.op == Op::Const || n.op == Op::Var || n.op == Op::Radius) continue;
            const bool lhs_const = n.lhs >= 0 && e.nodes_[static_cast<std::size_t>(n.lhs)].op == Op::Const;
            const bool rhs_const = n.rhs < 0 || e.nodes_[static_cast<std::size_t>(n.rhs)].op == Op::Const;
            if (lhs_const && rhs_const) {
                Eigen::VectorXd dummy = Eigen::VectorXd::Zero(std::max(1, e.dim_));
                const int self = static_cast<int>(&n - e.nodes_.data());
                const double v = e.eval_node<double>(self, dummy);
                n = {Op::Const, v, 0, -1, -1};
            }
        }
    }

    const std::string& text_;
    int dim_;
    std::size_t pos_ = 0;
    Expression* out_ = nullptr;
};

Expression::Expression(double constant) {
    nodes_.push_back({Op::Const, constant, 0, -1, -1});
    root_ = 0;
    std::ostringstream s;
    s.precision(17);
    s << constant;
    text_ = s.str();
}

Expression Expression::parse(const std::string& text, int dim) {
    if (dim < 1) throw ExpressionError("expression dimension must be at least 1");
    return ExpressionParser(text, dim).run();
}

double Expression::operator()(const Eigen::VectorXd& z) const { return eval<double>(z); }

double Expression::value_and_gradient(const Eigen::VectorXd& z, Eigen::VectorXd& grad) const {
    using AD = Eigen::AutoDiffScalar<Eigen::VectorXd>;
    const int d = static_cast<int>(z.size());
    if (is_constant()) {
        grad = Eigen::VectorXd::Zero(d);
        return constant_value();
    }
    Eigen::Matrix<AD, Eigen::Dynamic, 1> za(d);
    for (int i = 0; i < d; ++i) za(i) = AD(z(i), d, i);
    const AD result = eval<AD>(za);
    grad = result.derivatives();
    if (grad.size() != d) grad = Eigen::VectorXd::Zero(d);
    return result.value();
}

}  // namespace levylab

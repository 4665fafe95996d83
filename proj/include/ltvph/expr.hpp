#pragma once

// Symbolic scalar expressions of time.  Every time-varying coefficient in the
// library (system matrices, storage matrices, mass flows, time maps) is carried
// as a TimeExpr so that derivatives are exact rather than finite differences.
//
// Grammar:
//   expr   := ['-'] term (('+'|'-') term)*
//   term   := factor (('*'|'/') factor)*
//   factor := base ('^' int)?
//   base   := number | 'i' | 't' | func '(' expr ')' | '(' expr ')'
//           | 'piecewise' '{' (guard ':' expr ';')+ 'else' ':' expr '}'
//   func   := 'sin' | 'cos' | 'exp' | 'sqrt' | 'abs' | 'recip'
//   guard  := '[' bound ',' bound ')' | 't' '<' bound
// Bounds are signed numeric literals or 'inf'/'-inf'; guards are half-open
// intervals [lo, hi) evaluated in declaration order.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <complex>
#include <limits>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "ltvph/errors.hpp"

namespace ltvph {

using Complex = std::complex<double>;

namespace detail {

enum class NodeKind { Constant, Var, Unary, Binary, Pow, Piecewise };
enum class UnaryOp { Neg, Sin, Cos, Exp, Sqrt, Abs, Recip };
enum class BinaryOp { Add, Sub, Mul, Div };

struct ExprNode;
using NodePtr = std::shared_ptr<const ExprNode>;

struct PiecewiseBranch {
    double lo;  // guard [lo, hi)
    double hi;
    NodePtr body;
};

struct ExprNode {
    NodeKind kind;
    Complex value{};                        // Constant
    UnaryOp uop{};                          // Unary
    BinaryOp bop{};                         // Binary
    int exponent = 0;                       // Pow
    NodePtr a, b;                           // children
    std::vector<PiecewiseBranch> branches;  // Piecewise
    NodePtr otherwise;                      // Piecewise default
};

inline NodePtr make_const(Complex c) {
    auto n = std::make_shared<ExprNode>();
    n->kind = NodeKind::Constant;
    n->value = c;
    return n;
}

inline NodePtr make_var() {
    auto n = std::make_shared<ExprNode>();
    n->kind = NodeKind::Var;
    return n;
}

inline bool is_const(const NodePtr& n, Complex c) {
    return n->kind == NodeKind::Constant && n->value == c;
}

inline NodePtr make_unary(UnaryOp op, NodePtr child);
inline NodePtr make_binary(BinaryOp op, NodePtr lhs, NodePtr rhs);
inline NodePtr make_pow(NodePtr base, int k);

inline Complex apply_unary(UnaryOp op, Complex v, double t) {
    switch (op) {
        case UnaryOp::Neg:  return -v;
        case UnaryOp::Sin:  return std::sin(v);
        case UnaryOp::Cos:  return std::cos(v);
        case UnaryOp::Exp:  return std::exp(v);
        case UnaryOp::Sqrt:
            if (v.imag() == 0.0 && v.real() < 0.0)
                throw SingularityError(t, "sqrt of negative real");
            return std::sqrt(v);
        case UnaryOp::Abs:  return Complex(std::abs(v), 0.0);
        case UnaryOp::Recip:
            if (v == Complex(0.0, 0.0)) throw SingularityError(t, "recip at zero");
            return Complex(1.0, 0.0) / v;
    }
    throw Error("unreachable unary op");
}

inline Complex eval_node(const NodePtr& n, double t) {
    switch (n->kind) {
        case NodeKind::Constant: return n->value;
        case NodeKind::Var:      return Complex(t, 0.0);
        case NodeKind::Unary:    return apply_unary(n->uop, eval_node(n->a, t), t);
        case NodeKind::Binary: {
            Complex lhs = eval_node(n->a, t);
            Complex rhs = eval_node(n->b, t);
            switch (n->bop) {
                case BinaryOp::Add: return lhs + rhs;
                case BinaryOp::Sub: return lhs - rhs;
                case BinaryOp::Mul: return lhs * rhs;
                case BinaryOp::Div:
                    if (rhs == Complex(0.0, 0.0))
                        throw SingularityError(t, "division by zero");
                    return lhs / rhs;
            }
            throw Error("unreachable binary op");
        }
        case NodeKind::Pow: {
            Complex base = eval_node(n->a, t);
            int k = n->exponent;
            if (k < 0) {
                if (base == Complex(0.0, 0.0))
                    throw SingularityError(t, "negative power of zero");
                base = Complex(1.0, 0.0) / base;
                k = -k;
            }
            Complex out(1.0, 0.0);
            Complex p = base;
            for (; k > 0; k >>= 1) {
                if (k & 1) out *= p;
                p *= p;
            }
            return out;
        }
        case NodeKind::Piecewise: {
            for (const auto& br : n->branches)
                if (t >= br.lo && t < br.hi) return eval_node(br.body, t);
            return eval_node(n->otherwise, t);
        }
    }
    throw Error("unreachable node kind");
}

// Light structural simplification applied at construction so that repeated
// differentiation does not blow up the tree.
inline NodePtr make_unary(UnaryOp op, NodePtr child) {
    if (child->kind == NodeKind::Constant) {
        if (op == UnaryOp::Neg) return make_const(-child->value);
        if (op != UnaryOp::Sqrt && op != UnaryOp::Recip) {
            // total builtins can be folded immediately (t is irrelevant)
            return make_const(apply_unary(op, child->value, 0.0));
        }
    }
    if (op == UnaryOp::Neg && child->kind == NodeKind::Unary && child->uop == UnaryOp::Neg)
        return child->a;
    auto n = std::make_shared<ExprNode>();
    n->kind = NodeKind::Unary;
    n->uop = op;
    n->a = std::move(child);
    return n;
}

inline NodePtr make_binary(BinaryOp op, NodePtr lhs, NodePtr rhs) {
    const Complex zero(0.0, 0.0), one(1.0, 0.0);
    switch (op) {
        case BinaryOp::Add:
            if (is_const(lhs, zero)) return rhs;
            if (is_const(rhs, zero)) return lhs;
            break;
        case BinaryOp::Sub:
            if (is_const(rhs, zero)) return lhs;
            if (is_const(lhs, zero)) return make_unary(UnaryOp::Neg, rhs);
            break;
        case BinaryOp::Mul:
            if (is_const(lhs, zero) || is_const(rhs, zero)) return make_const(zero);
            if (is_const(lhs, one)) return rhs;
            if (is_const(rhs, one)) return lhs;
            break;
        case BinaryOp::Div:
            if (is_const(lhs, zero) && !is_const(rhs, zero)) return make_const(zero);
            if (is_const(rhs, one)) return lhs;
            break;
    }
    if (lhs->kind == NodeKind::Constant && rhs->kind == NodeKind::Constant &&
        !(op == BinaryOp::Div && rhs->value == zero)) {
        switch (op) {
            case BinaryOp::Add: return make_const(lhs->value + rhs->value);
            case BinaryOp::Sub: return make_const(lhs->value - rhs->value);
            case BinaryOp::Mul: return make_const(lhs->value * rhs->value);
            case BinaryOp::Div: return make_const(lhs->value / rhs->value);
        }
    }
    auto n = std::make_shared<ExprNode>();
    n->kind = NodeKind::Binary;
    n->bop = op;
    n->a = std::move(lhs);
    n->b = std::move(rhs);
    return n;
}

inline NodePtr make_pow(NodePtr base, int k) {
    if (k == 0) return make_const(Complex(1.0, 0.0));
    if (k == 1) return base;
    if (base->kind == NodeKind::Constant && base->value != Complex(0.0, 0.0)) {
        // safe to fold: nonzero constant base
        auto n = std::make_shared<ExprNode>();
        n->kind = NodeKind::Pow;
        n->exponent = k;
        n->a = base;
        return make_const(eval_node(n, 0.0));
    }
    auto n = std::make_shared<ExprNode>();
    n->kind = NodeKind::Pow;
    n->exponent = k;
    n->a = std::move(base);
    return n;
}

// Recognizes exactly-affine subtrees a*t + b; used to locate abs kinks and
// reciprocal poles for event harvesting.
inline std::optional<std::pair<Complex, Complex>> try_affine(const NodePtr& n) {
    switch (n->kind) {
        case NodeKind::Constant: return std::make_pair(Complex(0.0), n->value);
        case NodeKind::Var:      return std::make_pair(Complex(1.0), Complex(0.0));
        case NodeKind::Unary:
            if (n->uop == UnaryOp::Neg) {
                if (auto c = try_affine(n->a))
                    return std::make_pair(-c->first, -c->second);
            }
            return std::nullopt;
        case NodeKind::Binary: {
            auto la = try_affine(n->a);
            auto ra = try_affine(n->b);
            if (!la || !ra) return std::nullopt;
            switch (n->bop) {
                case BinaryOp::Add: return std::make_pair(la->first + ra->first, la->second + ra->second);
                case BinaryOp::Sub: return std::make_pair(la->first - ra->first, la->second - ra->second);
                case BinaryOp::Mul:
                    if (la->first == Complex(0.0))
                        return std::make_pair(la->second * ra->first, la->second * ra->second);
                    if (ra->first == Complex(0.0))
                        return std::make_pair(ra->second * la->first, ra->second * la->second);
                    return std::nullopt;
                case BinaryOp::Div:
                    if (ra->first == Complex(0.0) && ra->second != Complex(0.0))
                        return std::make_pair(la->first / ra->second, la->second / ra->second);
                    return std::nullopt;
            }
            return std::nullopt;
        }
        default: return std::nullopt;
    }
}

inline void collect_special_points(const NodePtr& n, std::set<double>& out) {
    switch (n->kind) {
        case NodeKind::Constant:
        case NodeKind::Var:
            return;
        case NodeKind::Unary:
            if (n->uop == UnaryOp::Abs || n->uop == UnaryOp::Recip) {
                if (auto aff = try_affine(n->a)) {
                    auto [a, b] = *aff;
                    if (a != Complex(0.0) && a.imag() == 0.0 && b.imag() == 0.0)
                        out.insert(-b.real() / a.real());
                }
            }
            collect_special_points(n->a, out);
            return;
        case NodeKind::Binary:
            if (n->bop == BinaryOp::Div) {
                if (auto aff = try_affine(n->b)) {
                    auto [a, b] = *aff;
                    if (a != Complex(0.0) && a.imag() == 0.0 && b.imag() == 0.0)
                        out.insert(-b.real() / a.real());
                }
            }
            collect_special_points(n->a, out);
            collect_special_points(n->b, out);
            return;
        case NodeKind::Pow:
            collect_special_points(n->a, out);
            return;
        case NodeKind::Piecewise:
            for (const auto& br : n->branches) {
                if (std::isfinite(br.lo)) out.insert(br.lo);
                if (std::isfinite(br.hi)) out.insert(br.hi);
                collect_special_points(br.body, out);
            }
            collect_special_points(n->otherwise, out);
            return;
    }
}

inline NodePtr diff_node(const NodePtr& n) {
    switch (n->kind) {
        case NodeKind::Constant: return make_const(Complex(0.0));
        case NodeKind::Var:      return make_const(Complex(1.0));
        case NodeKind::Unary: {
            NodePtr du = diff_node(n->a);
            const NodePtr& u = n->a;
            switch (n->uop) {
                case UnaryOp::Neg:
                    return make_unary(UnaryOp::Neg, du);
                case UnaryOp::Sin:
                    return make_binary(BinaryOp::Mul, make_unary(UnaryOp::Cos, u), du);
                case UnaryOp::Cos:
                    return make_unary(UnaryOp::Neg,
                                      make_binary(BinaryOp::Mul, make_unary(UnaryOp::Sin, u), du));
                case UnaryOp::Exp:
                    return make_binary(BinaryOp::Mul, make_unary(UnaryOp::Exp, u), du);
                case UnaryOp::Sqrt:
                    // u' / (2 sqrt(u))
                    return make_binary(BinaryOp::Div, du,
                                       make_binary(BinaryOp::Mul, make_const(Complex(2.0)),
                                                   make_unary(UnaryOp::Sqrt, u)));
                case UnaryOp::Abs:
                    // real-argument kink rule: u/|u| * u'; singular exactly at the kink
                    return make_binary(BinaryOp::Mul,
                                       make_binary(BinaryOp::Div, u, make_unary(UnaryOp::Abs, u)),
                                       du);
                case UnaryOp::Recip:
                    // -u' / u^2
                    return make_unary(UnaryOp::Neg,
                                      make_binary(BinaryOp::Div, du, make_pow(u, 2)));
            }
            throw Error("unreachable unary diff");
        }
        case NodeKind::Binary: {
            NodePtr da = diff_node(n->a);
            NodePtr db = diff_node(n->b);
            switch (n->bop) {
                case BinaryOp::Add: return make_binary(BinaryOp::Add, da, db);
                case BinaryOp::Sub: return make_binary(BinaryOp::Sub, da, db);
                case BinaryOp::Mul:
                    return make_binary(BinaryOp::Add,
                                       make_binary(BinaryOp::Mul, da, n->b),
                                       make_binary(BinaryOp::Mul, n->a, db));
                case BinaryOp::Div:
                    // (a'b - ab') / b^2
                    return make_binary(BinaryOp::Div,
                                       make_binary(BinaryOp::Sub,
                                                   make_binary(BinaryOp::Mul, da, n->b),
                                                   make_binary(BinaryOp::Mul, n->a, db)),
                                       make_pow(n->b, 2));
            }
            throw Error("unreachable binary diff");
        }
        case NodeKind::Pow: {
            // k u^(k-1) u'
            NodePtr du = diff_node(n->a);
            return make_binary(BinaryOp::Mul,
                               make_binary(BinaryOp::Mul,
                                           make_const(Complex(double(n->exponent))),
                                           make_pow(n->a, n->exponent - 1)),
                               du);
        }
        case NodeKind::Piecewise: {
            auto out = std::make_shared<ExprNode>();
            out->kind = NodeKind::Piecewise;
            for (const auto& br : n->branches)
                out->branches.push_back({br.lo, br.hi, diff_node(br.body)});
            out->otherwise = diff_node(n->otherwise);
            return out;
        }
    }
    throw Error("unreachable diff");
}

inline std::string format_double(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

// precedence: 0 add, 1 mul, 2 unary/pow, 3 atom
inline void print_node(const NodePtr& n, std::ostream& os, int parent_prec) {
    switch (n->kind) {
        case NodeKind::Constant: {
            Complex c = n->value;
            if (c.imag() == 0.0) {
                bool neg = std::signbit(c.real()) && c.real() != 0.0;
                if (neg && parent_prec > 0) os << "(";
                os << format_double(c.real());
                if (neg && parent_prec > 0) os << ")";
            } else {
                if (parent_prec > 0) os << "(";
                os << format_double(c.real()) << "+" << format_double(c.imag()) << "*i";
                if (parent_prec > 0) os << ")";
            }
            return;
        }
        case NodeKind::Var:
            os << "t";
            return;
        case NodeKind::Unary: {
            const char* fn = nullptr;
            switch (n->uop) {
                case UnaryOp::Neg: {
                    if (parent_prec > 0) os << "(";
                    os << "-";
                    print_node(n->a, os, 2);
                    if (parent_prec > 0) os << ")";
                    return;
                }
                case UnaryOp::Sin:   fn = "sin"; break;
                case UnaryOp::Cos:   fn = "cos"; break;
                case UnaryOp::Exp:   fn = "exp"; break;
                case UnaryOp::Sqrt:  fn = "sqrt"; break;
                case UnaryOp::Abs:   fn = "abs"; break;
                case UnaryOp::Recip: fn = "recip"; break;
            }
            os << fn << "(";
            print_node(n->a, os, 0);
            os << ")";
            return;
        }
        case NodeKind::Binary: {
            int prec = (n->bop == BinaryOp::Add || n->bop == BinaryOp::Sub) ? 0 : 1;
            if (prec < parent_prec) os << "(";
            print_node(n->a, os, prec);
            switch (n->bop) {
                case BinaryOp::Add: os << "+"; break;
                case BinaryOp::Sub: os << "-"; break;
                case BinaryOp::Mul: os << "*"; break;
                case BinaryOp::Div: os << "/"; break;
            }
            print_node(n->b, os, prec + 1);
            if (prec < parent_prec) os << ")";
            return;
        }
        case NodeKind::Pow:
            print_node(n->a, os, 3);
            os << "^" << n->exponent;
            return;
        case NodeKind::Piecewise:
            os << "piecewise{";
            for (const auto& br : n->branches) {
                os << "[" << format_double(br.lo) << "," << format_double(br.hi) << "):";
                print_node(br.body, os, 0);
                os << ";";
            }
            os << "else:";
            print_node(n->otherwise, os, 0);
            os << "}";
            return;
    }
}

}  // namespace detail

class TimeExpr {
public:
    TimeExpr() : node_(detail::make_const(Complex(0.0))) {}
    explicit TimeExpr(double c) : node_(detail::make_const(Complex(c))) {}
    explicit TimeExpr(Complex c) : node_(detail::make_const(c)) {}

    static TimeExpr constant(Complex c) { return TimeExpr(detail::make_const(c)); }
    static TimeExpr var() { return TimeExpr(detail::make_var()); }

    /// Parses an expression string; throws SyntaxError / UnknownIdentifier.
    static TimeExpr parse(const std::string& source);

    Complex eval(double t) const { return detail::eval_node(node_, t); }

    /// d/dt by standard rules; piecewise differentiates branchwise.  Branch
    /// boundaries and abs-kinks are carried as excluded points, not errors.
    TimeExpr differentiate() const { return TimeExpr(detail::diff_node(node_)); }

    std::string print() const {
        std::ostringstream os;
        detail::print_node(node_, os, 0);
        return os.str();
    }

    /// Breakpoints of piecewise guards plus detectable kinks/poles (affine
    /// abs/recip/div arguments).  Integrators split steps here; a.e. checks
    /// exclude these points.
    std::vector<double> special_points() const {
        std::set<double> pts;
        detail::collect_special_points(node_, pts);
        return {pts.begin(), pts.end()};
    }

    bool is_constant() const { return node_->kind == detail::NodeKind::Constant; }
    std::optional<Complex> constant_value() const {
        if (is_constant()) return node_->value;
        return std::nullopt;
    }
    bool has_piecewise() const { return node_has_piecewise(node_); }

    /// True when no constant in the tree carries an imaginary part.  All ops
    /// map reals to reals (sqrt of a negative real throws instead of going
    /// complex), so this is a sound structural realness test.
    bool is_real_valued() const { return node_is_real(node_); }

    static TimeExpr piecewise(const std::vector<std::tuple<double, double, TimeExpr>>& branches,
                              const TimeExpr& otherwise) {
        auto n = std::make_shared<detail::ExprNode>();
        n->kind = detail::NodeKind::Piecewise;
        for (const auto& [lo, hi, body] : branches)
            n->branches.push_back({lo, hi, body.node_});
        n->otherwise = otherwise.node_;
        return TimeExpr(std::move(n));
    }

    friend TimeExpr operator+(const TimeExpr& a, const TimeExpr& b) {
        return TimeExpr(detail::make_binary(detail::BinaryOp::Add, a.node_, b.node_));
    }
    friend TimeExpr operator-(const TimeExpr& a, const TimeExpr& b) {
        return TimeExpr(detail::make_binary(detail::BinaryOp::Sub, a.node_, b.node_));
    }
    friend TimeExpr operator*(const TimeExpr& a, const TimeExpr& b) {
        return TimeExpr(detail::make_binary(detail::BinaryOp::Mul, a.node_, b.node_));
    }
    friend TimeExpr operator/(const TimeExpr& a, const TimeExpr& b) {
        return TimeExpr(detail::make_binary(detail::BinaryOp::Div, a.node_, b.node_));
    }
    friend TimeExpr operator-(const TimeExpr& a) {
        return TimeExpr(detail::make_unary(detail::UnaryOp::Neg, a.node_));
    }

    static TimeExpr sin(const TimeExpr& a)   { return unary(detail::UnaryOp::Sin, a); }
    static TimeExpr cos(const TimeExpr& a)   { return unary(detail::UnaryOp::Cos, a); }
    static TimeExpr exp(const TimeExpr& a)   { return unary(detail::UnaryOp::Exp, a); }
    static TimeExpr sqrt(const TimeExpr& a)  { return unary(detail::UnaryOp::Sqrt, a); }
    static TimeExpr abs(const TimeExpr& a)   { return unary(detail::UnaryOp::Abs, a); }
    static TimeExpr recip(const TimeExpr& a) { return unary(detail::UnaryOp::Recip, a); }
    static TimeExpr pow(const TimeExpr& a, int k) {
        return TimeExpr(detail::make_pow(a.node_, k));
    }

private:
    explicit TimeExpr(detail::NodePtr node) : node_(std::move(node)) {}
    static TimeExpr unary(detail::UnaryOp op, const TimeExpr& a) {
        return TimeExpr(detail::make_unary(op, a.node_));
    }
    static bool node_has_piecewise(const detail::NodePtr& n) {
        switch (n->kind) {
            case detail::NodeKind::Piecewise: return true;
            case detail::NodeKind::Unary:
            case detail::NodeKind::Pow:       return node_has_piecewise(n->a);
            case detail::NodeKind::Binary:
                return node_has_piecewise(n->a) || node_has_piecewise(n->b);
            default: return false;
        }
    }
    static bool node_is_real(const detail::NodePtr& n) {
        switch (n->kind) {
            case detail::NodeKind::Constant: return n->value.imag() == 0.0;
            case detail::NodeKind::Var:      return true;
            case detail::NodeKind::Unary:
            case detail::NodeKind::Pow:      return node_is_real(n->a);
            case detail::NodeKind::Binary:   return node_is_real(n->a) && node_is_real(n->b);
            case detail::NodeKind::Piecewise: {
                for (const auto& br : n->branches)
                    if (!node_is_real(br.body)) return false;
                return node_is_real(n->otherwise);
            }
        }
        return false;
    }

    detail::NodePtr node_;

    friend class ExprParser;
};

namespace detail {

class Lexer {
public:
    explicit Lexer(const std::string& src) : src_(src) {}

    void skip_ws() {
        while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
    }
    bool eof() {
        skip_ws();
        return pos_ >= src_.size();
    }
    char peek() {
        skip_ws();
        return pos_ < src_.size() ? src_[pos_] : '\0';
    }
    std::size_t pos() {
        skip_ws();
        return pos_;
    }
    bool accept(char c) {
        skip_ws();
        if (pos_ < src_.size() && src_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }
    void expect(char c, const char* what) {
        if (!accept(c))
            throw SyntaxError(pos(), std::string("expected '") + c + "' " + what);
    }
    std::optional<std::string> ident() {
        skip_ws();
        std::size_t start = pos_;
        while (pos_ < src_.size() &&
               (std::isalpha(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_'))
            ++pos_;
        if (pos_ == start) return std::nullopt;
        return src_.substr(start, pos_ - start);
    }
    std::optional<double> number() {
        skip_ws();
        std::size_t start = pos_;
        std::size_t p = pos_;
        bool digits = false;
        while (p < src_.size() && std::isdigit(static_cast<unsigned char>(src_[p]))) { ++p; digits = true; }
        if (p < src_.size() && src_[p] == '.') {
            ++p;
            while (p < src_.size() && std::isdigit(static_cast<unsigned char>(src_[p]))) { ++p; digits = true; }
        }
        if (!digits) return std::nullopt;
        if (p < src_.size() && (src_[p] == 'e' || src_[p] == 'E')) {
            std::size_t q = p + 1;
            if (q < src_.size() && (src_[q] == '+' || src_[q] == '-')) ++q;
            if (q < src_.size() && std::isdigit(static_cast<unsigned char>(src_[q]))) {
                ++q;
                while (q < src_.size() && std::isdigit(static_cast<unsigned char>(src_[q]))) ++q;
                p = q;
            }
        }
        pos_ = p;
        return std::stod(src_.substr(start, p - start));
    }
    std::optional<int> integer() {
        skip_ws();
        std::size_t p = pos_;
        bool neg = false;
        if (p < src_.size() && (src_[p] == '-' || src_[p] == '+')) {
            neg = src_[p] == '-';
            ++p;
        }
        std::size_t d = p;
        while (p < src_.size() && std::isdigit(static_cast<unsigned char>(src_[p]))) ++p;
        if (p == d) return std::nullopt;
        int v = std::stoi(src_.substr(d, p - d));
        pos_ = p;
        return neg ? -v : v;
    }

private:
    const std::string& src_;
    std::size_t pos_ = 0;
};

}  // namespace detail

class ExprParser {
public:
    static TimeExpr parse(const std::string& src) {
        detail::Lexer lex(src);
        detail::NodePtr e = parse_expr(lex);
        if (!lex.eof())
            throw SyntaxError(lex.pos(), "trailing input");
        return TimeExpr(std::move(e));
    }

private:
    using NodePtr = detail::NodePtr;

    static NodePtr parse_expr(detail::Lexer& lex) {
        NodePtr lhs;
        if (lex.accept('-'))
            lhs = detail::make_unary(detail::UnaryOp::Neg, parse_term(lex));
        else
            lhs = parse_term(lex);
        for (;;) {
            if (lex.accept('+'))
                lhs = detail::make_binary(detail::BinaryOp::Add, lhs, parse_term(lex));
            else if (lex.accept('-'))
                lhs = detail::make_binary(detail::BinaryOp::Sub, lhs, parse_term(lex));
            else
                return lhs;
        }
    }

    static NodePtr parse_term(detail::Lexer& lex) {
        NodePtr lhs = parse_factor(lex);
        for (;;) {
            if (lex.accept('*'))
                lhs = detail::make_binary(detail::BinaryOp::Mul, lhs, parse_factor(lex));
            else if (lex.accept('/'))
                lhs = detail::make_binary(detail::BinaryOp::Div, lhs, parse_factor(lex));
            else
                return lhs;
        }
    }

    static NodePtr parse_factor(detail::Lexer& lex) {
        NodePtr base = parse_base(lex);
        if (lex.accept('^')) {
            auto k = lex.integer();
            if (!k) throw SyntaxError(lex.pos(), "expected integer exponent after '^'");
            return detail::make_pow(base, *k);
        }
        return base;
    }

    static double parse_bound(detail::Lexer& lex) {
        bool neg = lex.accept('-');
        if (auto id = lex.ident()) {
            if (*id == "inf")
                return neg ? -std::numeric_limits<double>::infinity()
                           : std::numeric_limits<double>::infinity();
            throw SyntaxError(lex.pos(), "expected numeric bound or 'inf'");
        }
        auto v = lex.number();
        if (!v) throw SyntaxError(lex.pos(), "expected numeric bound");
        return neg ? -*v : *v;
    }

    static NodePtr parse_piecewise(detail::Lexer& lex) {
        lex.expect('{', "after 'piecewise'");
        auto node = std::make_shared<detail::ExprNode>();
        node->kind = detail::NodeKind::Piecewise;
        for (;;) {
            std::size_t save = lex.pos();
            if (auto id = lex.ident()) {
                if (*id == "else") {
                    lex.expect(':', "after 'else'");
                    node->otherwise = parse_expr(lex);
                    lex.expect('}', "closing piecewise");
                    if (node->branches.empty())
                        throw SyntaxError(save, "piecewise needs at least one guarded branch");
                    return node;
                }
                if (*id == "t") {
                    // sugar: t < c  ==  [-inf, c)
                    lex.expect('<', "in guard 't<...'");
                    double hi = parse_bound(lex);
                    lex.expect(':', "after guard");
                    NodePtr body = parse_expr(lex);
                    lex.expect(';', "after branch");
                    node->branches.push_back(
                        {-std::numeric_limits<double>::infinity(), hi, body});
                    continue;
                }
                throw SyntaxError(save, "expected guard or 'else' in piecewise");
            }
            lex.expect('[', "starting guard interval");
            double lo = parse_bound(lex);
            lex.expect(',', "in guard interval");
            double hi = parse_bound(lex);
            lex.expect(')', "closing half-open guard interval");
            lex.expect(':', "after guard");
            NodePtr body = parse_expr(lex);
            lex.expect(';', "after branch");
            node->branches.push_back({lo, hi, body});
        }
    }

    static NodePtr parse_base(detail::Lexer& lex) {
        if (lex.accept('(')) {
            NodePtr e = parse_expr(lex);
            lex.expect(')', "closing parenthesis");
            return e;
        }
        std::size_t at = lex.pos();
        if (auto num = lex.number())
            return detail::make_const(Complex(*num, 0.0));
        if (auto id = lex.ident()) {
            if (*id == "t") return detail::make_var();
            if (*id == "i") return detail::make_const(Complex(0.0, 1.0));
            if (*id == "piecewise") return parse_piecewise(lex);
            detail::UnaryOp op;
            if (*id == "sin") op = detail::UnaryOp::Sin;
            else if (*id == "cos") op = detail::UnaryOp::Cos;
            else if (*id == "exp") op = detail::UnaryOp::Exp;
            else if (*id == "sqrt") op = detail::UnaryOp::Sqrt;
            else if (*id == "abs") op = detail::UnaryOp::Abs;
            else if (*id == "recip") op = detail::UnaryOp::Recip;
            else throw UnknownIdentifier(at, *id);
            lex.expect('(', "after function name");
            NodePtr arg = parse_expr(lex);
            lex.expect(')', "closing function call");
            return detail::make_unary(op, arg);
        }
        throw SyntaxError(at, "expected number, 't', 'i', function call or '('");
    }

};

inline TimeExpr TimeExpr::parse(const std::string& source) {
    return ExprParser::parse(source);
}

}  // namespace ltvph

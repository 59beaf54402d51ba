#pragma once

/// @file expr.hpp
/// Arithmetic expression DSL over chart coordinates.
///
///     expr   := term (('+'|'-') term)*
///     term   := unary (('*'|'/') unary)*
///     unary  := '-' unary | power
///     power  := atom ('^' exponent)?
///     atom   := number | ident | func '(' expr (',' expr)? ')' | '(' expr ')'
///     func   := sin | cos | exp | log | sqrt | pow
///
/// Exponents are real constants: a literal (optionally signed, optionally an
/// integer fraction such as `4/3`) or a parenthesised constant expression.
/// The second argument of pow() must not reference any coordinate.

#include <cctype>
#include <cmath>
#include <memory>
#include <numbers>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "symphonic/error.hpp"
#include "symphonic/jet.hpp"
#include "symphonic/numeric.hpp"

namespace symphonic {

class Expr {
public:
    enum class Kind { constant, variable, negate, sin, cos, exp, log, sqrt, add, sub, mul, div, pow };

    struct Node {
        Kind kind;
        double value = 0.0;  // constant value or exponent
        int var = -1;
        std::shared_ptr<const Node> lhs, rhs;
    };
    using NodePtr = std::shared_ptr<const Node>;

    Expr() = default;

    /// Parses `source`; identifiers must appear in `coords` (or be `pi`).
    static Expr parse(std::string_view source, std::span<const std::string> coords);

    static Expr constant(double c, std::vector<std::string> coords = {}) {
        return Expr(make({Kind::constant, c, -1, nullptr, nullptr}), std::make_shared<const std::vector<std::string>>(std::move(coords)));
    }

    bool valid() const noexcept { return root_ != nullptr; }
    const NodePtr& root() const noexcept { return root_; }
    const std::vector<std::string>& coords() const { return *coords_; }

    /// Fully parenthesised source that parses back to an identical tree.
    std::string to_string() const { return print(*root_); }

    bool is_constant() const { return !uses_variables(*root_); }

    /// Structural equality of the trees (coordinate lists are not compared).
    friend bool operator==(const Expr& a, const Expr& b) { return same(*a.root_, *b.root_); }

    double operator()(std::span<const double> x) const { return evaluate<double>(x, 0.0); }

    /// Evaluates with scalar type T (double or Jet); `proto` supplies the
    /// layout for constants. DomainError messages name the offending node.
    template <class T>
    T evaluate(std::span<const T> vars, const T& proto) const {
        return eval_node<T>(*root_, vars, proto);
    }

    Jet evaluate_jet(std::span<const Jet> vars) const {
        if (vars.empty()) throw std::invalid_argument("jet evaluation needs at least one variable");
        return evaluate<Jet>(vars, vars[0]);
    }

private:
    Expr(NodePtr root, std::shared_ptr<const std::vector<std::string>> coords)
        : root_(std::move(root)), coords_(std::move(coords)) {}

    static NodePtr make(Node n) { return std::make_shared<const Node>(std::move(n)); }

    static bool uses_variables(const Node& n) {
        if (n.kind == Kind::variable) return true;
        return (n.lhs && uses_variables(*n.lhs)) || (n.rhs && uses_variables(*n.rhs));
    }

    static bool same(const Node& a, const Node& b) {
        if (a.kind != b.kind || a.var != b.var) return false;
        if ((a.kind == Kind::constant || a.kind == Kind::pow) && a.value != b.value) return false;
        if (bool(a.lhs) != bool(b.lhs) || bool(a.rhs) != bool(b.rhs)) return false;
        if (a.lhs && !same(*a.lhs, *b.lhs)) return false;
        if (a.rhs && !same(*a.rhs, *b.rhs)) return false;
        return true;
    }

    std::string print(const Node& n) const {
        switch (n.kind) {
            case Kind::constant: return format_double(n.value);
            case Kind::variable: return (*coords_)[n.var];
            case Kind::negate: return "(-" + print(*n.lhs) + ")";
            case Kind::sin: return "sin(" + print(*n.lhs) + ")";
            case Kind::cos: return "cos(" + print(*n.lhs) + ")";
            case Kind::exp: return "exp(" + print(*n.lhs) + ")";
            case Kind::log: return "log(" + print(*n.lhs) + ")";
            case Kind::sqrt: return "sqrt(" + print(*n.lhs) + ")";
            case Kind::add: return "(" + print(*n.lhs) + " + " + print(*n.rhs) + ")";
            case Kind::sub: return "(" + print(*n.lhs) + " - " + print(*n.rhs) + ")";
            case Kind::mul: return "(" + print(*n.lhs) + " * " + print(*n.rhs) + ")";
            case Kind::div: return "(" + print(*n.lhs) + " / " + print(*n.rhs) + ")";
            case Kind::pow: return "pow(" + print(*n.lhs) + ", " + format_double(n.value) + ")";
        }
        return {};
    }

    template <class T>
    T eval_node(const Node& n, std::span<const T> vars, const T& proto) const {
        using std::cos;
        using std::exp;
        using std::log;
        using std::sin;
        switch (n.kind) {
            case Kind::constant: return constant_like(proto, n.value);
            case Kind::variable: return vars[n.var];
            case Kind::negate: return -eval_node<T>(*n.lhs, vars, proto);
            case Kind::sin: return sin(eval_node<T>(*n.lhs, vars, proto));
            case Kind::cos: return cos(eval_node<T>(*n.lhs, vars, proto));
            case Kind::exp: return exp(eval_node<T>(*n.lhs, vars, proto));
            case Kind::add: return eval_node<T>(*n.lhs, vars, proto) + eval_node<T>(*n.rhs, vars, proto);
            case Kind::sub: return eval_node<T>(*n.lhs, vars, proto) - eval_node<T>(*n.rhs, vars, proto);
            case Kind::mul: return eval_node<T>(*n.lhs, vars, proto) * eval_node<T>(*n.rhs, vars, proto);
            default: break;
        }
        try {
            switch (n.kind) {
                case Kind::log: return checked_log(eval_node<T>(*n.lhs, vars, proto));
                case Kind::sqrt: return checked_sqrt(eval_node<T>(*n.lhs, vars, proto));
                case Kind::div: {
                    T num = eval_node<T>(*n.lhs, vars, proto);
                    return checked_div(num, eval_node<T>(*n.rhs, vars, proto));
                }
                case Kind::pow: return checked_pow(eval_node<T>(*n.lhs, vars, proto), n.value);
                default: break;
            }
        } catch (const DomainError& e) {
            const std::string what = e.what();
            if (what.find(" in `") != std::string::npos) throw;
            throw DomainError(what + " in `" + print(n) + "`");
        }
        throw std::logic_error("unhandled expression node");
    }

    static double checked_log(double x) {
        if (!(x > 0.0)) throw DomainError("log of non-positive value");
        return std::log(x);
    }
    static double checked_sqrt(double x) {
        if (x < 0.0) throw DomainError("sqrt of negative value");
        return std::sqrt(x);
    }
    static double checked_div(double a, double b) {
        if (std::abs(b) < 1e-300) throw DomainError("division by a value below 1e-300");
        return a / b;
    }
    static double checked_pow(double x, double c) {
        if (std::round(c) != c && x < 0.0) throw DomainError("non-integer power of negative value");
        if (c < 0.0 && std::abs(x) < 1e-300) throw DomainError("negative power of zero");
        return std::pow(x, c);
    }
    static Jet checked_log(const Jet& x) { return log(x); }
    static Jet checked_sqrt(const Jet& x) { return sqrt(x); }
    static Jet checked_div(const Jet& a, const Jet& b) { return a / b; }
    static Jet checked_pow(const Jet& x, double c) { return pow(x, c); }

    friend class ExprParser;

    NodePtr root_;
    std::shared_ptr<const std::vector<std::string>> coords_;
};

/// Recursive-descent parser for the grammar in the file comment.
class ExprParser {
public:
    ExprParser(std::string_view src, std::span<const std::string> coords) : src_(src), coords_(coords) {}

    Expr run() {
        auto root = expr();
        skip_ws();
        if (pos_ < src_.size()) fail("unexpected '" + std::string(1, src_[pos_]) + "'");
        return Expr(root, std::make_shared<const std::vector<std::string>>(coords_.begin(), coords_.end()));
    }

private:
    using Kind = Expr::Kind;
    using NodePtr = Expr::NodePtr;

    [[noreturn]] void fail(const std::string& what) const { fail_at(what, pos_); }

    [[noreturn]] void fail_at(const std::string& what, std::size_t at) const {
        int line = 1, col = 1;
        for (std::size_t i = 0; i < at && i < src_.size(); ++i) {
            if (src_[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        throw ParseError("syntax error: " + what, line, col);
    }

    void skip_ws() {
        while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
    }

    bool accept(char c) {
        skip_ws();
        if (pos_ < src_.size() && src_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    void expect(char c) {
        if (!accept(c)) {
            if (pos_ >= src_.size()) fail(std::string("expected '") + c + "' before end of input");
            fail(std::string("expected '") + c + "'");
        }
    }

    static NodePtr node(Kind k, NodePtr l = nullptr, NodePtr r = nullptr, double v = 0.0, int var = -1) {
        return std::make_shared<const Expr::Node>(Expr::Node{k, v, var, std::move(l), std::move(r)});
    }

    NodePtr expr() {
        NodePtr lhs = term();
        for (;;) {
            if (accept('+')) lhs = node(Kind::add, lhs, term());
            else if (accept('-')) lhs = node(Kind::sub, lhs, term());
            else return lhs;
        }
    }

    NodePtr term() {
        NodePtr lhs = unary();
        for (;;) {
            if (accept('*')) lhs = node(Kind::mul, lhs, unary());
            else if (accept('/')) lhs = node(Kind::div, lhs, unary());
            else return lhs;
        }
    }

    NodePtr unary() {
        if (accept('-')) return node(Kind::negate, unary());
        return power();
    }

    NodePtr power() {
        NodePtr base = atom();
        if (accept('^')) return node(Kind::pow, base, nullptr, exponent());
        return base;
    }

    // `^` is right-associative, so a chained exponent folds from the right.
    double exponent() {
        const double v = exponent_head();
        if (accept('^')) return std::pow(v, exponent());
        return v;
    }

    double exponent_head() {
        skip_ws();
        const std::size_t at = pos_;
        if (accept('(')) {
            NodePtr e = expr();
            expect(')');
            return fold(e, at);
        }
        double sign = 1.0;
        if (accept('-')) sign = -1.0;
        skip_ws();
        const std::size_t num_at = pos_;
        const double num = number();
        // An integer fraction literal `a/b` is a single exponent.
        const std::string_view lit = src_.substr(num_at, pos_ - num_at);
        const bool integral = lit.find_first_not_of("0123456789") == std::string_view::npos;
        if (integral && pos_ < src_.size() && src_[pos_] == '/' && pos_ + 1 < src_.size() &&
            std::isdigit(static_cast<unsigned char>(src_[pos_ + 1]))) {
            ++pos_;
            const std::size_t den_at = pos_;
            const double den = number();
            const std::string_view dl = src_.substr(den_at, pos_ - den_at);
            if (dl.find_first_not_of("0123456789") != std::string_view::npos)
                fail_at("fraction exponent needs an integer denominator", den_at);
            if (den == 0.0) fail_at("zero denominator in exponent", den_at);
            return sign * num / den;
        }
        return sign * num;
    }

    double number() {
        skip_ws();
        const std::size_t start = pos_;
        while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) ++pos_;
        if (pos_ < src_.size() && src_[pos_] == '.') {
            ++pos_;
            while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) ++pos_;
        }
        if (pos_ == start || (pos_ == start + 1 && src_[start] == '.')) {
            pos_ = start;
            if (pos_ >= src_.size()) fail("expected a number before end of input");
            fail("expected a number");
        }
        if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
            std::size_t p = pos_ + 1;
            if (p < src_.size() && (src_[p] == '+' || src_[p] == '-')) ++p;
            if (p < src_.size() && std::isdigit(static_cast<unsigned char>(src_[p]))) {
                while (p < src_.size() && std::isdigit(static_cast<unsigned char>(src_[p]))) ++p;
                pos_ = p;
            }
        }
        return std::stod(std::string(src_.substr(start, pos_ - start)));
    }

    double fold(const NodePtr& e, std::size_t at) {
        if (Expr::uses_variables(*e)) fail_at("exponent must be a constant expression", at);
        try {
            Expr tmp(e, std::make_shared<const std::vector<std::string>>());
            return tmp(std::span<const double>{});
        } catch (const DomainError& err) {
            fail_at(std::string("cannot evaluate constant exponent: ") + err.what(), at);
        }
    }

    NodePtr atom() {
        skip_ws();
        if (pos_ >= src_.size()) fail("unexpected end of input");
        const char c = src_[pos_];
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return node(Kind::constant, nullptr, nullptr, number());
        if (c == '(') {
            ++pos_;
            NodePtr e = expr();
            expect(')');
            return e;
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            const std::size_t start = pos_;
            while (pos_ < src_.size() &&
                   (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_'))
                ++pos_;
            const std::string name(src_.substr(start, pos_ - start));
            skip_ws();
            const bool call = pos_ < src_.size() && src_[pos_] == '(';
            if (call) return function(name, start);
            for (std::size_t i = 0; i < coords_.size(); ++i)
                if (coords_[i] == name) return node(Kind::variable, nullptr, nullptr, 0.0, int(i));
            if (name == "pi") return node(Kind::constant, nullptr, nullptr, std::numbers::pi);
            fail_at("undeclared variable '" + name + "'", start);
        }
        fail("unexpected '" + std::string(1, c) + "'");
    }

    NodePtr function(const std::string& name, std::size_t at) {
        Kind k;
        if (name == "sin") k = Kind::sin;
        else if (name == "cos") k = Kind::cos;
        else if (name == "exp") k = Kind::exp;
        else if (name == "log") k = Kind::log;
        else if (name == "sqrt") k = Kind::sqrt;
        else if (name == "pow") k = Kind::pow;
        else fail_at("unknown function '" + name + "'", at);
        expect('(');
        NodePtr arg = expr();
        if (k == Kind::pow) {
            expect(',');
            skip_ws();
            const std::size_t exp_at = pos_;
            NodePtr e = expr();
            expect(')');
            return node(Kind::pow, arg, nullptr, fold(e, exp_at));
        }
        expect(')');
        return node(k, arg);
    }

    std::string_view src_;
    std::span<const std::string> coords_;
    std::size_t pos_ = 0;
};

inline Expr Expr::parse(std::string_view source, std::span<const std::string> coords) {
    return ExprParser(source, coords).run();
}

/// Taylor jet of `e` at `base`, truncated at `order` (0..4).
inline Jet eval_jet(const Expr& e, std::span<const double> base, int order) {
    if (order < 0 || order > 4) throw std::invalid_argument("jet order must be in 0..4");
    auto vars = Jet::variables(base, order);
    return e.evaluate_jet(vars);
}

}  // namespace symphonic

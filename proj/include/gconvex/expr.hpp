#pragma once

// A small infix expression language over named real variables, evaluated
// either on doubles or on second-order jets (value, first and second
// derivative) for exact h, h', h'' style queries.
//
// Grammar (left-associative, tightest first):
//
//     primary  := number | name | name '(' expr {',' expr} ')' | '(' expr ')'
//     power    := primary {'^' primary}        exponent: constant integer
//     unary    := '-' unary | power
//     term     := unary {('*' | '/') unary}
//     expr     := term {('+' | '-') term}
//
// Functions: exp, tanh, sin, cos, sqrt, abs(x[, eps]), bump.
//   abs(x, eps) = sqrt(x^2 + eps^2) - eps   (eps defaults to 1e-8; C^2, abs(0) = 0)
//   bump(x)     = C^2 plateau: 1 on [-1, 1], 0 outside (-2, 2)

#include "gconvex/core.hpp"

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace gconvex::expr {

inline constexpr double kDefaultAbsEpsilon = 1e-8;

/// Truncated Taylor expansion of order two.
struct Jet {
    double value = 0.0;
    double d1 = 0.0;
    double d2 = 0.0;

    static Jet variable(double x) noexcept { return {x, 1.0, 0.0}; }
    static Jet constant(double c) noexcept { return {c, 0.0, 0.0}; }
};

class ParseError : public Error {
public:
    enum class Kind { syntax, unknown_identifier, arity };

    ParseError(Kind kind, std::size_t offset, const std::string& message);

    Kind kind() const noexcept { return kind_; }
    /// Byte offset into the source text.
    std::size_t offset() const noexcept { return offset_; }

private:
    Kind kind_;
    std::size_t offset_;
};

/// Evaluation outside a function's domain (sqrt of a negative, division by 0).
class DomainError : public Error {
public:
    using Error::Error;
};

struct Node;
using NodePtr = std::shared_ptr<const Node>;

/// Immutable expression tree bound to an ordered variable list.
class Expression {
public:
    static Expression parse(std::string_view text, std::vector<std::string> variables);
    static Expression number(double value, std::vector<std::string> variables);

    /// Fully parenthesised canonical form; parse(print()) rebuilds the same tree.
    std::string print() const;

    double eval(std::span<const double> args) const;
    Jet eval(std::span<const Jet> args) const;

    const std::vector<std::string>& variables() const noexcept { return vars_; }
    bool uses_variable(std::size_t index) const;

    /// Replaces variable `index` by `replacement` (which must share the
    /// variable list).
    Expression substitute(std::size_t index, const Expression& replacement) const;

    Expression operator+(const Expression& rhs) const;
    Expression operator-(const Expression& rhs) const;
    Expression operator*(const Expression& rhs) const;

    friend bool operator==(const Expression& a, const Expression& b);

    const NodePtr& root() const noexcept { return root_; }

private:
    Expression(NodePtr root, std::vector<std::string> vars);

    NodePtr root_;
    std::vector<std::string> vars_;
};

/// Function of the single variable `x`.
class ScalarFunction {
public:
    static ScalarFunction parse(std::string_view text);
    static ScalarFunction constant(double c);
    /// `bump(x)` as an expression, for localising polynomials.
    static ScalarFunction bump();
    /// y0 + z0 x + 1/2 a0 x^2 multiplied by bump(x): bounded, with jet
    /// (y0, z0, a0) at the origin.
    static ScalarFunction localized_quadratic(double y0, double z0, double a0);

    double operator()(double x) const { return expr_.eval(std::span<const double>(&x, 1)); }
    std::string str() const { return expr_.print(); }
    const Expression& expression() const noexcept { return expr_; }

    friend bool operator==(const ScalarFunction&, const ScalarFunction&) = default;

private:
    explicit ScalarFunction(Expression e) : expr_(std::move(e)) {}
    friend ScalarFunction compose(const ScalarFunction&, const ScalarFunction&);

    Expression expr_;
};

/// Value, first and second derivative at x.
Jet eval2(const ScalarFunction& fn, double x);

/// outer(inner(x)).
ScalarFunction compose(const ScalarFunction& outer, const ScalarFunction& inner);

/// Function of (t, y, z); used for BSDE drivers.
class TriFunction {
public:
    static TriFunction parse(std::string_view text);
    static TriFunction zero();

    double operator()(double t, double y, double z) const
    {
        const double args[3] = {t, y, z};
        return expr_.eval(std::span<const double>(args, 3));
    }
    std::string str() const { return expr_.print(); }
    const Expression& expression() const noexcept { return expr_; }

    friend bool operator==(const TriFunction&, const TriFunction&) = default;

private:
    explicit TriFunction(Expression e) : expr_(std::move(e)) {}

    Expression expr_;
};

} // namespace gconvex::expr

#include "gconvex/expr.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <utility>

namespace gconvex::expr {

enum class NodeKind { number, variable, negate, add, subtract, multiply, divide, power, call };
enum class Builtin { exp, tanh, sin, cos, sqrt, abs, bump };

struct Node {
    NodeKind kind = NodeKind::number;
    double number = 0.0;    // literal value, or abs epsilon
    std::size_t index = 0;  // variable slot
    int exponent = 0;
    Builtin fn = Builtin::exp;
    bool explicit_eps = false;
    std::vector<NodePtr> args;
};

namespace {

struct BuiltinInfo {
    std::string_view name;
    Builtin fn;
    std::size_t min_args;
    std::size_t max_args;
};

constexpr BuiltinInfo kBuiltins[] = {
    {"exp", Builtin::exp, 1, 1},   {"tanh", Builtin::tanh, 1, 1}, {"sin", Builtin::sin, 1, 1},
    {"cos", Builtin::cos, 1, 1},   {"sqrt", Builtin::sqrt, 1, 1}, {"abs", Builtin::abs, 1, 2},
    {"bump", Builtin::bump, 1, 1},
};

std::string_view builtin_name(Builtin fn)
{
    for (const auto& b : kBuiltins)
        if (b.fn == fn)
            return b.name;
    return "?";
}

NodePtr make_number(double v)
{
    auto n = std::make_shared<Node>();
    n->kind = NodeKind::number;
    n->number = v;
    return n;
}

NodePtr make_unary(NodeKind kind, NodePtr a)
{
    auto n = std::make_shared<Node>();
    n->kind = kind;
    n->args = {std::move(a)};
    return n;
}

NodePtr make_binary(NodeKind kind, NodePtr a, NodePtr b)
{
    auto n = std::make_shared<Node>();
    n->kind = kind;
    n->args = {std::move(a), std::move(b)};
    return n;
}

// Negative values are represented as negate(number) so that printed trees
// re-parse to the same shape.
NodePtr make_signed_number(double v)
{
    if (std::signbit(v))
        return make_unary(NodeKind::negate, make_number(-v));
    return make_number(v);
}

std::string format_number(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// ---------------------------------------------------------------------------
// scalar kernels shared by double and Jet evaluation
// ---------------------------------------------------------------------------

// f(x), f'(x), f''(x)
struct Derivs {
    double f0, f1, f2;
};

Derivs builtin_derivs(Builtin fn, double x, double eps, bool need_derivs)
{
    switch (fn) {
    case Builtin::exp: {
        const double e = std::exp(x);
        return {e, e, e};
    }
    case Builtin::tanh: {
        const double t = std::tanh(x);
        const double s = 1.0 - t * t;
        return {t, s, -2.0 * t * s};
    }
    case Builtin::sin:
        return {std::sin(x), std::cos(x), -std::sin(x)};
    case Builtin::cos:
        return {std::cos(x), -std::sin(x), -std::cos(x)};
    case Builtin::sqrt: {
        if (x < 0.0)
            throw DomainError("sqrt of negative argument " + format_number(x));
        const double r = std::sqrt(x);
        if (!need_derivs)
            return {r, 0.0, 0.0};
        if (x == 0.0)
            throw DomainError("sqrt is not differentiable at 0");
        return {r, 0.5 / r, -0.25 / (r * x)};
    }
    case Builtin::abs: {
        const double r = std::sqrt(x * x + eps * eps);
        return {r - eps, x / r, eps * eps / (r * r * r)};
    }
    case Builtin::bump: {
        const double ax = std::abs(x);
        if (ax <= 1.0)
            return {1.0, 0.0, 0.0};
        if (ax >= 2.0)
            return {0.0, 0.0, 0.0};
        // 1 - smootherstep(|x| - 1); the polynomial has vanishing first and
        // second derivatives at both ends.
        const double u = ax - 1.0;
        const double u2 = u * u;
        const double s = u2 * u * (10.0 + u * (-15.0 + 6.0 * u));
        const double s1 = 30.0 * u2 * (1.0 + u * (-2.0 + u));
        const double s2 = 60.0 * u * (1.0 + u * (-3.0 + 2.0 * u));
        const double sign = x < 0.0 ? -1.0 : 1.0;
        return {1.0 - s, -s1 * sign, -s2};
    }
    }
    return {0.0, 0.0, 0.0};
}

double eval_builtin(Builtin fn, double x, double eps)
{
    return builtin_derivs(fn, x, eps, false).f0;
}

Jet eval_builtin(Builtin fn, const Jet& x, double eps)
{
    const Derivs d = builtin_derivs(fn, x.value, eps, true);
    return {d.f0, d.f1 * x.d1, d.f1 * x.d2 + d.f2 * x.d1 * x.d1};
}

double int_pow(double v, int n)
{
    if (n < 0 && v == 0.0)
        throw DomainError("zero raised to a negative power");
    return std::pow(v, n);
}

// ---- Jet arithmetic ------------------------------------------------------

Jet operator+(const Jet& a, const Jet& b) { return {a.value + b.value, a.d1 + b.d1, a.d2 + b.d2}; }
Jet operator-(const Jet& a, const Jet& b) { return {a.value - b.value, a.d1 - b.d1, a.d2 - b.d2}; }
Jet operator-(const Jet& a) { return {-a.value, -a.d1, -a.d2}; }

Jet operator*(const Jet& a, const Jet& b)
{
    return {a.value * b.value, a.value * b.d1 + a.d1 * b.value,
            a.value * b.d2 + 2.0 * a.d1 * b.d1 + a.d2 * b.value};
}

Jet reciprocal(const Jet& a)
{
    if (a.value == 0.0)
        throw DomainError("division by zero");
    const double r = 1.0 / a.value;
    const double f1 = -r * r;
    const double f2 = 2.0 * r * r * r;
    return {r, f1 * a.d1, f1 * a.d2 + f2 * a.d1 * a.d1};
}

Jet operator/(const Jet& a, const Jet& b) { return a * reciprocal(b); }

double divide(double a, double b)
{
    if (b == 0.0)
        throw DomainError("division by zero");
    return a / b;
}

Jet divide(const Jet& a, const Jet& b) { return a / b; }

Jet int_pow(const Jet& a, int n)
{
    if (n == 0)
        return Jet::constant(1.0);
    if (n == 1)
        return a;
    const double v = a.value;
    const double f0 = int_pow(v, n);
    const double f1 = n * int_pow(v, n - 1);
    const double f2 = n * (n - 1) * int_pow(v, n - 2);
    return {f0, f1 * a.d1, f1 * a.d2 + f2 * a.d1 * a.d1};
}

template <typename T>
T constant_of(double v);
template <>
double constant_of<double>(double v) { return v; }
template <>
Jet constant_of<Jet>(double v) { return Jet::constant(v); }

template <typename T>
T evaluate(const Node& n, std::span<const T> args)
{
    switch (n.kind) {
    case NodeKind::number:
        return constant_of<T>(n.number);
    case NodeKind::variable:
        return args[n.index];
    case NodeKind::negate:
        return -evaluate(*n.args[0], args);
    case NodeKind::add:
        return evaluate(*n.args[0], args) + evaluate(*n.args[1], args);
    case NodeKind::subtract:
        return evaluate(*n.args[0], args) - evaluate(*n.args[1], args);
    case NodeKind::multiply:
        return evaluate(*n.args[0], args) * evaluate(*n.args[1], args);
    case NodeKind::divide:
        return divide(evaluate(*n.args[0], args), evaluate(*n.args[1], args));
    case NodeKind::power:
        return int_pow(evaluate(*n.args[0], args), n.exponent);
    case NodeKind::call:
        return eval_builtin(n.fn, evaluate(*n.args[0], args), n.number);
    }
    return constant_of<T>(0.0);
}

bool uses(const Node& n, std::size_t index)
{
    if (n.kind == NodeKind::variable)
        return n.index == index;
    return std::any_of(n.args.begin(), n.args.end(),
                       [&](const NodePtr& a) { return uses(*a, index); });
}

bool has_variables(const Node& n)
{
    if (n.kind == NodeKind::variable)
        return true;
    return std::any_of(n.args.begin(), n.args.end(),
                       [](const NodePtr& a) { return has_variables(*a); });
}

bool same_tree(const Node& a, const Node& b)
{
    if (a.kind != b.kind || a.args.size() != b.args.size())
        return false;
    switch (a.kind) {
    case NodeKind::number:
        if (a.number != b.number)
            return false;
        break;
    case NodeKind::variable:
        if (a.index != b.index)
            return false;
        break;
    case NodeKind::power:
        if (a.exponent != b.exponent)
            return false;
        break;
    case NodeKind::call:
        if (a.fn != b.fn || a.number != b.number || a.explicit_eps != b.explicit_eps)
            return false;
        break;
    default:
        break;
    }
    for (std::size_t i = 0; i < a.args.size(); ++i)
        if (!same_tree(*a.args[i], *b.args[i]))
            return false;
    return true;
}

NodePtr substitute_node(const NodePtr& n, std::size_t index, const NodePtr& replacement)
{
    if (n->kind == NodeKind::variable)
        return n->index == index ? replacement : n;
    if (n->args.empty())
        return n;
    auto copy = std::make_shared<Node>(*n);
    for (auto& a : copy->args)
        a = substitute_node(a, index, replacement);
    return copy;
}

void print_node(const Node& n, const std::vector<std::string>& vars, std::string& out)
{
    auto binary = [&](const char* op) {
        out += '(';
        print_node(*n.args[0], vars, out);
        out += op;
        print_node(*n.args[1], vars, out);
        out += ')';
    };
    switch (n.kind) {
    case NodeKind::number:
        out += format_number(n.number);
        break;
    case NodeKind::variable:
        out += vars[n.index];
        break;
    case NodeKind::negate:
        out += "(-";
        print_node(*n.args[0], vars, out);
        out += ')';
        break;
    case NodeKind::add:
        binary(" + ");
        break;
    case NodeKind::subtract:
        binary(" - ");
        break;
    case NodeKind::multiply:
        binary(" * ");
        break;
    case NodeKind::divide:
        binary(" / ");
        break;
    case NodeKind::power:
        out += '(';
        print_node(*n.args[0], vars, out);
        out += '^';
        if (n.exponent < 0)
            out += "(-" + std::to_string(-n.exponent) + ")";
        else
            out += std::to_string(n.exponent);
        out += ')';
        break;
    case NodeKind::call:
        out += builtin_name(n.fn);
        out += '(';
        print_node(*n.args[0], vars, out);
        if (n.explicit_eps)
            out += ", " + format_number(n.number);
        out += ')';
        break;
    }
}

// ---------------------------------------------------------------------------
// parser
// ---------------------------------------------------------------------------

class Parser {
public:
    Parser(std::string_view text, const std::vector<std::string>& vars) : text_(text), vars_(vars) {}

    NodePtr parse()
    {
        skip_space();
        if (pos_ == text_.size())
            fail(ParseError::Kind::syntax, "empty expression");
        NodePtr e = parse_expr();
        skip_space();
        if (pos_ != text_.size())
            fail(ParseError::Kind::syntax, std::string("unexpected '") + text_[pos_] + "'");
        return e;
    }

private:
    [[noreturn]] void fail(ParseError::Kind kind, const std::string& msg, std::size_t at) const
    {
        throw ParseError(kind, at, msg);
    }
    [[noreturn]] void fail(ParseError::Kind kind, const std::string& msg) const { fail(kind, msg, pos_); }

    void skip_space()
    {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_])))
            ++pos_;
    }

    bool accept(char c)
    {
        skip_space();
        if (pos_ < text_.size() && text_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    NodePtr parse_expr()
    {
        NodePtr lhs = parse_term();
        for (;;) {
            if (accept('+'))
                lhs = make_binary(NodeKind::add, lhs, parse_term());
            else if (accept('-'))
                lhs = make_binary(NodeKind::subtract, lhs, parse_term());
            else
                return lhs;
        }
    }

    NodePtr parse_term()
    {
        NodePtr lhs = parse_unary();
        for (;;) {
            if (accept('*'))
                lhs = make_binary(NodeKind::multiply, lhs, parse_unary());
            else if (accept('/'))
                lhs = make_binary(NodeKind::divide, lhs, parse_unary());
            else
                return lhs;
        }
    }

    NodePtr parse_unary()
    {
        if (accept('-'))
            return make_unary(NodeKind::negate, parse_unary());
        return parse_power();
    }

    NodePtr parse_power()
    {
        NodePtr base = parse_primary();
        while (accept('^')) {
            skip_space();
            const std::size_t at = pos_;
            NodePtr e = parse_primary();
            if (has_variables(*e))
                fail(ParseError::Kind::syntax, "exponent must be a constant integer", at);
            const double v = evaluate<double>(*e, {});
            if (v != std::trunc(v) || std::abs(v) > 1024.0)
                fail(ParseError::Kind::syntax, "exponent must be a constant integer", at);
            auto p = std::make_shared<Node>();
            p->kind = NodeKind::power;
            p->exponent = static_cast<int>(v);
            p->args = {base};
            base = p;
        }
        return base;
    }

    NodePtr parse_primary()
    {
        skip_space();
        if (pos_ == text_.size())
            fail(ParseError::Kind::syntax, "expected operand");
        const char c = text_[pos_];
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.')
            return parse_number();
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_')
            return parse_identifier();
        if (c == '(') {
            ++pos_;
            NodePtr e = parse_expr();
            if (!accept(')'))
                fail(ParseError::Kind::syntax, "expected ')'");
            return e;
        }
        fail(ParseError::Kind::syntax, std::string("expected operand, found '") + c + "'");
    }

    NodePtr parse_number()
    {
        const char* first = text_.data() + pos_;
        const char* last = text_.data() + text_.size();
        double v = 0.0;
        const auto [ptr, ec] = std::from_chars(first, last, v);
        if (ec != std::errc() || !std::isfinite(v))
            fail(ParseError::Kind::syntax, "malformed number");
        pos_ += static_cast<std::size_t>(ptr - first);
        return make_number(v);
    }

    NodePtr parse_identifier()
    {
        const std::size_t start = pos_;
        while (pos_ < text_.size()
               && (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
            ++pos_;
        const std::string_view name = text_.substr(start, pos_ - start);

        skip_space();
        if (pos_ < text_.size() && text_[pos_] == '(') {
            const BuiltinInfo* info = nullptr;
            for (const auto& b : kBuiltins)
                if (b.name == name)
                    info = &b;
            if (info == nullptr)
                fail(ParseError::Kind::unknown_identifier,
                     "unknown function '" + std::string(name) + "'", start);
            ++pos_;
            std::vector<NodePtr> args;
            if (!accept(')')) {
                do {
                    args.push_back(parse_expr());
                } while (accept(','));
                if (!accept(')'))
                    fail(ParseError::Kind::syntax, "expected ')' or ','");
            }
            if (args.size() < info->min_args || args.size() > info->max_args)
                fail(ParseError::Kind::arity,
                     std::string(name) + "() takes " + std::to_string(info->min_args)
                         + (info->max_args != info->min_args
                                ? " or " + std::to_string(info->max_args)
                                : std::string())
                         + " argument(s), got " + std::to_string(args.size()),
                     start);
            auto n = std::make_shared<Node>();
            n->kind = NodeKind::call;
            n->fn = info->fn;
            n->number = kDefaultAbsEpsilon;
            if (args.size() == 2) {
                if (has_variables(*args[1]))
                    fail(ParseError::Kind::syntax, "abs() epsilon must be constant", start);
                const double eps = evaluate<double>(*args[1], {});
                if (!(eps > 0.0))
                    fail(ParseError::Kind::syntax, "abs() epsilon must be positive", start);
                n->number = eps;
                n->explicit_eps = true;
            }
            n->args = {args[0]};
            return n;
        }

        for (std::size_t i = 0; i < vars_.size(); ++i) {
            if (vars_[i] == name) {
                auto n = std::make_shared<Node>();
                n->kind = NodeKind::variable;
                n->index = i;
                return n;
            }
        }
        fail(ParseError::Kind::unknown_identifier, "unknown identifier '" + std::string(name) + "'",
             start);
    }

    std::string_view text_;
    const std::vector<std::string>& vars_;
    std::size_t pos_ = 0;
};

const std::vector<std::string>& scalar_vars()
{
    static const std::vector<std::string> v{"x"};
    return v;
}

const std::vector<std::string>& tri_vars()
{
    static const std::vector<std::string> v{"t", "y", "z"};
    return v;
}

} // namespace

ParseError::ParseError(Kind kind, std::size_t offset, const std::string& message)
    : Error(message + " at offset " + std::to_string(offset)), kind_(kind), offset_(offset)
{
}

// ---------------------------------------------------------------------------
// Expression
// ---------------------------------------------------------------------------

Expression::Expression(NodePtr root, std::vector<std::string> vars)
    : root_(std::move(root)), vars_(std::move(vars))
{
}

Expression Expression::parse(std::string_view text, std::vector<std::string> variables)
{
    NodePtr root = Parser(text, variables).parse();
    return Expression(std::move(root), std::move(variables));
}

Expression Expression::number(double value, std::vector<std::string> variables)
{
    return Expression(make_signed_number(value), std::move(variables));
}

std::string Expression::print() const
{
    std::string out;
    print_node(*root_, vars_, out);
    return out;
}

double Expression::eval(std::span<const double> args) const
{
    return evaluate<double>(*root_, args);
}

Jet Expression::eval(std::span<const Jet> args) const
{
    return evaluate<Jet>(*root_, args);
}

bool Expression::uses_variable(std::size_t index) const
{
    return uses(*root_, index);
}

Expression Expression::substitute(std::size_t index, const Expression& replacement) const
{
    if (replacement.vars_ != vars_)
        throw InvalidArgument("substitution requires matching variable lists");
    return Expression(substitute_node(root_, index, replacement.root_), vars_);
}

Expression Expression::operator+(const Expression& rhs) const
{
    return Expression(make_binary(NodeKind::add, root_, rhs.root_), vars_);
}

Expression Expression::operator-(const Expression& rhs) const
{
    return Expression(make_binary(NodeKind::subtract, root_, rhs.root_), vars_);
}

Expression Expression::operator*(const Expression& rhs) const
{
    return Expression(make_binary(NodeKind::multiply, root_, rhs.root_), vars_);
}

bool operator==(const Expression& a, const Expression& b)
{
    return a.vars_ == b.vars_ && same_tree(*a.root_, *b.root_);
}

// ---------------------------------------------------------------------------
// ScalarFunction / TriFunction
// ---------------------------------------------------------------------------

ScalarFunction ScalarFunction::parse(std::string_view text)
{
    return ScalarFunction(Expression::parse(text, scalar_vars()));
}

ScalarFunction ScalarFunction::constant(double c)
{
    return ScalarFunction(Expression::number(c, scalar_vars()));
}

ScalarFunction ScalarFunction::bump()
{
    return parse("bump(x)");
}

ScalarFunction ScalarFunction::localized_quadratic(double y0, double z0, double a0)
{
    const auto& v = scalar_vars();
    const Expression x = Expression::parse("x", v);
    const Expression poly = Expression::number(y0, v) + Expression::number(z0, v) * x
                            + Expression::number(0.5 * a0, v) * x * x;
    return ScalarFunction(poly * bump().expression());
}

Jet eval2(const ScalarFunction& fn, double x)
{
    const Jet seed = Jet::variable(x);
    return fn.expression().eval(std::span<const Jet>(&seed, 1));
}

ScalarFunction compose(const ScalarFunction& outer, const ScalarFunction& inner)
{
    return ScalarFunction(outer.expr_.substitute(0, inner.expr_));
}

TriFunction TriFunction::parse(std::string_view text)
{
    return TriFunction(Expression::parse(text, tri_vars()));
}

TriFunction TriFunction::zero()
{
    return TriFunction(Expression::number(0.0, tri_vars()));
}

} // namespace gconvex::expr

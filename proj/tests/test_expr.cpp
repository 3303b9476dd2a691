#include "gconvex/expr.hpp"

#include "test_support.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace gconvex;
using namespace gconvex::expr;

namespace {

struct Fd {
    double d1;
    double d2;
};

Fd central_difference(const ScalarFunction& fn, double x, double h = 1e-4)
{
    const double fp = fn(x + h);
    const double f0 = fn(x);
    const double fm = fn(x - h);
    return {(fp - fm) / (2.0 * h), (fp - 2.0 * f0 + fm) / (h * h)};
}

ParseError::Kind parse_error_kind(const std::string& text, std::size_t* offset = nullptr)
{
    try {
        ScalarFunction::parse(text);
    } catch (const ParseError& e) {
        if (offset)
            *offset = e.offset();
        return e.kind();
    }
    ADD_FAILURE() << "no parse error for '" << text << "'";
    return ParseError::Kind::syntax;
}

} // namespace

TEST(Parse, EvaluatesSimpleFunctions)
{
    EXPECT_DOUBLE_EQ(ScalarFunction::parse("x^2")(3.0), 9.0);
    EXPECT_DOUBLE_EQ(ScalarFunction::parse("exp(x)")(0.0), 1.0);
    EXPECT_DOUBLE_EQ(ScalarFunction::parse("1 + 2 * 3")(0.0), 7.0);
    EXPECT_DOUBLE_EQ(ScalarFunction::parse("(1 + 2) * 3")(0.0), 9.0);
    EXPECT_DOUBLE_EQ(ScalarFunction::parse("8 / 4 / 2")(0.0), 1.0);
    EXPECT_DOUBLE_EQ(ScalarFunction::parse("8 - 4 - 2")(0.0), 2.0);
    EXPECT_DOUBLE_EQ(ScalarFunction::parse("2.5e-1 * x")(4.0), 1.0);
}

TEST(Parse, PrecedenceOfPowerAndUnaryMinus)
{
    // ^ binds tighter than unary minus
    EXPECT_DOUBLE_EQ(ScalarFunction::parse("-x^2")(3.0), -9.0);
    EXPECT_DOUBLE_EQ(ScalarFunction::parse("(-x)^2")(3.0), 9.0);
    EXPECT_DOUBLE_EQ(ScalarFunction::parse("-(x^2)")(3.0), -9.0);
    EXPECT_DOUBLE_EQ(ScalarFunction::parse("2^3^2")(0.0), 64.0);  // left-associative
    EXPECT_DOUBLE_EQ(ScalarFunction::parse("x^(-1)")(4.0), 0.25);
    EXPECT_DOUBLE_EQ(ScalarFunction::parse("--x")(4.0), 4.0);
}

TEST(Parse, SyntaxErrorsCarryOffsets)
{
    std::size_t offset = 99;
    EXPECT_EQ(parse_error_kind("2*", &offset), ParseError::Kind::syntax);
    EXPECT_EQ(offset, 2u);
    EXPECT_EQ(parse_error_kind("(x + 1", &offset), ParseError::Kind::syntax);
    EXPECT_EQ(offset, 6u);
    EXPECT_EQ(parse_error_kind("x + * 2", &offset), ParseError::Kind::syntax);
    EXPECT_EQ(offset, 4u);
    EXPECT_EQ(parse_error_kind("", &offset), ParseError::Kind::syntax);
    EXPECT_EQ(parse_error_kind("x 2"), ParseError::Kind::syntax);
    EXPECT_EQ(parse_error_kind("x^y"), ParseError::Kind::unknown_identifier);
    EXPECT_EQ(parse_error_kind("x^0.5"), ParseError::Kind::syntax);
    EXPECT_EQ(parse_error_kind("x $ 2"), ParseError::Kind::syntax);
}

TEST(Parse, UnknownIdentifiersAndArity)
{
    std::size_t offset = 99;
    EXPECT_EQ(parse_error_kind("y + 1", &offset), ParseError::Kind::unknown_identifier);
    EXPECT_EQ(offset, 0u);
    EXPECT_EQ(parse_error_kind("1 + log(x)", &offset), ParseError::Kind::unknown_identifier);
    EXPECT_EQ(offset, 4u);
    EXPECT_EQ(parse_error_kind("exp(x, 1)"), ParseError::Kind::arity);
    EXPECT_EQ(parse_error_kind("sin()"), ParseError::Kind::arity);
    EXPECT_EQ(parse_error_kind("abs(x, 1, 2)"), ParseError::Kind::arity);
    EXPECT_NO_THROW(ScalarFunction::parse("abs(x, 0.5)"));
    EXPECT_NO_THROW(TriFunction::parse("t + y * z"));
    EXPECT_THROW(TriFunction::parse("x"), ParseError);
}

TEST(Eval2, PolynomialAndExponentialJets)
{
    const Jet a = eval2(ScalarFunction::parse("x^2"), 3.0);
    EXPECT_DOUBLE_EQ(a.value, 9.0);
    EXPECT_DOUBLE_EQ(a.d1, 6.0);
    EXPECT_DOUBLE_EQ(a.d2, 2.0);
    const Jet b = eval2(ScalarFunction::parse("exp(x)"), 0.0);
    EXPECT_DOUBLE_EQ(b.value, 1.0);
    EXPECT_DOUBLE_EQ(b.d1, 1.0);
    EXPECT_DOUBLE_EQ(b.d2, 1.0);
    const Jet c = eval2(ScalarFunction::parse("x^(-2)"), 2.0);
    EXPECT_DOUBLE_EQ(c.value, 0.25);
    EXPECT_DOUBLE_EQ(c.d1, -0.25);
    EXPECT_DOUBLE_EQ(c.d2, 0.375);
}

TEST(Eval2, TanhMatchesFiniteDifferences)
{
    const ScalarFunction f = ScalarFunction::parse("tanh(x)");
    const Jet j = eval2(f, 0.5);
    const Fd fd = central_difference(f, 0.5);
    EXPECT_NEAR(j.d1, fd.d1, 1e-6);
    EXPECT_NEAR(j.d2, fd.d2, 1e-6);
}

TEST(Eval2, CatalogAgreesWithFiniteDifferences)
{
    std::vector<std::string> fns = gconvex::testing::catalog();
    fns.insert(fns.end(), {"cos(x) / (2 + x^2)", "sqrt(1 + x^2)", "abs(x, 0.3)", "bump(x)",
                           "exp(-(x^2)) * sin(3 * x)", "x * bump(x)"});
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> point(-2.5, 2.5);
    for (const std::string& text : fns) {
        const ScalarFunction f = ScalarFunction::parse(text);
        for (int k = 0; k < 100; ++k) {
            const double x = point(rng);
            const Jet j = eval2(f, x);
            const Fd fd = central_difference(f, x);
            EXPECT_DOUBLE_EQ(j.value, f(x)) << text;
            EXPECT_LE(std::abs(j.d1 - fd.d1), 1e-6 * (1 + std::abs(j.d1))) << text << " at " << x;
            EXPECT_LE(std::abs(j.d2 - fd.d2), 1e-4 * (1 + std::abs(j.d2))) << text << " at " << x;
        }
    }
}

TEST(Eval2, DomainErrors)
{
    EXPECT_THROW(ScalarFunction::parse("sqrt(x)")(-1.0), DomainError);
    EXPECT_THROW(eval2(ScalarFunction::parse("sqrt(x)"), 0.0), DomainError);
    EXPECT_DOUBLE_EQ(ScalarFunction::parse("sqrt(x)")(0.0), 0.0);
    EXPECT_THROW(ScalarFunction::parse("1 / x")(0.0), DomainError);
    EXPECT_THROW(ScalarFunction::parse("x^(-1)")(0.0), DomainError);
    EXPECT_THROW(eval2(ScalarFunction::parse("1 / x"), 0.0), DomainError);
}

TEST(SmoothAbs, VanishesAtZeroAndApproachesAbs)
{
    const ScalarFunction a = ScalarFunction::parse("abs(x)");
    EXPECT_EQ(a(0.0), 0.0);
    EXPECT_NEAR(a(3.0), 3.0, 1e-7);
    EXPECT_NEAR(a(-3.0), 3.0, 1e-7);
    const ScalarFunction wide = ScalarFunction::parse("abs(x, 0.5)");
    EXPECT_DOUBLE_EQ(wide(0.0), 0.0);
    EXPECT_NEAR(wide(1.0), std::sqrt(1.25) - 0.5, 1e-15);
    const Jet j = eval2(wide, 0.0);
    EXPECT_DOUBLE_EQ(j.d1, 0.0);
    EXPECT_DOUBLE_EQ(j.d2, 2.0);  // 1 / eps
}

TEST(Bump, PlateauSupportAndSmoothness)
{
    const ScalarFunction b = ScalarFunction::bump();
    for (double x : {-1.0, -0.3, 0.0, 0.7, 1.0})
        EXPECT_EQ(b(x), 1.0);
    for (double x : {-5.0, -2.0, 2.0, 3.5})
        EXPECT_EQ(b(x), 0.0);
    // C^2 joins: derivative jets continuous across |x| = 1 and |x| = 2
    for (double knot : {-2.0, -1.0, 1.0, 2.0}) {
        const Jet l = eval2(b, knot - 1e-9);
        const Jet r = eval2(b, knot + 1e-9);
        EXPECT_NEAR(l.value, r.value, 1e-8);
        EXPECT_NEAR(l.d1, r.d1, 1e-6);
        EXPECT_NEAR(l.d2, r.d2, 1e-6);
    }
    double prev = 1.0;
    for (double x = 1.0; x <= 2.0; x += 0.01) {
        EXPECT_LE(b(x), prev + 1e-15);
        EXPECT_DOUBLE_EQ(b(x), b(-x));
        prev = b(x);
    }
}

TEST(LocalizedQuadratic, HasRequestedJetAndCompactSupport)
{
    const ScalarFunction phi = ScalarFunction::localized_quadratic(0.5, -1.5, 3.0);
    const Jet j = eval2(phi, 0.0);
    EXPECT_DOUBLE_EQ(j.value, 0.5);
    EXPECT_DOUBLE_EQ(j.d1, -1.5);
    EXPECT_DOUBLE_EQ(j.d2, 3.0);
    EXPECT_EQ(phi(2.5), 0.0);
    EXPECT_EQ(phi(-7.0), 0.0);
}

TEST(PrintRoundTrip, CanonicalFormIsStable)
{
    std::vector<std::string> fns = gconvex::testing::catalog();
    fns.insert(fns.end(), {"-x^2", "2^3^2", "1 - (2 - x)", "abs(x)", "abs(x, 0.25)", "x / 3 * 1e-300",
                           "0.1 + 0.2", "bump(x) * cos(-x)", "x^(-3)"});
    for (const std::string& text : fns) {
        const ScalarFunction a = ScalarFunction::parse(text);
        const ScalarFunction b = ScalarFunction::parse(a.str());
        EXPECT_EQ(a, b) << text << " -> " << a.str();
        EXPECT_EQ(a.str(), b.str());
        for (double x : {-1.7, 0.3, 1.9})
            EXPECT_EQ(a(x), b(x)) << text;
    }
}

TEST(Compose, OuterOfInner)
{
    const ScalarFunction h = ScalarFunction::parse("exp(x)");
    const ScalarFunction phi = ScalarFunction::parse("sin(x)");
    const ScalarFunction c = compose(h, phi);
    for (double x : {-1.0, 0.0, 0.4, 2.0})
        EXPECT_DOUBLE_EQ(c(x), std::exp(std::sin(x)));
    const Jet j = eval2(c, 0.3);
    // chain rule by hand
    const double s = std::sin(0.3), co = std::cos(0.3), e = std::exp(s);
    EXPECT_NEAR(j.d1, e * co, 1e-15);
    EXPECT_NEAR(j.d2, e * co * co - e * s, 1e-15);
}

TEST(TriFunction, EvaluatesAllVariables)
{
    const TriFunction g = TriFunction::parse("t * y - 2 * z^2");
    EXPECT_DOUBLE_EQ(g(2.0, 3.0, 1.0), 4.0);
    EXPECT_EQ(TriFunction::zero()(1.0, 2.0, 3.0), 0.0);
    EXPECT_EQ(TriFunction::parse(g.str()), g);
}

TEST(Expression, SubstituteAndArithmetic)
{
    const Expression e = Expression::parse("a * b + 1", {"a", "b"});
    const Expression two = Expression::number(2.0, {"a", "b"});
    const Expression s = e.substitute(0, two);
    EXPECT_FALSE(s.uses_variable(0));
    EXPECT_TRUE(s.uses_variable(1));
    const double args[2] = {10.0, 4.0};
    EXPECT_DOUBLE_EQ(s.eval(std::span<const double>(args, 2)), 9.0);
    const Expression sum = e + two;
    EXPECT_DOUBLE_EQ(sum.eval(std::span<const double>(args, 2)), 43.0);
    const Expression prod = e * two - two;
    EXPECT_DOUBLE_EQ(prod.eval(std::span<const double>(args, 2)), 80.0);
}

#include "gconvex/oracle.hpp"

#include "test_support.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace gconvex;
using expr::ScalarFunction;
using gconvex::testing::kBand21;

TEST(TreeExpectation, ClosedFormValues)
{
    EXPECT_NEAR(tree_expectation(kBand21, ScalarFunction::parse("x"), 1.0, 2000), 0.0, 1e-12);
    EXPECT_NEAR(tree_expectation(kBand21, ScalarFunction::parse("x^2"), 1.0, 2000), 2.0, 5e-3);
    EXPECT_NEAR(tree_expectation(kBand21, ScalarFunction::parse("-(x^2)"), 1.0, 2000), -1.0, 5e-3);
    EXPECT_EQ(tree_expectation(kBand21, ScalarFunction::parse("cos(x)"), 0.0, 10), 1.0);
    EXPECT_THROW(tree_expectation(kBand21, ScalarFunction::parse("x"), 1.0, 0), InvalidArgument);
}

TEST(TreeExpectation, DegenerateBandMatchesQuadrature)
{
    for (double var : {0.5, 1.0, 2.0}) {
        const VolatilityBand band(var, var);
        const ScalarFunction phi = ScalarFunction::parse("tanh(x)");
        const ScalarFunction phi2 = ScalarFunction::parse("tanh(x - 0.3) + cos(x)");
        for (const ScalarFunction* f : {&phi, &phi2}) {
            const double exact = gconvex::testing::gaussian_expectation([&](double x) { return (*f)(x); }, var);
            EXPECT_NEAR(tree_expectation(band, *f, 1.0, 2000), exact, 1e-3);
        }
    }
}

TEST(TreeExpectation, ErrorShrinksWithSteps)
{
    // x^4 is convex throughout, so the exact value is 3 sigma_max^4 t^2 = 12
    double previous = INFINITY;
    for (std::size_t steps : {250, 500, 1000, 2000, 4000}) {
        const double err = std::abs(tree_expectation(kBand21, ScalarFunction::parse("x^4"), 1.0, steps) - 12.0);
        EXPECT_LE(err, previous + 1e-4) << steps;
        previous = err;
    }
    const double err2 = std::abs(tree_expectation(kBand21, ScalarFunction::parse("x^2"), 1.0, 250) - 2.0);
    EXPECT_LE(err2, 1e-4);
}

TEST(TreeControlValue, RunningRewardIsCollectedPerStep)
{
    // constant reward r per step adds steps * r; sup picks the larger action
    const auto reward = [](std::size_t, double, double a) { return a == 2.0 ? 0.01 : 0.02; };
    const double v = tree_control_value(kBand21, [](double) { return 0.0; }, reward, 1.0, 50);
    EXPECT_NEAR(v, 50 * 0.02, 1e-12);
}

TEST(SimulatePath, ConstHighHasExactQuadraticVariation)
{
    const LatticePath p = simulate_path(kBand21, ConstHighVolatility{}, 0.0, 1.0, 10000, 42);
    EXPECT_NO_THROW(p.validate(kBand21));
    EXPECT_NEAR(p.qv.back(), 2.0, 1e-12);
    const std::vector<double> qv = quadratic_variation(p);
    EXPECT_NEAR(qv.back(), 2.0, 1e-11);
    for (std::size_t i = 0; i < qv.size(); ++i)
        EXPECT_NEAR(qv[i], p.qv[i], 1e-12 * (1.0 + p.qv[i]));
    EXPECT_EQ(p.times.front(), 0.0);
    EXPECT_EQ(p.times.back(), 1.0);
}

TEST(SimulatePath, SeedDeterminesPath)
{
    const LatticePath a = simulate_path(kBand21, RandomVolatility{}, 0.0, 1.0, 500, 7);
    const LatticePath b = simulate_path(kBand21, RandomVolatility{}, 0.0, 1.0, 500, 7);
    const LatticePath c = simulate_path(kBand21, RandomVolatility{}, 0.0, 1.0, 500, 8);
    EXPECT_EQ(a.b, b.b);
    EXPECT_EQ(a.a, b.a);
    EXPECT_NE(a.b, c.b);
}

TEST(SimulatePath, RandomPolicyStaysInBand)
{
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        const LatticePath p = simulate_path(kBand21, RandomVolatility{}, 0.0, 1.0, 1000, seed);
        EXPECT_NO_THROW(p.validate(kBand21));
        EXPECT_GE(p.qv.back(), 1.0 - 1e-12);
        EXPECT_LE(p.qv.back(), 2.0 + 1e-12);
        const std::vector<double> qv = quadratic_variation(p);
        for (std::size_t i = 0; i < qv.size(); ++i)
            ASSERT_NEAR(qv[i], p.qv[i], 1e-12 * (1.0 + p.qv[i]));
    }
}

TEST(SimulatePath, MarkovPolicyFollowsEtaSign)
{
    const MarkovVolatility policy{[](std::size_t, double x) { return x; }};
    const LatticePath p = simulate_path(kBand21, policy, 0.0, 1.0, 400, 3);
    for (std::size_t i = 0; i < p.steps(); ++i)
        EXPECT_EQ(p.a[i], p.b[i] >= 0.0 ? 2.0 : 1.0);
}

TEST(SimulatePath, GridOverloadAndValidation)
{
    const SpaceTimeGrid grid(0.5, -3.0, 3.0, 60, 300);
    const LatticePath p = simulate_path(kBand21, ConstLowVolatility{}, grid, 1);
    EXPECT_EQ(p.steps(), 300u);
    EXPECT_NEAR(p.qv.back(), 0.5, 1e-12);
    LatticePath bad = p;
    bad.a[3] = 2.5;
    EXPECT_THROW(bad.validate(kBand21), InvalidArgument);
    bad = p;
    bad.qv.pop_back();
    EXPECT_THROW(bad.validate(kBand21), InvalidArgument);
    EXPECT_THROW(simulate_path(kBand21, ConstLowVolatility{}, 1.0, 1.0, 10, 1), InvalidArgument);
}

TEST(QuadraticVariation, ConstantPathIsZero)
{
    const std::vector<double> b(20, 1.5);
    for (double v : quadratic_variation(b))
        EXPECT_EQ(v, 0.0);
}

TEST(MutualVariation, PolarizationIdentities)
{
    const LatticePath p1 = simulate_path(kBand21, RandomVolatility{}, 0.0, 1.0, 800, 11);
    const LatticePath p1b = simulate_path(kBand21, RandomVolatility{}, 0.0, 1.0, 800, 12);
    const LatticePath p2 = simulate_path(kBand21, ConstHighVolatility{}, 0.0, 1.0, 800, 13);

    const std::vector<double> qv = quadratic_variation(p1);
    const std::vector<double> self = mutual_variation(p1, p1);
    LatticePath neg = p1;
    for (double& v : neg.b)
        v = -v;
    const std::vector<double> anti = mutual_variation(p1, neg);
    for (std::size_t i = 0; i < qv.size(); ++i) {
        EXPECT_NEAR(self[i], qv[i], 1e-12);
        EXPECT_NEAR(anti[i], -qv[i], 1e-12);
    }

    // symmetry and bilinearity in the first argument
    LatticePath sum = p1;
    for (std::size_t i = 0; i < sum.b.size(); ++i)
        sum.b[i] = p1.b[i] + p1b.b[i];
    const std::vector<double> lhs = mutual_variation(sum, p2);
    const std::vector<double> r1 = mutual_variation(p1, p2);
    const std::vector<double> r2 = mutual_variation(p1b, p2);
    const std::vector<double> r1t = mutual_variation(p2, p1);
    for (std::size_t i = 0; i < lhs.size(); ++i) {
        EXPECT_NEAR(lhs[i], r1[i] + r2[i], 1e-12);
        EXPECT_NEAR(r1[i], r1t[i], 1e-12);
    }

    const LatticePath other_grid = simulate_path(kBand21, RandomVolatility{}, 0.0, 2.0, 800, 11);
    EXPECT_THROW(mutual_variation(p1, other_grid), GridMismatch);
}

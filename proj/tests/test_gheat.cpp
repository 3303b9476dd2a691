#include "gconvex/gheat.hpp"
#include "gconvex/oracle.hpp"

#include "test_support.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace gconvex;
using expr::ScalarFunction;
using gconvex::testing::kBand21;

namespace {

const SpaceTimeGrid& standard_grid()
{
    static const SpaceTimeGrid g = SpaceTimeGrid::standard(kBand21, 1.0);
    return g;
}

double gexp(const std::string& phi, double t, const SpaceTimeGrid& grid = standard_grid(),
            const VolatilityBand& band = kBand21)
{
    return g_expectation(band, ScalarFunction::parse(phi), t, grid);
}

} // namespace

TEST(SolveGHeat, ConstantsAreExactSolutions)
{
    const FieldSolution f = solve_g_heat(kBand21, ScalarFunction::constant(3.25), standard_grid());
    for (std::size_t i = 0; i < f.layers(); i += 97)
        for (std::size_t j = 0; j < f.nodes(); ++j)
            ASSERT_EQ(f.u(i, j), 3.25);
    EXPECT_EQ(f.boundary_drift(), 0.0);
}

TEST(SolveGHeat, LayerZeroIsTheSampledDatum)
{
    const ScalarFunction phi = ScalarFunction::parse("sin(x) + x^2");
    const FieldSolution f = solve_g_heat(kBand21, phi, standard_grid());
    const std::vector<double> datum = sample(phi, standard_grid());
    for (std::size_t j = 0; j < f.nodes(); ++j)
        EXPECT_EQ(f.u(0, j), datum[j]);
    EXPECT_EQ(f.time(0), 0.0);
    EXPECT_EQ(f.time(f.layers() - 1), 1.0);
}

TEST(SolveGHeat, QuadraticsOnFineTimeGrid)
{
    const SpaceTimeGrid grid(1.0, -8.5, 8.5, 400, 4000);
    EXPECT_NEAR(gexp("x^2", 1.0, grid), 2.0, 1e-2);
    EXPECT_NEAR(gexp("-(x^2)", 1.0, grid), -1.0, 1e-2);
    EXPECT_NEAR(gexp("x", 1.0, grid), 0.0, 1e-3);
}

TEST(SolveGHeat, QuadraticFieldAwayFromBoundary)
{
    // u(t, x) = x^2 + sigma_max_sq t away from the truncation boundary
    const FieldSolution f = solve_g_heat(kBand21, ScalarFunction::parse("x^2"), standard_grid());
    const SpaceTimeGrid& g = standard_grid();
    const std::size_t last = f.layers() - 1;
    for (std::size_t j = g.origin() - 40; j <= g.origin() + 40; ++j)
        EXPECT_NEAR(f.u(last, j), g.x(j) * g.x(j) + 2.0, 1e-6);
    EXPECT_NEAR(f.z(last, g.origin() + 10), 2.0 * g.x(g.origin() + 10), 1e-6);
    EXPECT_NEAR(f.curvature(last, g.origin()), 2.0, 1e-6);
    EXPECT_EQ(f.curvature(last, 0), 0.0);
    EXPECT_GT(f.boundary_drift(), 0.0);
}

TEST(GExpectation, FourthMomentAndTreeCrossCheck)
{
    // x^4 stays convex, so the value is the Gaussian moment 3 sigma_max^4.
    const double pde = gexp("x^4", 1.0);
    EXPECT_NEAR(pde, 12.0, 0.1);
    const double tree = tree_expectation(kBand21, ScalarFunction::parse("x^4"), 1.0, 2000);
    EXPECT_NEAR(pde, tree, 5e-3);
}

TEST(GExpectation, CubicAgreesWithTree)
{
    const double pde = gexp("x^3", 1.0);
    const double tree = tree_expectation(kBand21, ScalarFunction::parse("x^3"), 1.0, 2000);
    EXPECT_NEAR(pde, tree, 5e-3);
    // E[X^3] > 0 = -E[-X^3]: the cubic has mean uncertainty
    EXPECT_GT(pde, 0.5);
    EXPECT_NEAR(gexp("-(x^3)", 1.0), pde, 1e-12);
}

TEST(GExpectation, InterpolatesBetweenLayers)
{
    const FieldSolution f = solve_g_heat(kBand21, ScalarFunction::parse("x^2"), standard_grid());
    const double t = 0.5 * (f.time(10) + f.time(11));
    EXPECT_DOUBLE_EQ(f.origin_value_at(t), 0.5 * (f.at_origin(10) + f.at_origin(11)));
    EXPECT_DOUBLE_EQ(f.origin_value_at(0.0), 0.0);
    EXPECT_THROW(f.origin_value_at(1.5), InvalidArgument);
    EXPECT_THROW(gexp("x", 2.0), InvalidArgument);
}

TEST(GExpectation, DegenerateBandMatchesGaussHermite)
{
    const VolatilityBand band(1.0, 1.0);
    // theta = 1/3 cancels the leading truncation term of the explicit scheme
    const SpaceTimeGrid grid = SpaceTimeGrid::standard(band, 1.0, 400, 1.0 / 3.0);
    for (const char* text : {"tanh(x)", "exp(tanh(x))", "sin(x)", "x^2", "x^4", "cos(x) * x"}) {
        const ScalarFunction phi = ScalarFunction::parse(text);
        const FieldSolution f = solve_g_heat(band, phi, grid);
        for (double t : {0.25, 1.0}) {
            const double exact = gconvex::testing::gaussian_expectation([&](double x) { return phi(x); }, t);
            EXPECT_NEAR(f.origin_value_at(t), exact, 1e-4) << text << " t=" << t;
        }
    }
}

TEST(GExpectation, DiscreteMaximumPrinciple)
{
    for (const std::string& text : gconvex::testing::bounded_catalog()) {
        const ScalarFunction phi = ScalarFunction::parse(text);
        const std::vector<double> datum = sample(phi, standard_grid());
        const double lo = *std::min_element(datum.begin(), datum.end());
        const double hi = *std::max_element(datum.begin(), datum.end());
        const FieldSolution f = solve_g_heat(kBand21, phi, standard_grid());
        for (std::size_t i = 0; i < f.layers(); ++i)
            for (double v : f.layer(i)) {
                ASSERT_GE(v, lo) << text;
                ASSERT_LE(v, hi) << text;
            }
    }
}

TEST(GExpectation, RefinementReducesQuarticError)
{
    // x^2 is reproduced to rounding for every dx, so refinement is measured
    // on the quartic whose exact value is 12.
    double previous = INFINITY;
    for (std::size_t nx : {100, 200, 400, 800}) {
        const SpaceTimeGrid grid = SpaceTimeGrid::cfl_matched(1.0, -8.5, 8.5, nx, kBand21);
        const double err = std::abs(gexp("x^4", 1.0, grid) - 12.0);
        EXPECT_LE(3.0 * err, previous) << "nx=" << nx;
        previous = err;
    }
}

TEST(SolveGHeat, RejectsCflViolationAndOverflow)
{
    const SpaceTimeGrid unstable(1.0, -8.5, 8.5, 400, 100);
    EXPECT_THROW(solve_g_heat(kBand21, ScalarFunction::parse("x"), unstable), CflViolation);
    try {
        solve_g_heat(kBand21, ScalarFunction::parse("exp(exp(x))"), standard_grid());
        FAIL() << "expected NumericalFailure";
    } catch (const NumericalFailure& e) {
        EXPECT_EQ(e.layer(), 0u);
    }
    try {
        solve_g_heat(kBand21, ScalarFunction::parse("exp(x^2 * 9.8)"), standard_grid());
        FAIL() << "expected NumericalFailure";
    } catch (const NumericalFailure& e) {
        EXPECT_GT(e.layer(), 0u);
    }
}

TEST(EvolveGHeat, MatchesFullSolveOnGridMultiples)
{
    const ScalarFunction phi = ScalarFunction::parse("tanh(x) + 0.1 * x^2");
    const SpaceTimeGrid& g = standard_grid();
    const FieldSolution f = solve_g_heat(kBand21, phi, g);
    const std::vector<double> datum = sample(phi, g);
    const std::vector<double> u = evolve_g_heat(kBand21, datum, g, g.horizon());
    for (std::size_t j = 0; j < g.nodes(); ++j)
        EXPECT_EQ(u[j], f.u(f.layers() - 1, j));
    EXPECT_EQ(evolve_g_heat(kBand21, datum, g, 0.0), datum);
}

// ---------------------------------------------------------------------------
// conditional G-expectation
// ---------------------------------------------------------------------------

namespace {

const SpaceTimeGrid& small_grid()
{
    static const SpaceTimeGrid g = SpaceTimeGrid::cfl_matched(1.0, -6.0, 6.0, 120, kBand21);
    return g;
}

} // namespace

TEST(ConditionalGExpectation, SquaredIncrementIsConstant)
{
    const CylinderPayoff payoff{{0.25, 0.75}, [](std::span<const double> x) { return x[1] * x[1]; }};
    const ConditionalTable table = conditional_g_expectation(kBand21, payoff, 1, small_grid());
    ASSERT_EQ(table.dimension(), 1u);
    const double expected = 2.0 * 0.5;
    for (std::size_t j = 0; j < table.axis().size(); ++j) {
        const std::size_t idx[1] = {j};
        EXPECT_NEAR(table.at_nodes(idx), expected, 1e-8);
    }
}

TEST(ConditionalGExpectation, MeasurablePayoffIsIdentity)
{
    const CylinderPayoff payoff{{0.5}, [](std::span<const double> x) { return 3.0 * x[0]; }};
    const ConditionalTable table = conditional_g_expectation(kBand21, payoff, 1, small_grid());
    for (double x : {-2.3, 0.0, 0.77, 4.0}) {
        const double arg[1] = {x};
        EXPECT_NEAR(table(arg), 3.0 * x, 1e-12);
    }
}

TEST(ConditionalGExpectation, ProductOfIncrementsHasZeroTable)
{
    const CylinderPayoff payoff{{0.5, 1.0}, [](std::span<const double> x) { return x[0] * x[1]; }};
    const ConditionalTable table = conditional_g_expectation(kBand21, payoff, 1, small_grid());
    for (double v : table.values())
        EXPECT_NEAR(v, 0.0, 1e-12);
    // independent check: for fixed x1 the tree gives E[x1 N] = 0
    for (double x1 : {-1.5, 0.4, 2.0}) {
        const ScalarFunction leaf = ScalarFunction::parse(std::to_string(x1) + " * x");
        EXPECT_NEAR(tree_expectation(kBand21, leaf, 0.5, 500), 0.0, 1e-12);
        const double arg[1] = {x1};
        EXPECT_NEAR(table(arg), 0.0, 1e-12);
    }
}

TEST(ConditionalGExpectation, UnconditionalValueOfNestedPayoff)
{
    // (B_t1 + (B_t2 - B_t1))^2 = B_t2^2 has G-expectation sigma_max_sq t2
    const CylinderPayoff payoff{{0.3, 0.8}, [](std::span<const double> x) {
                                    const double b = x[0] + x[1];
                                    return b * b;
                                }};
    const ConditionalTable table = conditional_g_expectation(kBand21, payoff, 0, small_grid());
    EXPECT_EQ(table.dimension(), 0u);
    EXPECT_NEAR(table({}), 1.6, 1e-6);
}

TEST(ConditionalGExpectation, NestedWorstCaseDiffersFromLinear)
{
    // -B_t1^2 + (B_t2 - B_t1)^2: the inner increment is driven at sigma_max,
    // the outer at sigma_min, which no single linear expectation achieves.
    const CylinderPayoff payoff{{0.5, 1.0}, [](std::span<const double> x) { return -x[0] * x[0] + x[1] * x[1]; }};
    const ConditionalTable t0 = conditional_g_expectation(kBand21, payoff, 0, small_grid());
    EXPECT_NEAR(t0({}), -1.0 * 0.5 + 2.0 * 0.5, 1e-6);
    const ConditionalTable t1 = conditional_g_expectation(kBand21, payoff, 1, small_grid());
    const double arg[1] = {1.0};
    EXPECT_NEAR(t1(arg), -1.0 + 1.0, 1e-6);
}

TEST(ConditionalGExpectation, ThreeIncrementsOnCoarseGrid)
{
    const SpaceTimeGrid g = SpaceTimeGrid::cfl_matched(1.0, -5.0, 5.0, 40, kBand21);
    const CylinderPayoff payoff{{0.2, 0.5, 1.0},
                                [](std::span<const double> x) { return x[0] + x[1] * x[1] + x[2]; }};
    const ConditionalTable t2 = conditional_g_expectation(kBand21, payoff, 2, g);
    EXPECT_EQ(t2.values().size(), 41u * 41u);
    const double arg[2] = {1.0, 0.5};
    EXPECT_NEAR(t2(arg), 1.25, 1e-9);
    const ConditionalTable t0 = conditional_g_expectation(kBand21, payoff, 0, g);
    EXPECT_NEAR(t0({}), 2.0 * 0.3, 1e-6);
}

TEST(ConditionalGExpectation, ThreadedBuildIsBitIdentical)
{
    const CylinderPayoff payoff{{0.5, 1.0}, [](std::span<const double> x) { return std::sin(x[0]) * x[1] * x[1]; }};
    const ConditionalTable a = conditional_g_expectation(kBand21, payoff, 1, small_grid());
    const ConditionalTable b = conditional_g_expectation(kBand21, payoff, 1, small_grid(), {1e-2, 3});
    EXPECT_EQ(a.values(), b.values());
}

TEST(ConditionalGExpectation, RejectsBadInputsAndCoarseGrids)
{
    const auto fn = [](std::span<const double> x) { return x[0]; };
    EXPECT_THROW(conditional_g_expectation(kBand21, {{0.5, 0.4}, fn}, 0, small_grid()), InvalidArgument);
    EXPECT_THROW(conditional_g_expectation(kBand21, {{0.5}, fn}, 2, small_grid()), InvalidArgument);
    EXPECT_THROW(conditional_g_expectation(kBand21, {{0.1, 0.2, 0.3, 0.4}, fn}, 0, small_grid()),
                 InvalidArgument);
    const CylinderPayoff wiggly{{0.5}, [](std::span<const double> x) { return std::sin(40.0 * x[0]); }};
    EXPECT_THROW(conditional_g_expectation(kBand21, wiggly, 1, small_grid()), NumericalFailure);
}

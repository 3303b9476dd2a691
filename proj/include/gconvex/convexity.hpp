#pragma once

// G-convexity of h under the nonlinear expectation of a G-BSDE.
//
// h is G-convex iff for all y, z, A
//
//   g(t, h, h' z) + 2 G(f(t, h, h' z) + 1/2 h'' z^2 + 1/2 h' A)
//       >= h' g(t, y, z) + 2 h' G(f(t, y, z) + 1/2 A)
//
// with h, h', h'' taken at y. The difference of the two sides is the
// "condition gap". Because G is piecewise linear, the gap is piecewise linear
// in A and the quantifier over A can be eliminated exactly.

#include "gconvex/core.hpp"
#include "gconvex/expr.hpp"
#include "gconvex/gbsde.hpp"

#include <cstddef>
#include <vector>

namespace gconvex {

/// Left side minus right side of the pointwise G-convexity inequality.
double condition_gap(const VolatilityBand& band, const GeneratorPair& gen,
                     const expr::ScalarFunction& h, double t, double y, double z, double a);

struct ReducedGap {
    enum class Attained { finite, minus_infinity, plus_infinity };

    double inf_gap;   // -inf when unbounded below
    double argmin_a;  // finite minimiser, or +-inf matching `where`
    Attained where;
    double slope_plus;   // lim d gap / dA as A -> +inf
    double slope_minus;  // lim d gap / dA as A -> -inf
};

/// inf over A of condition_gap at fixed (t, y, z). The asymptotic slopes
/// follow from the band and h'(y); finite minima sit at one of the two kinks
///   A1 = -(2 f(t, h, h' z) + h'' z^2) / h'   (h' != 0),   A2 = -2 f(t, y, z).
ReducedGap reduce_over_a(const VolatilityBand& band, const GeneratorPair& gen,
                         const expr::ScalarFunction& h, double t, double y, double z);

struct ScanRange {
    double lo;
    double hi;
};

struct ConvexityWitness {
    double y;
    double z;
    double a;
    double gap;
};

struct ScanCell {
    double y;
    double z;
    double inf_gap;
    double argmin_a;
};

struct ConvexityReport {
    bool holds = true;
    std::vector<ConvexityWitness> witnesses;  // sorted by (y, z)
    std::vector<ScanCell> cells;              // row-major, y outer
    ScanRange y_range{};
    ScanRange z_range{};
    std::size_t resolution = 0;
    double t = 0.0;
    double min_gap = 0.0;
};

/// Witnesses are cells whose reduced gap is below -tolerance.
inline constexpr double kWitnessTolerance = 1e-9;

/// Scans a resolution x resolution grid of (y, z) (endpoints included).
/// Requires finite ranges and resolution >= 16.
ConvexityReport check_g_convexity(const VolatilityBand& band, const GeneratorPair& gen,
                                  const expr::ScalarFunction& h, ScanRange y_range,
                                  ScanRange z_range, std::size_t resolution, double t = 0.0,
                                  unsigned threads = 1);

// ---------------------------------------------------------------------------
// representation limit
// ---------------------------------------------------------------------------

/// g(t, Phi(0), Phi'(0)) + 2 G(f(t, Phi(0), Phi'(0)) + 1/2 Phi''(0)).
double representation_formula(const VolatilityBand& band, const GeneratorPair& gen,
                              const expr::ScalarFunction& terminal, double t);

/// (E_{t,t+eps}[Phi(B_{t+eps} - B_t)] - Phi(0)) / eps.
double representation_quotient(const VolatilityBand& band, const GeneratorPair& gen,
                               const expr::ScalarFunction& terminal, double t, double eps,
                               const SpaceTimeGrid& grid, const BsdeOptions& options = {});

struct RepresentationRow {
    double eps;
    double quotient;
    double error;
};

struct RepresentationReport {
    double formula = 0.0;
    std::vector<RepresentationRow> rows;
    double order = 0.0;            // least-squares slope of log error vs log eps (NaN if all errors vanish)
    bool decreasing = false;
    double final_relative_error = 0.0;  // error / (1 + |formula|) at the smallest eps
    bool passed = false;

    static constexpr double kRelativeTolerance = 0.05;
};

/// Requires a strictly decreasing eps list with at least 3 entries.
RepresentationReport representation_limit_check(const VolatilityBand& band, const GeneratorPair& gen,
                                                const expr::ScalarFunction& terminal, double t,
                                                const std::vector<double>& eps_list,
                                                const SpaceTimeGrid& grid,
                                                const BsdeOptions& options = {});

// ---------------------------------------------------------------------------
// Jensen experiments
// ---------------------------------------------------------------------------

struct JensenResult {
    double lhs;  // E_{s,t}[h(phi(B_t - B_s))]
    double rhs;  // h(E_{s,t}[phi(B_t - B_s)])
    double gap;
};

JensenResult jensen_experiment(const VolatilityBand& band, const GeneratorPair& gen,
                               const expr::ScalarFunction& h, const expr::ScalarFunction& phi,
                               double s, double t, const SpaceTimeGrid& grid,
                               const BsdeOptions& options = {});

struct NecessityResult {
    ConvexityWitness witness;
    expr::ScalarFunction phi;  // localized quadratic with the witness jet at 0
    expr::Jet composite_jet;   // jet of h(phi) at 0 actually used
    JensenResult jensen;
    double predicted_gap;      // witness.gap * eps
};

/// Builds phi(x) = (y + z x + a x^2 / 2) bump(x) from a witness and runs the
/// Jensen experiment on [t, t + eps].
NecessityResult necessity_experiment(const VolatilityBand& band, const GeneratorPair& gen,
                                     const expr::ScalarFunction& h, const ConvexityWitness& witness,
                                     double t, double eps, const SpaceTimeGrid& grid,
                                     const BsdeOptions& options = {});

} // namespace gconvex

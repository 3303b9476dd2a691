#pragma once

// Explicit monotone finite-difference solver for the G-heat equation
//
//     d_t u - G(d_xx u) = 0,    u(0, x) = phi(x),
//
// whose solution is u(t, x) = E[phi(x + sqrt(t) X)] for G-normal X, and the
// nested solves that realise conditional G-expectations of cylinder
// functionals.

#include "gconvex/core.hpp"
#include "gconvex/expr.hpp"

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace gconvex {

/// Space-time field on a SpaceTimeGrid's spatial nodes.
///
/// Layer 0 holds the datum. Layer i sits at evolution time times()[i]: for the
/// G-heat equation that is forward time t, for BSDE solutions it is the time
/// remaining to maturity.
class FieldSolution {
public:
    FieldSolution(SpaceTimeGrid grid, std::vector<double> times, std::vector<double> values);

    const SpaceTimeGrid& grid() const noexcept { return grid_; }
    std::size_t layers() const noexcept { return times_.size(); }
    std::size_t nodes() const noexcept { return grid_.nodes(); }
    double time(std::size_t i) const { return times_.at(i); }
    const std::vector<double>& times() const noexcept { return times_; }

    std::span<const double> layer(std::size_t i) const;
    double u(std::size_t i, std::size_t j) const { return layer(i)[j]; }
    /// d_x u: central inside, one-sided at the outer nodes.
    double z(std::size_t i, std::size_t j) const;
    /// d_xx u: three-point inside, zero at the outer nodes.
    double curvature(std::size_t i, std::size_t j) const;
    double at_origin(std::size_t i) const { return u(i, grid_.origin()); }

    /// Value at the origin at evolution time t, linear between layers.
    double origin_value_at(double t) const;

    /// Accumulated |dt * G(curvature)| that the zero-curvature boundary
    /// condition dropped at either end; a proxy for truncation influence.
    double boundary_drift() const noexcept { return boundary_drift_; }
    void set_boundary_drift(double d) noexcept { boundary_drift_ = d; }

private:
    SpaceTimeGrid grid_;
    std::vector<double> times_;
    std::vector<double> values_;
    double boundary_drift_ = 0.0;
};

/// Samples fn on the grid nodes.
std::vector<double> sample(const expr::ScalarFunction& fn, const SpaceTimeGrid& grid);

/// Solves the G-heat equation on [0, grid.horizon()] with grid.nt() steps.
/// Throws CflViolation, NumericalFailure, expr::DomainError.
FieldSolution solve_g_heat(const VolatilityBand& band, const expr::ScalarFunction& phi,
                           const SpaceTimeGrid& grid);

/// E[phi(B_t)] = u(t, 0). Requires 0 <= t <= grid.horizon().
double g_expectation(const VolatilityBand& band, const expr::ScalarFunction& phi, double t,
                     const SpaceTimeGrid& grid);

/// Evolves a sampled datum over `duration` with steps of at most grid.dt()
/// and returns the final layer.
std::vector<double> evolve_g_heat(const VolatilityBand& band, std::span<const double> datum,
                                  const SpaceTimeGrid& grid, double duration);

// ---------------------------------------------------------------------------
// conditional G-expectation of cylinder functionals
// ---------------------------------------------------------------------------

/// phi(B_{t1} - B_{t0}, ..., B_{tm} - B_{t(m-1)}) with t0 = 0.
struct CylinderPayoff {
    std::vector<double> times;
    std::function<double(std::span<const double>)> fn;
};

/// psi tabulated on the grid nodes along each conditioned increment.
class ConditionalTable {
public:
    ConditionalTable(std::size_t dimension, std::vector<double> axis, std::vector<double> values);

    std::size_t dimension() const noexcept { return dim_; }
    const std::vector<double>& axis() const noexcept { return axis_; }
    const std::vector<double>& values() const noexcept { return values_; }

    /// Value at node multi-index (row-major, first increment slowest).
    double at_nodes(std::span<const std::size_t> index) const;
    /// Multilinear interpolation; arguments are clamped to the axis.
    double operator()(std::span<const double> x) const;

    /// Max |v[j+1] - 2 v[j] + v[j-1]| / 8 along any axis: the midpoint error of
    /// linear interpolation for locally quadratic data.
    double interpolation_residual() const;

private:
    std::size_t dim_;
    std::vector<double> axis_;
    std::vector<double> values_;
};

struct ConditionalOptions {
    /// Reject tables whose residual exceeds threshold * (1 + max|psi|).
    double residual_threshold = 1e-2;
    unsigned threads = 1;
};

/// E_{t_i}[payoff] as a function of the first i increments, built by one
/// G-heat solve per remaining increment, innermost first. Requires m <= 3.
/// Throws InvalidArgument (bad times, i > m, m > 3) or
/// NumericalFailure when the table is too coarse for interpolation.
ConditionalTable conditional_g_expectation(const VolatilityBand& band, const CylinderPayoff& payoff,
                                           std::size_t i, const SpaceTimeGrid& grid,
                                           const ConditionalOptions& options = {});

} // namespace gconvex

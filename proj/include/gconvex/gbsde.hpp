#pragma once

// Backward lattice solver for Markovian G-BSDEs
//
//     Y_s = Phi(B_t - B_s) + int_s^t g(r, Y, Z) dr + int_s^t f(r, Y, Z) d<B>_r
//           - int_s^t Z dB - (K_t - K_s),
//
// through the fully nonlinear PDE whose generator is
//
//     g(t, u, u_x) + 2 G(f(t, u, u_x) + 1/2 u_xx).
//
// Y_s at x = 0 is the nonlinear expectation E_{s,t}[Phi(B_t - B_s)], Z = u_x
// and eta = f + 1/2 u_xx drives the decreasing G-martingale
// K = int eta d<B> - 2 int G(eta) ds.

#include "gconvex/core.hpp"
#include "gconvex/expr.hpp"
#include "gconvex/gheat.hpp"
#include "gconvex/oracle.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace gconvex {

/// Drivers g and f with their declared Lipschitz constant.
struct GeneratorPair {
    expr::TriFunction g = expr::TriFunction::zero();
    expr::TriFunction f = expr::TriFunction::zero();
    double lipschitz = 0.0;
    /// Declares g(t, y, 0) = f(t, y, 0) = 0.
    bool h6 = false;

    static GeneratorPair zero() { return GeneratorPair{expr::TriFunction::zero(), expr::TriFunction::zero(), 0.0, true}; }

    friend bool operator==(const GeneratorPair&, const GeneratorPair&) = default;
};

struct GeneratorCheck {
    double max_quotient = 0.0;    // sampled (|dg| + |df|) / (|dy| + |dz|)
    double max_h6_residual = 0.0; // sampled |g(t, y, 0)| + |f(t, y, 0)|
    bool lipschitz_ok = true;
    bool h6_ok = true;
};

/// Spot-checks the Lipschitz bound on 1000 random pairs from
/// [0, horizon] x [-box, box]^2 and, if declared, the vanishing at z = 0.
GeneratorCheck check_generator(const GeneratorPair& gen, double horizon, double box = 10.0,
                               std::uint64_t seed = 0x5eedULL);

/// Throws InvalidArgument when check_generator reports a violation.
void validate_generator(const GeneratorPair& gen, double horizon, double box = 10.0);

struct BsdeOptions {
    /// Re-evaluate the drivers once at the predicted layer.
    bool picard_correction = false;
    /// C in |Y| <= C (|Phi|_inf + T sup|g(.,0,0)| + T sigma_max_sq sup|f(.,0,0)|).
    double growth_bound = 1e4;
};

/// Solved field of a Markovian G-BSDE on [t_start, t_end].
///
/// Layer i sits at real time t_end - field().time(i); the last layer is
/// t_start.
class BsdeSolution {
public:
    BsdeSolution(FieldSolution field, std::vector<double> eta, double t_start, double t_end);

    const FieldSolution& field() const noexcept { return field_; }
    double t_start() const noexcept { return t_start_; }
    double t_end() const noexcept { return t_end_; }
    std::size_t layers() const noexcept { return field_.layers(); }
    std::size_t steps() const noexcept { return field_.layers() - 1; }
    double dt() const noexcept { return (t_end_ - t_start_) / static_cast<double>(steps()); }
    double real_time(std::size_t i) const { return t_end_ - field_.time(i); }

    double y(std::size_t i, std::size_t j) const { return field_.u(i, j); }
    double z(std::size_t i, std::size_t j) const { return field_.z(i, j); }
    double eta(std::size_t i, std::size_t j) const { return eta_.at(i * field_.nodes() + j); }

    /// Y at t_start, x = 0.
    double initial_value() const { return field_.at_origin(layers() - 1); }

    /// Layer holding forward step k (real time t_start + k dt).
    std::size_t layer_of_step(std::size_t k) const { return steps() - k; }

private:
    FieldSolution field_;
    std::vector<double> eta_;
    double t_start_;
    double t_end_;
};

/// Solves on [0, grid.horizon()] with grid.nt() steps.
BsdeSolution solve_gbsde(const VolatilityBand& band, const GeneratorPair& gen,
                         const expr::ScalarFunction& terminal, const SpaceTimeGrid& grid,
                         const BsdeOptions& options = {});

/// Solves on [s, t] with the smallest step count whose step does not exceed
/// grid.dt(). The terminal datum is sampled on the grid nodes.
BsdeSolution solve_gbsde(const VolatilityBand& band, const GeneratorPair& gen,
                         const expr::ScalarFunction& terminal, const SpaceTimeGrid& grid, double s,
                         double t, const BsdeOptions& options = {});

/// Same, from a tabulated terminal datum.
BsdeSolution solve_gbsde(const VolatilityBand& band, const GeneratorPair& gen,
                         std::span<const double> terminal, const SpaceTimeGrid& grid, double s,
                         double t, const BsdeOptions& options = {});

/// E_{s,t}[terminal(B_t - B_s)].
double nonlinear_expectation(const VolatilityBand& band, const GeneratorPair& gen,
                             const expr::ScalarFunction& terminal, double s, double t,
                             const SpaceTimeGrid& grid, const BsdeOptions& options = {});

/// Increment of K over dt under realised variance density a:
/// eta a dt - 2 G(eta) dt, which is never positive. Throws InvalidArgument if
/// a leaves the band.
double k_increment(const VolatilityBand& band, double eta, double a, double dt);

/// Cumulative K along a path on the solution's time grid, starting at 0. The
/// increment over [s_k, s_k+1) uses eta at time s_k, nearest node to B_{s_k}.
std::vector<double> k_along_path(const VolatilityBand& band, const BsdeSolution& sol,
                                 const LatticePath& path);

/// The control attaining sup_a a eta along the solution. Holds a reference to
/// `sol`, which must outlive the returned policy.
MarkovVolatility worst_case_policy(const BsdeSolution& sol);

/// sup over volatility controls of E[K_t] on the worst-case lattice with the
/// solution's time step.
double worst_case_k_expectation(const VolatilityBand& band, const BsdeSolution& sol);

} // namespace gconvex

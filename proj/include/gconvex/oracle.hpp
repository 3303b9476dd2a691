#pragma once

// Verification machinery that does not share code paths with the PDE
// solvers: a recombining worst-case volatility lattice and a simulator of
// admissible G-Brownian scenarios with exact (+-1 innovation) quadratic
// variation.

#include "gconvex/core.hpp"
#include "gconvex/expr.hpp"

#include <cstdint>
#include <functional>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

namespace gconvex {

/// Name of the path generator; echoed in reports so runs can be replayed.
inline constexpr std::string_view kRngAlgorithm = "mt19937_64";

/// A simulated path of B together with its volatility control and the
/// accumulated quadratic variation sum a_i dt.
struct LatticePath {
    std::vector<double> times;
    std::vector<double> b;
    std::vector<double> a;  // control on [times[i], times[i+1]); size = steps
    std::vector<double> qv;

    std::size_t steps() const noexcept { return a.size(); }
    /// Throws InvalidArgument if sizes disagree, a leaves the band or qv
    /// decreases.
    void validate(const VolatilityBand& band) const;
};

// Volatility policies --------------------------------------------------------

struct ConstLowVolatility {};
struct ConstHighVolatility {};
/// a_i uniform on the band, drawn from the path's generator.
struct RandomVolatility {};
/// a_i = sigma_max_sq where eta(step, B) >= 0, sigma_min_sq otherwise; the
/// control that attains 2 G(eta) = sup_a a * eta.
struct MarkovVolatility {
    std::function<double(std::size_t step, double x)> eta;
};

using VolatilityPolicy
    = std::variant<ConstLowVolatility, ConstHighVolatility, RandomVolatility, MarkovVolatility>;

/// Simulates dB_i = sqrt(a_i dt) xi_i with xi_i = +-1 equiprobable on the
/// uniform time grid t_start + i (t_end - t_start) / steps.
LatticePath simulate_path(const VolatilityBand& band, const VolatilityPolicy& policy,
                          double t_start, double t_end, std::size_t steps, std::uint64_t seed);

/// Same, on [0, grid.horizon()] with grid.nt() steps.
LatticePath simulate_path(const VolatilityBand& band, const VolatilityPolicy& policy,
                          const SpaceTimeGrid& grid, std::uint64_t seed);

/// Partial sums of squared increments, starting at 0.
std::vector<double> quadratic_variation(std::span<const double> b);
std::vector<double> quadratic_variation(const LatticePath& path);

/// 1/4 (<b1 + b2> - <b1 - b2>).
std::vector<double> mutual_variation(std::span<const double> b1, std::span<const double> b2);
/// Throws GridMismatch unless both paths share their time grid.
std::vector<double> mutual_variation(const LatticePath& p1, const LatticePath& p2);

// Worst-case lattice -----------------------------------------------------------

/// Running reward r(step, x, a) collected on [t_step, t_step+1) under control a.
using LatticeReward = std::function<double(std::size_t step, double x, double a)>;

/// sup over volatility controls of E[terminal(B_t) + sum of rewards] on a
/// recombining lattice with spacing sigma_max sqrt(dt). Each step moves +-dx
/// with probability a / (2 sigma_max_sq) each and stays otherwise, so the
/// increment has variance a dt; the sup is taken over the band endpoints.
double tree_control_value(const VolatilityBand& band, const std::function<double(double)>& terminal,
                          const LatticeReward& reward, double t, std::size_t steps);

/// E[phi(B_t)] via the worst-case lattice.
double tree_expectation(const VolatilityBand& band, const expr::ScalarFunction& phi, double t,
                        std::size_t steps);

} // namespace gconvex

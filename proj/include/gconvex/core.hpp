#pragma once

// Foundational types: the volatility band that defines G, the space-time
// grid shared by the lattice solvers, and the error hierarchy.

#include <cstddef>
#include <functional>
#include <stdexcept>
#include <string>

namespace gconvex {

// ---------------------------------------------------------------------------
// errors
// ---------------------------------------------------------------------------

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid band, grid or parameter combination.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// Time step violates the stability bound of the explicit scheme.
class CflViolation : public Error {
public:
    using Error::Error;
};

/// A solver produced NaN/Inf or left its growth envelope.
class NumericalFailure : public Error {
public:
    NumericalFailure(const std::string& what, std::size_t layer)
        : Error(what + " (layer " + std::to_string(layer) + ")"), layer_(layer) {}
    std::size_t layer() const noexcept { return layer_; }

private:
    std::size_t layer_;
};

/// Two objects that must share a time or space grid do not.
class GridMismatch : public Error {
public:
    using Error::Error;
};

// ---------------------------------------------------------------------------
// VolatilityBand
// ---------------------------------------------------------------------------

/// The uncertainty interval [sigma_min_sq, sigma_max_sq] of the quadratic
/// variation density. In one dimension it is the set Gamma and fixes
/// G(a) = 1/2 sup_{gamma in Gamma} gamma * a.
class VolatilityBand {
public:
    /// Throws InvalidArgument unless 0 < lo <= hi (both finite).
    VolatilityBand(double sigma_min_sq, double sigma_max_sq);

    double sigma_min_sq() const noexcept { return lo_; }
    double sigma_max_sq() const noexcept { return hi_; }
    bool degenerate() const noexcept { return lo_ == hi_; }
    bool contains(double a) const noexcept { return a >= lo_ && a <= hi_; }

    friend bool operator==(const VolatilityBand&, const VolatilityBand&) = default;

private:
    double lo_;
    double hi_;
};

/// G(a) = 1/2 (sigma_max_sq a^+ - sigma_min_sq a^-).
inline double g_eval(const VolatilityBand& band, double a) noexcept
{
    return 0.5 * (band.sigma_max_sq() * (a > 0.0 ? a : 0.0)
                  - band.sigma_min_sq() * (a < 0.0 ? -a : 0.0));
}

// ---------------------------------------------------------------------------
// SpaceTimeGrid
// ---------------------------------------------------------------------------

/// Largest admissible CFL ratio dt * sigma_max_sq / dx^2.
inline constexpr double kMaxCflTheta = 0.5;

/// Uniform discretisation of [0, horizon] x [x_min, x_max].
///
/// `nx` counts space intervals (there are nx + 1 nodes) and `nt` counts time
/// steps. The origin must coincide with a node so that values at x = 0 are
/// read without interpolation.
class SpaceTimeGrid {
public:
    SpaceTimeGrid(double horizon, double x_min, double x_max, std::size_t nx, std::size_t nt);

    /// Smallest nt that satisfies dt * sigma_max_sq / dx^2 <= theta.
    static SpaceTimeGrid cfl_matched(double horizon, double x_min, double x_max,
                                     std::size_t nx, const VolatilityBand& band,
                                     double theta = kMaxCflTheta);

    /// Symmetric domain of half-width 6 sigma_max sqrt(horizon), rounded up to
    /// a multiple of 1/2, with 400 intervals and CFL-matched steps.
    static SpaceTimeGrid standard(const VolatilityBand& band, double horizon,
                                  std::size_t nx = 400, double theta = kMaxCflTheta);

    double horizon() const noexcept { return horizon_; }
    double x_min() const noexcept { return x_min_; }
    double x_max() const noexcept { return x_max_; }
    std::size_t nx() const noexcept { return nx_; }
    std::size_t nt() const noexcept { return nt_; }

    std::size_t nodes() const noexcept { return nx_ + 1; }
    double dx() const noexcept { return (x_max_ - x_min_) / static_cast<double>(nx_); }
    double dt() const noexcept { return horizon_ / static_cast<double>(nt_); }
    /// Node coordinate, measured from the origin node so that x(origin()) == 0.
    double x(std::size_t j) const noexcept
    {
        return (static_cast<double>(j) - static_cast<double>(origin_)) * dx();
    }
    std::size_t origin() const noexcept { return origin_; }

    /// Index of the node closest to x, clamped to the domain.
    std::size_t nearest_node(double x) const noexcept;

    double cfl_ratio(const VolatilityBand& band) const noexcept
    {
        return dt() * band.sigma_max_sq() / (dx() * dx());
    }

    /// Throws CflViolation if cfl_ratio(band) exceeds kMaxCflTheta.
    void check_cfl(const VolatilityBand& band) const;

    friend bool operator==(const SpaceTimeGrid& a, const SpaceTimeGrid& b) noexcept
    {
        return a.horizon_ == b.horizon_ && a.x_min_ == b.x_min_ && a.x_max_ == b.x_max_
               && a.nx_ == b.nx_ && a.nt_ == b.nt_;
    }

private:
    double horizon_;
    double x_min_;
    double x_max_;
    std::size_t nx_;
    std::size_t nt_;
    std::size_t origin_;
};

/// Number of steps of size at most `max_dt` that exactly cover `duration`.
std::size_t steps_covering(double duration, double max_dt);

/// Runs body(i) for i in [0, n). With threads > 1 the range is split into
/// contiguous blocks; callers must write only to slots owned by i.
void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& body);

} // namespace gconvex

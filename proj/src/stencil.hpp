#pragma once

// Finite-difference stencils shared by the G-heat and G-BSDE lattices. Both
// solvers must use the same arithmetic so that the zero-driver BSDE reproduces
// the G-heat field bit for bit.

#include <cstddef>
#include <span>

namespace gconvex::detail {

/// Three-point second difference; zero at the two outer nodes.
inline double second_difference(std::span<const double> u, std::size_t j, double inv_dx2) noexcept
{
    if (j == 0 || j + 1 == u.size())
        return 0.0;
    return (u[j + 1] - 2.0 * u[j] + u[j - 1]) * inv_dx2;
}

/// Central first difference, one-sided at the outer nodes.
inline double first_difference(std::span<const double> u, std::size_t j, double dx) noexcept
{
    const std::size_t last = u.size() - 1;
    if (j == 0)
        return (u[1] - u[0]) / dx;
    if (j == last)
        return (u[last] - u[last - 1]) / dx;
    return (u[j + 1] - u[j - 1]) / (2.0 * dx);
}

/// Second difference taken one node inward at a boundary; it is what the
/// zero-curvature boundary condition discards.
inline double boundary_curvature(std::span<const double> u, bool left, double inv_dx2) noexcept
{
    const std::size_t n = u.size();
    if (left)
        return (u[0] - 2.0 * u[1] + u[2]) * inv_dx2;
    return (u[n - 1] - 2.0 * u[n - 2] + u[n - 3]) * inv_dx2;
}

} // namespace gconvex::detail

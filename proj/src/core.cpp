#include "gconvex/core.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <thread>
#include <vector>

namespace gconvex {

VolatilityBand::VolatilityBand(double sigma_min_sq, double sigma_max_sq)
    : lo_(sigma_min_sq), hi_(sigma_max_sq)
{
    if (!std::isfinite(lo_) || !std::isfinite(hi_))
        throw InvalidArgument("volatility band must be finite");
    if (!(lo_ > 0.0))
        throw InvalidArgument("sigma_min_sq must be strictly positive (non-degenerate G)");
    if (lo_ > hi_)
        throw InvalidArgument("sigma_min_sq must not exceed sigma_max_sq");
}

SpaceTimeGrid::SpaceTimeGrid(double horizon, double x_min, double x_max, std::size_t nx,
                             std::size_t nt)
    : horizon_(horizon), x_min_(x_min), x_max_(x_max), nx_(nx), nt_(nt), origin_(0)
{
    if (!(horizon_ > 0.0) || !std::isfinite(horizon_))
        throw InvalidArgument("grid horizon must be positive");
    if (!(x_min_ < 0.0 && 0.0 < x_max_) || !std::isfinite(x_min_) || !std::isfinite(x_max_))
        throw InvalidArgument("grid must satisfy x_min < 0 < x_max");
    if (nx_ < 3)
        throw InvalidArgument("grid needs at least 3 space intervals");
    if (nt_ < 1)
        throw InvalidArgument("grid needs at least one time step");

    const double k = -x_min_ / dx();
    const double kr = std::round(k);
    if (std::abs(k - kr) > 1e-9 * std::max(1.0, k))
        throw InvalidArgument("x = 0 is not a grid node; choose x_min/x_max/nx accordingly");
    origin_ = static_cast<std::size_t>(kr);
}

SpaceTimeGrid SpaceTimeGrid::cfl_matched(double horizon, double x_min, double x_max,
                                         std::size_t nx, const VolatilityBand& band, double theta)
{
    if (!(theta > 0.0) || theta > kMaxCflTheta)
        throw InvalidArgument("CFL theta must lie in (0, 1/2]");
    if (nx < 3)
        throw InvalidArgument("grid needs at least 3 space intervals");
    const double dx = (x_max - x_min) / static_cast<double>(nx);
    const double max_dt = theta * dx * dx / band.sigma_max_sq();
    return SpaceTimeGrid(horizon, x_min, x_max, nx, steps_covering(horizon, max_dt));
}

SpaceTimeGrid SpaceTimeGrid::standard(const VolatilityBand& band, double horizon,
                                      std::size_t nx, double theta)
{
    if (nx % 2 != 0)
        throw InvalidArgument("symmetric grids need an even number of intervals");
    const double width = std::ceil(12.0 * std::sqrt(band.sigma_max_sq() * horizon)) / 2.0;
    return cfl_matched(horizon, -width, width, nx, band, theta);
}

std::size_t SpaceTimeGrid::nearest_node(double x) const noexcept
{
    const double k = std::round(x / dx()) + static_cast<double>(origin_);
    if (!(k > 0.0))
        return 0;
    if (k >= static_cast<double>(nx_))
        return nx_;
    return static_cast<std::size_t>(k);
}

void SpaceTimeGrid::check_cfl(const VolatilityBand& band) const
{
    const double ratio = cfl_ratio(band);
    if (ratio > kMaxCflTheta * (1.0 + 1e-12)) {
        throw CflViolation("CFL ratio dt*sigma_max_sq/dx^2 = " + std::to_string(ratio)
                           + " exceeds 1/2");
    }
}

std::size_t steps_covering(double duration, double max_dt)
{
    if (!(duration >= 0.0) || !(max_dt > 0.0))
        throw InvalidArgument("steps_covering needs duration >= 0 and max_dt > 0");
    // The relative slack keeps an exact multiple from rounding up by one step.
    const double n = std::ceil(duration / max_dt * (1.0 - 1e-12));
    return std::max<std::size_t>(1, static_cast<std::size_t>(n));
}

void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& body)
{
    if (threads <= 1 || n < 2) {
        for (std::size_t i = 0; i < n; ++i)
            body(i);
        return;
    }
    const std::size_t workers = std::min<std::size_t>(threads, n);
    const std::size_t block = (n + workers - 1) / workers;
    std::vector<std::exception_ptr> failures(workers);
    {
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) {
            const std::size_t begin = w * block;
            const std::size_t end = std::min(n, begin + block);
            if (begin >= end)
                break;
            pool.emplace_back([begin, end, &body, &failure = failures[w]] {
                try {
                    for (std::size_t i = begin; i < end; ++i)
                        body(i);
                } catch (...) {
                    failure = std::current_exception();
                }
            });
        }
    }
    for (const auto& f : failures)
        if (f)
            std::rethrow_exception(f);
}

} // namespace gconvex

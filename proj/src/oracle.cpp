#include "gconvex/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace gconvex {

void LatticePath::validate(const VolatilityBand& band) const
{
    const std::size_t n = a.size();
    if (times.size() != n + 1 || b.size() != n + 1 || qv.size() != n + 1)
        throw InvalidArgument("lattice path series have inconsistent lengths");
    if (qv.front() != 0.0)
        throw InvalidArgument("quadratic variation must start at 0");
    for (std::size_t i = 0; i < n; ++i) {
        if (!band.contains(a[i]))
            throw InvalidArgument("volatility control leaves the band");
        if (qv[i + 1] < qv[i])
            throw InvalidArgument("quadratic variation decreases");
    }
}

namespace {

// Uniform double in [0, 1) from the top 53 bits; independent of the
// standard library's distribution implementations.
double unit_interval(std::uint64_t bits) noexcept
{
    return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

} // namespace

LatticePath simulate_path(const VolatilityBand& band, const VolatilityPolicy& policy,
                          double t_start, double t_end, std::size_t steps, std::uint64_t seed)
{
    if (steps == 0 || !(t_end > t_start))
        throw InvalidArgument("path needs t_end > t_start and at least one step");

    std::mt19937_64 rng(seed);
    const double dt = (t_end - t_start) / static_cast<double>(steps);
    const double lo = band.sigma_min_sq();
    const double hi = band.sigma_max_sq();

    LatticePath path;
    path.times.resize(steps + 1);
    path.b.resize(steps + 1);
    path.qv.resize(steps + 1);
    path.a.resize(steps);
    path.times[0] = t_start;
    path.b[0] = 0.0;
    path.qv[0] = 0.0;

    for (std::size_t i = 0; i < steps; ++i) {
        const double x = path.b[i];
        const double a = std::visit(
            [&](const auto& p) -> double {
                using P = std::decay_t<decltype(p)>;
                if constexpr (std::is_same_v<P, ConstLowVolatility>)
                    return lo;
                else if constexpr (std::is_same_v<P, ConstHighVolatility>)
                    return hi;
                else if constexpr (std::is_same_v<P, RandomVolatility>)
                    return std::min(hi, lo + (hi - lo) * unit_interval(rng()));
                else
                    return p.eta(i, x) >= 0.0 ? hi : lo;
            },
            policy);
        const double sign = (rng() >> 63) != 0 ? 1.0 : -1.0;
        path.a[i] = a;
        path.b[i + 1] = x + sign * std::sqrt(a * dt);
        path.qv[i + 1] = path.qv[i] + a * dt;
        path.times[i + 1] = t_start + static_cast<double>(i + 1) * dt;
    }
    path.times.back() = t_end;
    return path;
}

LatticePath simulate_path(const VolatilityBand& band, const VolatilityPolicy& policy,
                          const SpaceTimeGrid& grid, std::uint64_t seed)
{
    return simulate_path(band, policy, 0.0, grid.horizon(), grid.nt(), seed);
}

std::vector<double> quadratic_variation(std::span<const double> b)
{
    std::vector<double> qv(b.size(), 0.0);
    for (std::size_t i = 1; i < b.size(); ++i) {
        const double d = b[i] - b[i - 1];
        qv[i] = qv[i - 1] + d * d;
    }
    return qv;
}

std::vector<double> quadratic_variation(const LatticePath& path)
{
    return quadratic_variation(path.b);
}

std::vector<double> mutual_variation(std::span<const double> b1, std::span<const double> b2)
{
    if (b1.size() != b2.size())
        throw GridMismatch("mutual variation needs paths of equal length");
    std::vector<double> sum(b1.size());
    std::vector<double> diff(b1.size());
    for (std::size_t i = 0; i < b1.size(); ++i) {
        sum[i] = b1[i] + b2[i];
        diff[i] = b1[i] - b2[i];
    }
    const auto qs = quadratic_variation(sum);
    const auto qd = quadratic_variation(diff);
    std::vector<double> out(b1.size());
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = 0.25 * (qs[i] - qd[i]);
    return out;
}

std::vector<double> mutual_variation(const LatticePath& p1, const LatticePath& p2)
{
    if (p1.times != p2.times)
        throw GridMismatch("mutual variation needs identical time grids");
    return mutual_variation(p1.b, p2.b);
}

double tree_control_value(const VolatilityBand& band, const std::function<double(double)>& terminal,
                          const LatticeReward& reward, double t, std::size_t steps)
{
    if (steps == 0)
        throw InvalidArgument("tree needs at least one step");
    if (t < 0.0)
        throw InvalidArgument("tree horizon must be non-negative");
    if (t == 0.0)
        return terminal(0.0);

    const double dt = t / static_cast<double>(steps);
    const double hi = band.sigma_max_sq();
    const double lo = band.sigma_min_sq();
    const double dx = std::sqrt(hi * dt);
    const double p_hi = 0.5;
    const double p_lo = lo / (2.0 * hi);

    // value[k + offset] holds V at x = k dx; level i spans k in [-i, i].
    const std::size_t offset = steps;
    std::vector<double> value(2 * steps + 1);
    std::vector<double> next(2 * steps + 1);
    for (std::size_t k = 0; k < value.size(); ++k)
        value[k] = terminal((static_cast<double>(k) - static_cast<double>(offset)) * dx);

    for (std::size_t level = steps; level-- > 0;) {
        const std::size_t first = offset - level;
        const std::size_t last = offset + level;
        for (std::size_t k = first; k <= last; ++k) {
            const double x = (static_cast<double>(k) - static_cast<double>(offset)) * dx;
            const double curv = value[k + 1] - 2.0 * value[k] + value[k - 1];
            double v_hi = value[k] + p_hi * curv;
            double v_lo = value[k] + p_lo * curv;
            if (reward) {
                v_hi += reward(level, x, hi);
                v_lo += reward(level, x, lo);
            }
            next[k] = std::max(v_hi, v_lo);
        }
        std::swap(value, next);
    }
    return value[offset];
}

double tree_expectation(const VolatilityBand& band, const expr::ScalarFunction& phi, double t,
                        std::size_t steps)
{
    return tree_control_value(band, [&](double x) { return phi(x); }, nullptr, t, steps);
}

} // namespace gconvex

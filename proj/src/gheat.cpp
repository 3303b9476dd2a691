#include "gconvex/gheat.hpp"

#include "stencil.hpp"

#include <algorithm>
#include <cmath>

namespace gconvex {

FieldSolution::FieldSolution(SpaceTimeGrid grid, std::vector<double> times,
                             std::vector<double> values)
    : grid_(std::move(grid)), times_(std::move(times)), values_(std::move(values))
{
    if (times_.empty() || values_.size() != times_.size() * grid_.nodes())
        throw InvalidArgument("field size does not match its grid");
}

std::span<const double> FieldSolution::layer(std::size_t i) const
{
    if (i >= layers())
        throw InvalidArgument("layer index out of range");
    return std::span<const double>(values_).subspan(i * nodes(), nodes());
}

double FieldSolution::z(std::size_t i, std::size_t j) const
{
    return detail::first_difference(layer(i), j, grid_.dx());
}

double FieldSolution::curvature(std::size_t i, std::size_t j) const
{
    const double dx = grid_.dx();
    return detail::second_difference(layer(i), j, 1.0 / (dx * dx));
}

double FieldSolution::origin_value_at(double t) const
{
    const double t_end = times_.back();
    if (t < 0.0 || t > t_end * (1.0 + 1e-12))
        throw InvalidArgument("time outside the solved range");
    const auto it = std::lower_bound(times_.begin(), times_.end(), t);
    if (it == times_.end())
        return at_origin(layers() - 1);
    const std::size_t hi = static_cast<std::size_t>(it - times_.begin());
    if (*it == t || hi == 0)
        return at_origin(hi);
    const std::size_t lo = hi - 1;
    const double w = (t - times_[lo]) / (times_[hi] - times_[lo]);
    return (1.0 - w) * at_origin(lo) + w * at_origin(hi);
}

std::vector<double> sample(const expr::ScalarFunction& fn, const SpaceTimeGrid& grid)
{
    std::vector<double> out(grid.nodes());
    for (std::size_t j = 0; j < out.size(); ++j)
        out[j] = fn(grid.x(j));
    return out;
}

namespace {

// One explicit step u_next = u + dt * G(D2 u); returns the dropped boundary
// increment for diagnostics.
double g_heat_step(const VolatilityBand& band, std::span<const double> u, std::span<double> next,
                   double dt, double inv_dx2)
{
    const std::size_t n = u.size();
    for (std::size_t j = 0; j < n; ++j)
        next[j] = u[j] + dt * g_eval(band, detail::second_difference(u, j, inv_dx2));
    const double left = std::abs(dt * g_eval(band, detail::boundary_curvature(u, true, inv_dx2)));
    const double right = std::abs(dt * g_eval(band, detail::boundary_curvature(u, false, inv_dx2)));
    return std::max(left, right);
}

void check_finite(std::span<const double> u, std::size_t layer)
{
    for (double v : u)
        if (!std::isfinite(v))
            throw NumericalFailure("non-finite value in G-heat solve", layer);
}

} // namespace

FieldSolution solve_g_heat(const VolatilityBand& band, const expr::ScalarFunction& phi,
                           const SpaceTimeGrid& grid)
{
    grid.check_cfl(band);
    const std::size_t n = grid.nodes();
    const std::size_t steps = grid.nt();
    const double dt = grid.dt();
    const double dx = grid.dx();
    const double inv_dx2 = 1.0 / (dx * dx);

    std::vector<double> values((steps + 1) * n);
    std::vector<double> times(steps + 1);
    const std::vector<double> datum = sample(phi, grid);
    check_finite(datum, 0);
    std::copy(datum.begin(), datum.end(), values.begin());

    double drift_left_right = 0.0;
    for (std::size_t i = 0; i < steps; ++i) {
        std::span<const double> u(values.data() + i * n, n);
        std::span<double> next(values.data() + (i + 1) * n, n);
        drift_left_right += g_heat_step(band, u, next, dt, inv_dx2);
        check_finite(next, i + 1);
        times[i + 1] = static_cast<double>(i + 1) * dt;
    }
    times.back() = grid.horizon();

    FieldSolution field(grid, std::move(times), std::move(values));
    field.set_boundary_drift(drift_left_right);
    return field;
}

double g_expectation(const VolatilityBand& band, const expr::ScalarFunction& phi, double t,
                     const SpaceTimeGrid& grid)
{
    if (t < 0.0 || t > grid.horizon() * (1.0 + 1e-12))
        throw InvalidArgument("g_expectation needs 0 <= t <= horizon");
    return solve_g_heat(band, phi, grid).origin_value_at(std::min(t, grid.horizon()));
}

std::vector<double> evolve_g_heat(const VolatilityBand& band, std::span<const double> datum,
                                  const SpaceTimeGrid& grid, double duration)
{
    grid.check_cfl(band);
    if (datum.size() != grid.nodes())
        throw GridMismatch("datum does not match the grid");
    std::vector<double> u(datum.begin(), datum.end());
    if (duration == 0.0)
        return u;
    std::vector<double> next(u.size());
    const std::size_t steps = steps_covering(duration, grid.dt());
    const double dt = duration / static_cast<double>(steps);
    const double dx = grid.dx();
    const double inv_dx2 = 1.0 / (dx * dx);
    for (std::size_t i = 0; i < steps; ++i) {
        g_heat_step(band, u, next, dt, inv_dx2);
        check_finite(next, i + 1);
        u.swap(next);
    }
    return u;
}

// ---------------------------------------------------------------------------
// ConditionalTable
// ---------------------------------------------------------------------------

ConditionalTable::ConditionalTable(std::size_t dimension, std::vector<double> axis,
                                   std::vector<double> values)
    : dim_(dimension), axis_(std::move(axis)), values_(std::move(values))
{
    std::size_t expected = 1;
    for (std::size_t d = 0; d < dim_; ++d)
        expected *= axis_.size();
    if (values_.size() != expected || (dim_ > 0 && axis_.size() < 2))
        throw InvalidArgument("conditional table size mismatch");
}

double ConditionalTable::at_nodes(std::span<const std::size_t> index) const
{
    if (index.size() != dim_)
        throw InvalidArgument("wrong number of indices");
    std::size_t flat = 0;
    for (std::size_t k : index)
        flat = flat * axis_.size() + k;
    return values_.at(flat);
}

double ConditionalTable::operator()(std::span<const double> x) const
{
    if (x.size() != dim_)
        throw InvalidArgument("wrong number of arguments for conditional table");
    if (dim_ == 0)
        return values_[0];

    const std::size_t n = axis_.size();
    const double h = axis_[1] - axis_[0];
    std::vector<std::size_t> base(dim_);
    std::vector<double> frac(dim_);
    for (std::size_t d = 0; d < dim_; ++d) {
        const double pos = std::clamp((x[d] - axis_[0]) / h, 0.0, static_cast<double>(n - 1));
        const std::size_t k = std::min(static_cast<std::size_t>(pos), n - 2);
        base[d] = k;
        frac[d] = pos - static_cast<double>(k);
    }

    double result = 0.0;
    std::vector<std::size_t> idx(dim_);
    for (std::size_t corner = 0; corner < (std::size_t{1} << dim_); ++corner) {
        double w = 1.0;
        for (std::size_t d = 0; d < dim_; ++d) {
            const bool up = (corner >> d) & 1U;
            idx[d] = base[d] + (up ? 1 : 0);
            w *= up ? frac[d] : 1.0 - frac[d];
        }
        if (w != 0.0)
            result += w * at_nodes(idx);
    }
    return result;
}

double ConditionalTable::interpolation_residual() const
{
    if (dim_ == 0)
        return 0.0;
    const std::size_t n = axis_.size();
    std::size_t stride = 1;
    double worst = 0.0;
    for (std::size_t d = dim_; d-- > 0;) {
        for (std::size_t flat = 0; flat < values_.size(); ++flat) {
            const std::size_t k = (flat / stride) % n;
            if (k == 0 || k + 1 == n)
                continue;
            const double second
                = values_[flat + stride] - 2.0 * values_[flat] + values_[flat - stride];
            worst = std::max(worst, std::abs(second) / 8.0);
        }
        stride *= n;
    }
    return worst;
}

namespace {

// psi_k(prefix): the G-expectation of the payoff given the first k increments.
double nested_value(const VolatilityBand& band, const CylinderPayoff& payoff,
                    const SpaceTimeGrid& grid, std::vector<double>& prefix)
{
    const std::size_t m = payoff.times.size();
    const std::size_t k = prefix.size();
    if (k == m)
        return payoff.fn(prefix);

    const double t_prev = k == 0 ? 0.0 : payoff.times[k - 1];
    const double duration = payoff.times[k] - t_prev;
    std::vector<double> datum(grid.nodes());
    prefix.push_back(0.0);
    for (std::size_t j = 0; j < datum.size(); ++j) {
        prefix.back() = grid.x(j);
        datum[j] = nested_value(band, payoff, grid, prefix);
    }
    prefix.pop_back();
    return evolve_g_heat(band, datum, grid, duration)[grid.origin()];
}

} // namespace

ConditionalTable conditional_g_expectation(const VolatilityBand& band, const CylinderPayoff& payoff,
                                           std::size_t i, const SpaceTimeGrid& grid,
                                           const ConditionalOptions& options)
{
    const std::size_t m = payoff.times.size();
    if (m == 0 || m > 3)
        throw InvalidArgument("cylinder payoffs must have between 1 and 3 time points");
    if (i > m)
        throw InvalidArgument("conditioning index exceeds the number of time points");
    if (!payoff.fn)
        throw InvalidArgument("cylinder payoff has no function");
    double prev = 0.0;
    for (double t : payoff.times) {
        if (!(t > prev))
            throw InvalidArgument("cylinder time points must be strictly increasing and positive");
        prev = t;
    }
    grid.check_cfl(band);

    std::vector<double> axis(grid.nodes());
    for (std::size_t j = 0; j < axis.size(); ++j)
        axis[j] = grid.x(j);

    const std::size_t n = axis.size();
    std::size_t entries = 1;
    for (std::size_t d = 0; d < i; ++d)
        entries *= n;

    std::vector<double> values(entries);
    parallel_for(entries, options.threads, [&](std::size_t flat) {
        std::vector<double> prefix(i);
        std::size_t rest = flat;
        for (std::size_t d = i; d-- > 0;) {
            prefix[d] = axis[rest % n];
            rest /= n;
        }
        values[flat] = nested_value(band, payoff, grid, prefix);
    });

    ConditionalTable table(i, std::move(axis), std::move(values));
    double scale = 0.0;
    for (double v : table.values())
        scale = std::max(scale, std::abs(v));
    const double residual = table.interpolation_residual();
    if (residual > options.residual_threshold * (1.0 + scale)) {
        throw NumericalFailure("grid too coarse for conditional table: interpolation residual "
                                   + std::to_string(residual),
                               0);
    }
    return table;
}

} // namespace gconvex

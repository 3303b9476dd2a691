#include "gconvex/gbsde.hpp"

#include "stencil.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace gconvex {

GeneratorCheck check_generator(const GeneratorPair& gen, double horizon, double box,
                               std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    auto uniform = [&](double lo, double hi) {
        return lo + (hi - lo) * (static_cast<double>(rng() >> 11) * 0x1.0p-53);
    };

    GeneratorCheck out;
    for (int k = 0; k < 1000; ++k) {
        const double t = uniform(0.0, horizon);
        const double y1 = uniform(-box, box);
        const double z1 = uniform(-box, box);
        const double y2 = uniform(-box, box);
        const double z2 = uniform(-box, box);
        const double dg = std::abs(gen.g(t, y1, z1) - gen.g(t, y2, z2));
        const double df = std::abs(gen.f(t, y1, z1) - gen.f(t, y2, z2));
        const double dist = std::abs(y1 - y2) + std::abs(z1 - z2);
        if (dist > 0.0)
            out.max_quotient = std::max(out.max_quotient, (dg + df) / dist);
        if (gen.h6) {
            const double r = std::abs(gen.g(t, y1, 0.0)) + std::abs(gen.f(t, y1, 0.0));
            out.max_h6_residual = std::max(out.max_h6_residual, r);
        }
    }
    out.lipschitz_ok = out.max_quotient <= gen.lipschitz * (1.0 + 1e-9) + 1e-12;
    out.h6_ok = !gen.h6 || out.max_h6_residual <= 1e-12;
    return out;
}

void validate_generator(const GeneratorPair& gen, double horizon, double box)
{
    const GeneratorCheck c = check_generator(gen, horizon, box);
    if (!c.lipschitz_ok) {
        throw InvalidArgument("drivers violate the declared Lipschitz constant "
                              + std::to_string(gen.lipschitz) + " (sampled quotient "
                              + std::to_string(c.max_quotient) + ")");
    }
    if (!c.h6_ok) {
        throw InvalidArgument("drivers declared h6 but g(t,y,0) or f(t,y,0) is nonzero (residual "
                              + std::to_string(c.max_h6_residual) + ")");
    }
}

BsdeSolution::BsdeSolution(FieldSolution field, std::vector<double> eta, double t_start,
                           double t_end)
    : field_(std::move(field)), eta_(std::move(eta)), t_start_(t_start), t_end_(t_end)
{
    if (eta_.size() != field_.layers() * field_.nodes())
        throw InvalidArgument("eta does not match the field");
}

namespace {

struct LayerTerms {
    double g;
    double eta;
};

LayerTerms driver_terms(const GeneratorPair& gen, double t, std::span<const double> u, std::size_t j,
                        double dx, double inv_dx2)
{
    const double y = u[j];
    const double z = detail::first_difference(u, j, dx);
    const double d2 = detail::second_difference(u, j, inv_dx2);
    return {gen.g(t, y, z), gen.f(t, y, z) + 0.5 * d2};
}

} // namespace

BsdeSolution solve_gbsde(const VolatilityBand& band, const GeneratorPair& gen,
                         std::span<const double> terminal, const SpaceTimeGrid& grid, double s,
                         double t, const BsdeOptions& options)
{
    grid.check_cfl(band);
    if (!(s >= 0.0) || !(t > s) || t > grid.horizon() * (1.0 + 1e-12))
        throw InvalidArgument("solve_gbsde needs 0 <= s < t <= horizon");
    if (terminal.size() != grid.nodes())
        throw GridMismatch("terminal datum does not match the grid");

    const std::size_t n = grid.nodes();
    const double duration = t - s;
    const std::size_t steps = duration == grid.horizon() ? grid.nt()
                                                         : steps_covering(duration, grid.dt());
    const double dt = duration == grid.horizon() ? grid.dt()
                                                 : duration / static_cast<double>(steps);
    const double dx = grid.dx();
    const double inv_dx2 = 1.0 / (dx * dx);

    std::vector<double> values((steps + 1) * n);
    std::vector<double> eta((steps + 1) * n);
    std::vector<double> times(steps + 1);
    std::copy(terminal.begin(), terminal.end(), values.begin());

    // growth envelope
    double phi_inf = 0.0;
    for (double v : terminal) {
        if (!std::isfinite(v))
            throw NumericalFailure("non-finite terminal datum", 0);
        phi_inf = std::max(phi_inf, std::abs(v));
    }
    double g0 = 0.0;
    double f0 = 0.0;
    for (std::size_t i = 0; i <= steps; ++i) {
        const double r = t - static_cast<double>(i) * dt;
        g0 = std::max(g0, std::abs(gen.g(r, 0.0, 0.0)));
        f0 = std::max(f0, std::abs(gen.f(r, 0.0, 0.0)));
    }
    const double envelope = options.growth_bound
                            * (phi_inf + duration * g0 + duration * band.sigma_max_sq() * f0 + 1e-12);

    std::vector<double> predicted(options.picard_correction ? n : 0);
    for (std::size_t i = 0; i <= steps; ++i) {
        const double now = t - static_cast<double>(i) * dt;
        std::span<const double> u(values.data() + i * n, n);
        std::span<double> eta_i(eta.data() + i * n, n);

        if (i == steps) {
            for (std::size_t j = 0; j < n; ++j)
                eta_i[j] = driver_terms(gen, now, u, j, dx, inv_dx2).eta;
            break;
        }

        std::span<double> next(values.data() + (i + 1) * n, n);
        for (std::size_t j = 0; j < n; ++j) {
            const LayerTerms d = driver_terms(gen, now, u, j, dx, inv_dx2);
            eta_i[j] = d.eta;
            next[j] = u[j] + dt * (d.g + 2.0 * g_eval(band, d.eta));
        }

        if (options.picard_correction) {
            std::copy(next.begin(), next.end(), predicted.begin());
            const double later = now - dt;
            for (std::size_t j = 0; j < n; ++j) {
                const double y = predicted[j];
                const double z = detail::first_difference(predicted, j, dx);
                const double d2 = detail::second_difference(u, j, inv_dx2);
                next[j] = u[j]
                          + dt * (gen.g(later, y, z) + 2.0 * g_eval(band, gen.f(later, y, z) + 0.5 * d2));
            }
        }

        double peak = 0.0;
        for (double v : next) {
            if (!std::isfinite(v))
                throw NumericalFailure("non-finite value in G-BSDE solve", i + 1);
            peak = std::max(peak, std::abs(v));
        }
        if (peak > envelope) {
            throw NumericalFailure("G-BSDE solution left its growth envelope (|Y| = "
                                       + std::to_string(peak) + ")",
                                   i + 1);
        }
        times[i + 1] = static_cast<double>(i + 1) * dt;
    }
    times.back() = duration;

    return BsdeSolution(FieldSolution(grid, std::move(times), std::move(values)), std::move(eta), s, t);
}

BsdeSolution solve_gbsde(const VolatilityBand& band, const GeneratorPair& gen,
                         const expr::ScalarFunction& terminal, const SpaceTimeGrid& grid, double s,
                         double t, const BsdeOptions& options)
{
    const std::vector<double> datum = sample(terminal, grid);
    return solve_gbsde(band, gen, datum, grid, s, t, options);
}

BsdeSolution solve_gbsde(const VolatilityBand& band, const GeneratorPair& gen,
                         const expr::ScalarFunction& terminal, const SpaceTimeGrid& grid,
                         const BsdeOptions& options)
{
    return solve_gbsde(band, gen, terminal, grid, 0.0, grid.horizon(), options);
}

double nonlinear_expectation(const VolatilityBand& band, const GeneratorPair& gen,
                             const expr::ScalarFunction& terminal, double s, double t,
                             const SpaceTimeGrid& grid, const BsdeOptions& options)
{
    if (s == t) {
        if (s < 0.0 || t > grid.horizon())
            throw InvalidArgument("nonlinear_expectation needs 0 <= s <= t <= horizon");
        return terminal(0.0);
    }
    return solve_gbsde(band, gen, terminal, grid, s, t, options).initial_value();
}

double k_increment(const VolatilityBand& band, double eta, double a, double dt)
{
    if (!band.contains(a))
        throw InvalidArgument("variance density " + std::to_string(a) + " lies outside the band");
    if (!(dt > 0.0))
        throw InvalidArgument("k_increment needs dt > 0");
    return eta * a * dt - 2.0 * g_eval(band, eta) * dt;
}

namespace {

void check_path_grid(const BsdeSolution& sol, const LatticePath& path)
{
    if (path.times.size() != sol.layers() || path.a.size() != sol.steps())
        throw GridMismatch("path and solution have different step counts");
    const double dt = sol.dt();
    for (std::size_t k = 0; k < path.times.size(); ++k) {
        const double expected = sol.t_start() + static_cast<double>(k) * dt;
        if (std::abs(path.times[k] - expected) > 1e-9 * (1.0 + std::abs(expected)))
            throw GridMismatch("path time grid differs from the solution's");
    }
}

} // namespace

std::vector<double> k_along_path(const VolatilityBand& band, const BsdeSolution& sol,
                                 const LatticePath& path)
{
    check_path_grid(sol, path);
    const SpaceTimeGrid& grid = sol.field().grid();
    const double dt = sol.dt();
    std::vector<double> k(path.times.size(), 0.0);
    for (std::size_t step = 0; step < path.a.size(); ++step) {
        const double eta = sol.eta(sol.layer_of_step(step), grid.nearest_node(path.b[step]));
        k[step + 1] = k[step] + k_increment(band, eta, path.a[step], dt);
    }
    return k;
}

MarkovVolatility worst_case_policy(const BsdeSolution& sol)
{
    return MarkovVolatility{[&sol](std::size_t step, double x) {
        const SpaceTimeGrid& grid = sol.field().grid();
        return sol.eta(sol.layer_of_step(step), grid.nearest_node(x));
    }};
}

double worst_case_k_expectation(const VolatilityBand& band, const BsdeSolution& sol)
{
    const SpaceTimeGrid& grid = sol.field().grid();
    const double dt = sol.dt();
    auto reward = [&](std::size_t step, double x, double a) {
        const double eta = sol.eta(sol.layer_of_step(step), grid.nearest_node(x));
        return k_increment(band, eta, a, dt);
    };
    return tree_control_value(band, [](double) { return 0.0; }, reward, sol.t_end() - sol.t_start(),
                              sol.steps());
}

} // namespace gconvex

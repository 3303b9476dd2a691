#include "gconvex/convexity.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace gconvex {

double condition_gap(const VolatilityBand& band, const GeneratorPair& gen,
                     const expr::ScalarFunction& h, double t, double y, double z, double a)
{
    const expr::Jet hj = expr::eval2(h, y);
    const double hz = hj.d1 * z;
    const double lhs = gen.g(t, hj.value, hz)
                       + 2.0 * g_eval(band, gen.f(t, hj.value, hz) + 0.5 * hj.d2 * z * z + 0.5 * hj.d1 * a);
    const double rhs = hj.d1 * gen.g(t, y, z) + 2.0 * hj.d1 * g_eval(band, gen.f(t, y, z) + 0.5 * a);
    return lhs - rhs;
}

ReducedGap reduce_over_a(const VolatilityBand& band, const GeneratorPair& gen,
                         const expr::ScalarFunction& h, double t, double y, double z)
{
    const expr::Jet hj = expr::eval2(h, y);
    const double lo = band.sigma_min_sq();
    const double hi = band.sigma_max_sq();
    const double h1 = hj.d1;

    // d/dA of 2 G(c + h1 A / 2) is hi h1 / 2 or lo h1 / 2 depending on the
    // sign of the argument; the second term contributes -h1 hi / 2 or -h1 lo / 2.
    double first_plus = 0.0;
    double first_minus = 0.0;
    if (h1 > 0.0) {
        first_plus = 0.5 * hi * h1;
        first_minus = 0.5 * lo * h1;
    } else if (h1 < 0.0) {
        first_plus = 0.5 * lo * h1;
        first_minus = 0.5 * hi * h1;
    }
    const double slope_plus = first_plus - 0.5 * hi * h1;
    const double slope_minus = first_minus - 0.5 * lo * h1;
    const double slack = 1e-14 * (1.0 + hi * std::abs(h1));

    constexpr double inf = std::numeric_limits<double>::infinity();
    if (slope_plus < -slack)
        return {-inf, inf, ReducedGap::Attained::plus_infinity, slope_plus, slope_minus};
    if (slope_minus > slack)
        return {-inf, -inf, ReducedGap::Attained::minus_infinity, slope_plus, slope_minus};

    const double hz = h1 * z;
    std::vector<double> kinks;
    kinks.push_back(-2.0 * gen.f(t, y, z));
    if (h1 != 0.0)
        kinks.push_back(-(2.0 * gen.f(t, hj.value, hz) + hj.d2 * z * z) / h1);

    ReducedGap best{inf, 0.0, ReducedGap::Attained::finite, slope_plus, slope_minus};
    for (double a : kinks) {
        const double v = condition_gap(band, gen, h, t, y, z, a);
        if (v < best.inf_gap) {
            best.inf_gap = v;
            best.argmin_a = a;
        }
    }
    return best;
}

ConvexityReport check_g_convexity(const VolatilityBand& band, const GeneratorPair& gen,
                                  const expr::ScalarFunction& h, ScanRange y_range,
                                  ScanRange z_range, std::size_t resolution, double t,
                                  unsigned threads)
{
    if (resolution < 16)
        throw InvalidArgument("convexity scan resolution must be at least 16");
    for (const ScanRange& r : {y_range, z_range})
        if (!std::isfinite(r.lo) || !std::isfinite(r.hi) || !(r.lo <= r.hi))
            throw InvalidArgument("convexity scan ranges must be finite with lo <= hi");

    auto axis = [resolution](ScanRange r, std::size_t k) {
        return r.lo + (r.hi - r.lo) * static_cast<double>(k) / static_cast<double>(resolution - 1);
    };

    ConvexityReport report;
    report.y_range = y_range;
    report.z_range = z_range;
    report.resolution = resolution;
    report.t = t;
    report.cells.resize(resolution * resolution);

    parallel_for(resolution, threads, [&](std::size_t iy) {
        const double y = axis(y_range, iy);
        for (std::size_t iz = 0; iz < resolution; ++iz) {
            const double z = axis(z_range, iz);
            const ReducedGap r = reduce_over_a(band, gen, h, t, y, z);
            report.cells[iy * resolution + iz] = {y, z, r.inf_gap, r.argmin_a};
        }
    });

    report.min_gap = std::numeric_limits<double>::infinity();
    for (const ScanCell& c : report.cells) {
        report.min_gap = std::min(report.min_gap, c.inf_gap);
        if (c.inf_gap < -kWitnessTolerance) {
            double a = c.argmin_a;
            double gap = c.inf_gap;
            if (!std::isfinite(a)) {
                // Unbounded below: walk out along the divergent asymptote until
                // the gap is clearly negative.
                a = std::copysign(1.0, a);
                gap = condition_gap(band, gen, h, t, c.y, c.z, a);
                while (gap >= -1.0 && std::abs(a) < 1e300) {
                    a *= 2.0;
                    gap = condition_gap(band, gen, h, t, c.y, c.z, a);
                }
            }
            report.witnesses.push_back({c.y, c.z, a, gap});
        }
    }
    report.holds = report.witnesses.empty();
    return report;
}

// ---------------------------------------------------------------------------

double representation_formula(const VolatilityBand& band, const GeneratorPair& gen,
                              const expr::ScalarFunction& terminal, double t)
{
    const expr::Jet p = expr::eval2(terminal, 0.0);
    return gen.g(t, p.value, p.d1) + 2.0 * g_eval(band, gen.f(t, p.value, p.d1) + 0.5 * p.d2);
}

double representation_quotient(const VolatilityBand& band, const GeneratorPair& gen,
                               const expr::ScalarFunction& terminal, double t, double eps,
                               const SpaceTimeGrid& grid, const BsdeOptions& options)
{
    if (!(eps > 0.0))
        throw InvalidArgument("representation quotient needs eps > 0");
    const double y = nonlinear_expectation(band, gen, terminal, t, t + eps, grid, options);
    return (y - terminal(0.0)) / eps;
}

RepresentationReport representation_limit_check(const VolatilityBand& band, const GeneratorPair& gen,
                                                const expr::ScalarFunction& terminal, double t,
                                                const std::vector<double>& eps_list,
                                                const SpaceTimeGrid& grid,
                                                const BsdeOptions& options)
{
    if (eps_list.size() < 3)
        throw InvalidArgument("representation check needs at least 3 eps values");
    for (std::size_t k = 1; k < eps_list.size(); ++k)
        if (!(eps_list[k] < eps_list[k - 1]))
            throw InvalidArgument("eps values must be strictly decreasing");

    RepresentationReport rep;
    rep.formula = representation_formula(band, gen, terminal, t);
    for (double eps : eps_list) {
        const double q = representation_quotient(band, gen, terminal, t, eps, grid, options);
        rep.rows.push_back({eps, q, std::abs(q - rep.formula)});
    }

    const bool vanishing = std::all_of(rep.rows.begin(), rep.rows.end(),
                                       [](const RepresentationRow& r) { return r.error <= 1e-12; });
    rep.decreasing = true;
    for (std::size_t k = 1; k < rep.rows.size(); ++k)
        if (!(rep.rows[k].error < rep.rows[k - 1].error))
            rep.decreasing = false;
    rep.decreasing = rep.decreasing || vanishing;

    // log-log least squares over the nonzero errors
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    std::size_t n = 0;
    for (const auto& r : rep.rows) {
        if (r.error <= 0.0)
            continue;
        const double lx = std::log(r.eps);
        const double ly = std::log(r.error);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
        ++n;
    }
    if (n >= 2) {
        const double nn = static_cast<double>(n);
        rep.order = (nn * sxy - sx * sy) / (nn * sxx - sx * sx);
    } else {
        rep.order = std::numeric_limits<double>::quiet_NaN();
    }

    rep.final_relative_error = rep.rows.back().error / (1.0 + std::abs(rep.formula));
    rep.passed = rep.decreasing && rep.final_relative_error <= RepresentationReport::kRelativeTolerance;
    return rep;
}

// ---------------------------------------------------------------------------

JensenResult jensen_experiment(const VolatilityBand& band, const GeneratorPair& gen,
                               const expr::ScalarFunction& h, const expr::ScalarFunction& phi,
                               double s, double t, const SpaceTimeGrid& grid,
                               const BsdeOptions& options)
{
    const expr::ScalarFunction hphi = expr::compose(h, phi);
    const double lhs = nonlinear_expectation(band, gen, hphi, s, t, grid, options);
    const double inner = nonlinear_expectation(band, gen, phi, s, t, grid, options);
    const double rhs = h(inner);
    return {lhs, rhs, lhs - rhs};
}

NecessityResult necessity_experiment(const VolatilityBand& band, const GeneratorPair& gen,
                                     const expr::ScalarFunction& h, const ConvexityWitness& witness,
                                     double t, double eps, const SpaceTimeGrid& grid,
                                     const BsdeOptions& options)
{
    if (!std::isfinite(witness.a))
        throw InvalidArgument("witness must carry a finite A");
    expr::ScalarFunction phi = expr::ScalarFunction::localized_quadratic(witness.y, witness.z, witness.a);
    const expr::Jet jet = expr::eval2(expr::compose(h, phi), 0.0);
    const JensenResult j = jensen_experiment(band, gen, h, phi, t, t + eps, grid, options);
    return {witness, std::move(phi), jet, j, witness.gap * eps};
}

} // namespace gconvex

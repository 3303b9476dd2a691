#include "gconvex/runner.hpp"

#include "gconvex/convexity.hpp"
#include "gconvex/gbsde.hpp"
#include "gconvex/gheat.hpp"
#include "gconvex/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>

namespace gconvex {

namespace {

using nlohmann::json;

const std::vector<std::pair<Command, std::string>>& command_table()
{
    static const std::vector<std::pair<Command, std::string>> table = {
        {Command::gexp, "gexp"},         {Command::gbsde, "gbsde"},
        {Command::convexity, "convexity"}, {Command::jensen, "jensen"},
        {Command::replimit, "replimit"}, {Command::oracle_check, "oracle-check"},
    };
    return table;
}

json check_entry(const std::string& name, bool passed, double value, double tolerance)
{
    return {{"name", name}, {"passed", passed}, {"value", value}, {"tolerance", tolerance}};
}

// u at evolution time t and node j, linear between layers.
double field_value_at(const FieldSolution& field, double t, std::size_t j)
{
    const std::vector<double>& times = field.times();
    if (t <= times.front())
        return field.u(0, j);
    if (t >= times.back())
        return field.u(field.layers() - 1, j);
    const auto it = std::upper_bound(times.begin(), times.end(), t);
    const std::size_t i = static_cast<std::size_t>(it - times.begin()) - 1;
    const double w = (t - times[i]) / (times[i + 1] - times[i]);
    return (1.0 - w) * field.u(i, j) + w * field.u(i + 1, j);
}

void run_gexp(const ExperimentConfig& c, RunOutcome& out)
{
    const VolatilityBand band = c.band();
    const SpaceTimeGrid grid = c.space_time_grid();
    const expr::ScalarFunction phi = c.function("phi");
    const FieldSolution field = solve_g_heat(band, phi, grid);

    out.csv_header = {"t", "x", "u"};
    json values = json::array();
    for (double t : c.params.times) {
        values.push_back({{"t", t}, {"value", field.origin_value_at(t)}});
        for (std::size_t j = 0; j < grid.nodes(); ++j)
            out.csv_rows.push_back({format_number(t), format_number(grid.x(j)),
                                    format_number(field_value_at(field, t, j))});
    }
    out.report["results"] = {{"values", values},
                             {"boundary_drift", field.boundary_drift()},
                             {"cfl_ratio", grid.cfl_ratio(band)}};
    if (c.params.expect) {
        const double v = field.origin_value_at(c.params.times.back());
        const double err = std::abs(v - c.params.expect->value);
        out.report["checks"].push_back(check_entry("expected_value", err <= c.params.expect->tolerance, err,
                                                   c.params.expect->tolerance));
    }
    out.summary = "E[phi(B_t)] at t = " + format_number(c.params.times.back()) + ": "
                  + format_number(field.origin_value_at(c.params.times.back()));
}

void run_gbsde(const ExperimentConfig& c, RunOutcome& out)
{
    const VolatilityBand band = c.band();
    const SpaceTimeGrid grid = c.space_time_grid();
    const GeneratorPair gen = c.generator_pair();
    const expr::ScalarFunction terminal = c.function("terminal");
    const double t_end = c.params.t.value_or(grid.horizon());
    const BsdeSolution sol = solve_gbsde(band, gen, terminal, grid, c.params.s, t_end, c.bsde_options());

    const std::size_t last = sol.layers() - 1;
    const std::size_t o = grid.origin();
    out.csv_header = {"x", "y", "z", "eta"};
    for (std::size_t j = 0; j < grid.nodes(); ++j)
        out.csv_rows.push_back({format_number(grid.x(j)), format_number(sol.y(last, j)),
                                format_number(sol.z(last, j)), format_number(sol.eta(last, j))});

    out.report["results"] = {{"y", sol.initial_value()},
                             {"z", sol.z(last, o)},
                             {"eta", sol.eta(last, o)},
                             {"s", sol.t_start()},
                             {"t", sol.t_end()},
                             {"steps", sol.steps()},
                             {"dt", sol.dt()},
                             {"boundary_drift", sol.field().boundary_drift()},
                             {"worst_case_k_expectation", worst_case_k_expectation(band, sol)}};
    if (c.params.expect) {
        const double err = std::abs(sol.initial_value() - c.params.expect->value);
        out.report["checks"].push_back(check_entry("expected_value", err <= c.params.expect->tolerance, err,
                                                   c.params.expect->tolerance));
    }
    out.summary = "Y_s = " + format_number(sol.initial_value());
}

void run_convexity(const ExperimentConfig& c, RunOutcome& out)
{
    const CommandParams& p = c.params;
    const ConvexityReport rep = check_g_convexity(c.band(), c.generator_pair(), c.function("h"), p.y_range,
                                                  p.z_range, p.resolution, p.scan_t, c.threads);
    out.csv_header = {"y", "z", "inf_gap", "argmin_a"};
    for (const ScanCell& cell : rep.cells)
        out.csv_rows.push_back({format_number(cell.y), format_number(cell.z), format_number(cell.inf_gap),
                                format_number(cell.argmin_a)});

    json witnesses = json::array();
    for (const ConvexityWitness& w : rep.witnesses)
        witnesses.push_back({{"y", w.y}, {"z", w.z}, {"a", w.a}, {"gap", w.gap}});
    out.report["results"] = {{"verdict", rep.holds ? "holds" : "fails"},
                             {"min_gap", rep.min_gap},
                             {"witness_tolerance", kWitnessTolerance},
                             {"witness_count", rep.witnesses.size()},
                             {"witnesses", witnesses}};
    out.summary = std::string("verdict: ") + (rep.holds ? "holds" : "fails") + " ("
                  + std::to_string(rep.witnesses.size()) + " witnesses)";
}

void run_jensen(const ExperimentConfig& c, RunOutcome& out)
{
    const VolatilityBand band = c.band();
    const SpaceTimeGrid grid = c.space_time_grid();
    const GeneratorPair gen = c.generator_pair();
    const expr::ScalarFunction h = c.function("h");
    const expr::ScalarFunction phi = c.function("phi");

    out.csv_header = {"s", "t", "lhs", "rhs", "gap"};
    json rows = json::array();
    double min_gap = INFINITY;
    for (double horizon : c.params.horizons) {
        const double s = c.params.s;
        const double t = std::min(s + horizon, grid.horizon());
        const JensenResult r = jensen_experiment(band, gen, h, phi, s, t, grid, c.bsde_options());
        min_gap = std::min(min_gap, r.gap);
        rows.push_back({{"s", s}, {"t", t}, {"lhs", r.lhs}, {"rhs", r.rhs}, {"gap", r.gap}});
        out.csv_rows.push_back({format_number(s), format_number(t), format_number(r.lhs), format_number(r.rhs),
                                format_number(r.gap)});
    }
    out.report["results"] = {{"rows", rows}, {"min_gap", min_gap}};
    out.summary = "min Jensen gap " + format_number(min_gap);
}

void run_replimit(const ExperimentConfig& c, RunOutcome& out)
{
    const RepresentationReport rep
        = representation_limit_check(c.band(), c.generator_pair(), c.function("terminal"), c.params.s,
                                     c.params.eps_list, c.space_time_grid(), c.bsde_options());
    out.csv_header = {"eps", "quotient", "formula", "error"};
    json rows = json::array();
    for (const RepresentationRow& r : rep.rows) {
        rows.push_back({{"eps", r.eps}, {"quotient", r.quotient}, {"error", r.error}});
        out.csv_rows.push_back({format_number(r.eps), format_number(r.quotient), format_number(rep.formula),
                                format_number(r.error)});
    }
    out.report["results"] = {{"formula", rep.formula},
                             {"rows", rows},
                             {"order", rep.order},
                             {"decreasing", rep.decreasing},
                             {"final_relative_error", rep.final_relative_error}};
    out.report["checks"].push_back(check_entry("errors_decreasing", rep.decreasing, rep.order, 0.0));
    out.report["checks"].push_back(check_entry("final_relative_error",
                                               rep.final_relative_error
                                                   <= RepresentationReport::kRelativeTolerance,
                                               rep.final_relative_error,
                                               RepresentationReport::kRelativeTolerance));
    out.summary = "representation limit " + std::string(rep.passed ? "confirmed" : "not confirmed")
                  + ", final relative error " + format_number(rep.final_relative_error);
}

void run_oracle_check(const ExperimentConfig& c, RunOutcome& out)
{
    const VolatilityBand band = c.band();
    const SpaceTimeGrid grid = c.space_time_grid();
    const CommandParams& p = c.params;

    std::vector<std::string> texts;
    if (c.functions.phi)
        texts.push_back(*c.functions.phi);
    texts.insert(texts.end(), p.catalog.begin(), p.catalog.end());
    if (texts.empty())
        throw ConfigError("functions.phi", "oracle-check needs functions.phi or params.catalog");

    out.csv_header = {"function", "t", "pde", "tree", "abs_diff"};
    double max_diff = 0.0;
    for (const std::string& text : texts) {
        const expr::ScalarFunction fn = expr::ScalarFunction::parse(text);
        const FieldSolution field = solve_g_heat(band, fn, grid);
        for (double t : p.times) {
            const double pde = field.origin_value_at(t);
            const double tree = tree_expectation(band, fn, t, p.tree_steps);
            const double diff = std::abs(pde - tree);
            max_diff = std::max(max_diff, diff);
            out.csv_rows.push_back(
                {text, format_number(t), format_number(pde), format_number(tree), format_number(diff)});
        }
    }
    out.report["checks"].push_back(check_entry("pde_tree_agreement", max_diff <= p.tolerance, max_diff, p.tolerance));

    // Simulated scenarios: admissible controls and exact quadratic variation.
    const std::vector<std::pair<std::string, VolatilityPolicy>> policies
        = {{"low", ConstLowVolatility{}}, {"high", ConstHighVolatility{}}, {"random", RandomVolatility{}}};
    double qv_defect = 0.0;
    bool admissible = true;
    for (std::size_t k = 0; k < p.paths; ++k) {
        for (std::size_t q = 0; q < policies.size(); ++q) {
            const LatticePath path = simulate_path(band, policies[q].second, grid, p.seed + 3 * k + q);
            try {
                path.validate(band);
            } catch (const InvalidArgument&) {
                admissible = false;
            }
            const std::vector<double> qv = quadratic_variation(path);
            for (std::size_t i = 0; i < qv.size(); ++i)
                qv_defect = std::max(qv_defect, std::abs(qv[i] - path.qv[i]) / (1.0 + path.qv[i]));
        }
    }
    out.report["checks"].push_back(check_entry("paths_admissible", admissible, admissible ? 0.0 : 1.0, 0.0));
    out.report["checks"].push_back(check_entry("quadratic_variation", qv_defect <= 1e-12, qv_defect, 1e-12));

    json results = {{"max_abs_diff", max_diff}, {"functions", texts.size()}, {"paths", p.paths}};

    // K along simulated paths of the terminal's G-BSDE, if one is configured.
    if (c.functions.terminal) {
        const GeneratorPair gen = c.generator_pair();
        const BsdeSolution sol = solve_gbsde(band, gen, c.function("terminal"), grid, c.bsde_options());
        double max_rise = 0.0;
        std::vector<std::pair<std::string, VolatilityPolicy>> k_policies = policies;
        k_policies.emplace_back("worst_case", worst_case_policy(sol));
        for (std::size_t k = 0; k < p.paths; ++k) {
            for (std::size_t q = 0; q < k_policies.size(); ++q) {
                const LatticePath path = simulate_path(band, k_policies[q].second, grid, p.seed + 7 * k + q);
                const std::vector<double> kk = k_along_path(band, sol, path);
                for (std::size_t i = 1; i < kk.size(); ++i)
                    max_rise = std::max(max_rise, kk[i] - kk[i - 1]);
            }
        }
        const double tree_k = worst_case_k_expectation(band, sol);
        results["k_max_increment"] = max_rise;
        results["k_worst_case_expectation"] = tree_k;
        out.report["checks"].push_back(check_entry("k_nonincreasing", max_rise <= 0.0, max_rise, 0.0));
        out.report["checks"].push_back(
            check_entry("k_worst_case_expectation", tree_k <= 0.0 && tree_k >= -p.tolerance, tree_k, p.tolerance));
    }
    out.report["results"] = results;
    out.summary = "max |pde - tree| = " + format_number(max_diff);
}

json error_entry(const char* type, const std::exception& e)
{
    json j = {{"type", type}, {"message", e.what()}};
    if (const auto* nf = dynamic_cast<const NumericalFailure*>(&e))
        j["layer"] = nf->layer();
    return j;
}

} // namespace

std::optional<Command> parse_command(std::string_view name)
{
    for (const auto& [cmd, text] : command_table())
        if (text == name)
            return cmd;
    return std::nullopt;
}

std::string_view command_name(Command c)
{
    for (const auto& [cmd, text] : command_table())
        if (cmd == c)
            return text;
    return "unknown";
}

const std::vector<std::string>& command_names()
{
    static const std::vector<std::string> names = [] {
        std::vector<std::string> v;
        for (const auto& entry : command_table())
            v.push_back(entry.second);
        return v;
    }();
    return names;
}

std::string format_number(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

RunOutcome run_command(Command command, const ExperimentConfig& config)
{
    RunOutcome out;
    out.report = {{"command", std::string(command_name(command))},
                  {"config", to_json(config)},
                  {"rng", {{"algorithm", std::string(kRngAlgorithm)}, {"seed", config.params.seed}}},
                  {"checks", json::array()}};
    try {
        switch (command) {
        case Command::gexp: run_gexp(config, out); break;
        case Command::gbsde: run_gbsde(config, out); break;
        case Command::convexity: run_convexity(config, out); break;
        case Command::jensen: run_jensen(config, out); break;
        case Command::replimit: run_replimit(config, out); break;
        case Command::oracle_check: run_oracle_check(config, out); break;
        }
    } catch (const ConfigError&) {
        throw;
    } catch (const NumericalFailure& e) {
        out.report["error"] = error_entry("numerical_failure", e);
    } catch (const CflViolation& e) {
        out.report["error"] = error_entry("cfl_violation", e);
    } catch (const expr::DomainError& e) {
        out.report["error"] = error_entry("domain_error", e);
    } catch (const GridMismatch& e) {
        out.report["error"] = error_entry("grid_mismatch", e);
    } catch (const InvalidArgument& e) {
        out.report["error"] = error_entry("invalid_argument", e);
    }

    bool passed = !out.report.contains("error");
    for (const json& check : out.report["checks"])
        passed = passed && check["passed"].get<bool>();
    out.status = passed ? kExitOk : kExitFailure;
    out.report["passed"] = passed;
    out.report["status"] = out.status;
    if (out.report.contains("error"))
        out.summary = "error: " + out.report["error"]["message"].get<std::string>();
    return out;
}

void write_outputs(Command command, const RunOutcome& outcome, const std::filesystem::path& out_dir)
{
    std::filesystem::create_directories(out_dir);
    const std::string stem = std::string(command_name(command));
    {
        std::ofstream report(out_dir / (stem + ".report.json"));
        report << outcome.report.dump(2) << '\n';
        if (!report)
            throw Error("failed writing " + (out_dir / (stem + ".report.json")).string());
    }
    std::ofstream csv(out_dir / (stem + ".data.csv"));
    auto line = [&csv](const std::vector<std::string>& cells) {
        for (std::size_t k = 0; k < cells.size(); ++k) {
            if (k)
                csv << ',';
            const bool quote = cells[k].find_first_of(",\"") != std::string::npos;
            if (quote) {
                csv << '"';
                for (char ch : cells[k])
                    csv << (ch == '"' ? "\"\"" : std::string(1, ch));
                csv << '"';
            } else {
                csv << cells[k];
            }
        }
        csv << '\n';
    };
    line(outcome.csv_header);
    for (const auto& row : outcome.csv_rows)
        line(row);
    if (!csv)
        throw Error("failed writing " + (out_dir / (stem + ".data.csv")).string());
}

int run_cli(std::string_view command, const std::filesystem::path& config_path,
            const std::filesystem::path& out_dir, std::ostream& log)
{
    const std::optional<Command> cmd = parse_command(command);
    if (!cmd) {
        log << "unknown command '" << command << "'\n";
        return kExitConfig;
    }
    RunOutcome outcome;
    try {
        outcome = run_command(*cmd, load_config(config_path));
    } catch (const ConfigError& e) {
        log << e.what() << '\n';
        return kExitConfig;
    }
    try {
        write_outputs(*cmd, outcome, out_dir);
    } catch (const std::exception& e) {
        log << e.what() << '\n';
        return kExitFailure;
    }
    log << command << ": " << outcome.summary << '\n';
    return outcome.status;
}

} // namespace gconvex

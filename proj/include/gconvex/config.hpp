#pragma once

// Experiment configuration: a single strict JSON document. Unknown keys are
// rejected and every error names the offending field path.

#include "gconvex/convexity.hpp"
#include "gconvex/core.hpp"
#include "gconvex/expr.hpp"
#include "gconvex/gbsde.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace gconvex {

inline constexpr int kSchemaVersion = 1;

class ConfigError : public Error {
public:
    ConfigError(std::string field, const std::string& message)
        : Error("config error at '" + field + "': " + message), field_(std::move(field)) {}
    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

struct GridSettings {
    double horizon = 1.0;
    double x_min = 0.0;  // both zero: symmetric standard width
    double x_max = 0.0;
    std::size_t nx = 400;
    std::size_t nt = 0;  // 0: smallest CFL-compliant step count
    double cfl_theta = kMaxCflTheta;

    friend bool operator==(const GridSettings&, const GridSettings&) = default;
};

struct GeneratorSettings {
    std::string g = "0";
    std::string f = "0";
    double lipschitz = 0.0;
    bool h6 = true;
    bool picard_correction = false;
    double growth_bound = 1e4;
    double working_box = 10.0;

    friend bool operator==(const GeneratorSettings&, const GeneratorSettings&) = default;
};

struct FunctionSettings {
    std::optional<std::string> h;
    std::optional<std::string> phi;
    std::optional<std::string> terminal;

    friend bool operator==(const FunctionSettings&, const FunctionSettings&) = default;
};

struct Expectation {
    double value = 0.0;
    double tolerance = 0.0;

    friend bool operator==(const Expectation&, const Expectation&) = default;
};

struct CommandParams {
    std::vector<double> times;        // gexp, oracle-check
    double s = 0.0;                   // gbsde, jensen, replimit (start time)
    std::optional<double> t;          // gbsde end time; defaults to the horizon
    std::vector<double> horizons;     // jensen: t = s + horizon
    std::vector<double> eps_list = {0.1, 0.05, 0.025, 0.0125};
    ScanRange y_range{-2.0, 2.0};
    ScanRange z_range{-2.0, 2.0};
    std::size_t resolution = 41;
    double scan_t = 0.0;
    std::size_t tree_steps = 2000;
    double tolerance = 5e-3;          // oracle-check agreement bound
    std::vector<std::string> catalog; // oracle-check: extra functions of x
    std::uint64_t seed = 1;
    std::size_t paths = 100;
    std::optional<Expectation> expect;

    friend bool operator==(const CommandParams& a, const CommandParams& b)
    {
        return a.times == b.times && a.s == b.s && a.t == b.t && a.horizons == b.horizons
               && a.eps_list == b.eps_list && a.y_range.lo == b.y_range.lo
               && a.y_range.hi == b.y_range.hi && a.z_range.lo == b.z_range.lo
               && a.z_range.hi == b.z_range.hi && a.resolution == b.resolution
               && a.scan_t == b.scan_t && a.tree_steps == b.tree_steps
               && a.tolerance == b.tolerance && a.catalog == b.catalog && a.seed == b.seed
               && a.paths == b.paths && a.expect == b.expect;
    }
};

struct ExperimentConfig {
    int schema_version = kSchemaVersion;
    double sigma_min_sq = 1.0;
    double sigma_max_sq = 1.0;
    GridSettings grid;
    GeneratorSettings generator;
    FunctionSettings functions;
    CommandParams params;
    unsigned threads = 1;

    VolatilityBand band() const { return VolatilityBand(sigma_min_sq, sigma_max_sq); }
    SpaceTimeGrid space_time_grid() const;
    GeneratorPair generator_pair() const;
    BsdeOptions bsde_options() const;
    /// Parses functions.<name>; throws ConfigError if it is absent.
    expr::ScalarFunction function(const std::string& name) const;

    friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

/// Parses and validates (band, grid, expressions, generator invariants).
/// Defaults are resolved so that to_json() echoes a complete document.
ExperimentConfig parse_config(const nlohmann::json& doc);
ExperimentConfig load_config(const std::filesystem::path& path);
nlohmann::json to_json(const ExperimentConfig& config);

} // namespace gconvex

#pragma once

// Experiment commands behind the command-line tool. Each run writes
// <out>/<command>.report.json and <out>/<command>.data.csv.
//
// Exit status: 0 success (a "fails" convexity verdict is a result, not an
// error), 1 configuration error (no files written), 2 numerical failure or a
// failed check.

#include "gconvex/config.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace gconvex {

enum class Command { gexp, gbsde, convexity, jensen, replimit, oracle_check };

std::optional<Command> parse_command(std::string_view name);
std::string_view command_name(Command c);
const std::vector<std::string>& command_names();

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 1;
inline constexpr int kExitFailure = 2;

struct RunOutcome {
    int status = kExitOk;
    std::string summary;
    nlohmann::json report;
    std::vector<std::string> csv_header;
    std::vector<std::vector<std::string>> csv_rows;
};

/// Runs a command in memory. Numerical failures are folded into the outcome
/// (status 2, report["error"]); configuration errors propagate.
RunOutcome run_command(Command command, const ExperimentConfig& config);

/// Writes the report and CSV files of an outcome.
void write_outputs(Command command, const RunOutcome& outcome, const std::filesystem::path& out_dir);

/// Loads the configuration, runs, writes outputs and returns the exit status.
/// Diagnostics go to `log`.
int run_cli(std::string_view command, const std::filesystem::path& config_path,
            const std::filesystem::path& out_dir, std::ostream& log);

/// "%.17g" formatting used for every number in the CSV files.
std::string format_number(double v);

} // namespace gconvex

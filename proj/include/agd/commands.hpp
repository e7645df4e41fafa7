#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "agd/config.hpp"

namespace agd::commands {

// Stable exit-code contract.
inline constexpr int kExitOk = 0;
inline constexpr int kExitVerifyFailed = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitRuntime = 3;

struct RunOutcome {
    std::string status;  // converged | not_converged | completed | diverged
    nlohmann::ordered_json summary;
};

/// Executes one experiment and writes trajectory.csv, histograms.json and
/// summary.json into `out_dir`. All files are written atomically.
RunOutcome execute(const config::ExperimentConfig& cfg, const std::filesystem::path& out_dir);

struct RunOptions {
    std::string config_path;
    std::optional<std::string> out;
    std::optional<std::uint64_t> seed;
    std::optional<std::uint64_t> snapshot_every;
};
int cmd_run(const RunOptions& opts, std::ostream& out, std::ostream& err);

struct SweepOptions {
    RunOptions run;
    std::string param;
    std::vector<std::string> values;
    unsigned jobs = 1;
    // Use the base seed for every point instead of base + index.
    bool shared_seed = false;
};
int cmd_sweep(const SweepOptions& opts, std::ostream& out, std::ostream& err);

// Seed for sweep point `index`: base + index, so appending values leaves
// existing points untouched and a one-point sweep reproduces `run`.
std::uint64_t sweep_seed(std::uint64_t base, std::size_t index);

// Parses a sweep value: integers stay integers, other numerals become doubles,
// anything else is passed through as a string.
nlohmann::json parse_sweep_value(const std::string& text);

struct VerifyCliOptions {
    std::optional<std::uint64_t> mc_samples;
    std::optional<std::uint64_t> seed;
    std::optional<double> beta1;
    std::optional<double> beta2;
    std::optional<double> delta;
    std::optional<std::string> out;
};
int cmd_verify(const VerifyCliOptions& opts, std::ostream& out, std::ostream& err);

struct RaceCliOptions {
    std::optional<std::string> config_path;
    std::optional<std::string> function;
    std::optional<double> tol;
    std::optional<std::uint64_t> max_steps;
    std::optional<std::string> out;
};
int cmd_race(const RaceCliOptions& opts, std::ostream& out, std::ostream& err);

// Machine-readable error record printed on stderr for non-zero exits.
std::string error_json(int code, const std::string& field, const std::string& message);

}  // namespace agd::commands

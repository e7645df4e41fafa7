#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "agd/core.hpp"
#include "agd/optim.hpp"
#include "agd/problem.hpp"
#include "agd/testfns.hpp"

namespace agd::diagnostics {

// Loss above this (or non-finite) marks a run as diverged.
inline constexpr double kDivergenceLoss = 1e12;

struct RunMeta {
    std::string optimizer;
    HyperParams hp;
    std::uint64_t seed = 0;
    std::string problem;
};

struct TrajectoryPoint {
    std::uint64_t t = 0;
    double loss = 0.0;  // loss at w_t, i.e. before step t
    double step_norm = 0.0;
    double truncation_fraction = 0.0;
    std::optional<ParamVector> params;    // w_t, on snapshot steps
    std::optional<StepDiagnostics> diag;  // full diagnostics, on snapshot steps
};

struct Trajectory {
    RunMeta meta;
    std::vector<TrajectoryPoint> points;
    ParamVector final_params;
    // First step count at which ||w - optimum|| <= RecordOptions::tol.
    std::optional<std::uint64_t> steps_to_tol;
    bool diverged = false;
    std::uint64_t diverged_step = 0;
};

struct RecordOptions {
    std::uint64_t steps = 1;
    std::uint64_t snapshot_every = 1;
    // Distance-to-optimum tolerance for steps_to_tol (problems with a known
    // optimum only). With stop_at_tol the run ends there.
    std::optional<double> tol;
    bool stop_at_tol = false;
};

/// Runs `kind` on `problem`, recording the loss and switch statistics at
/// every step and full diagnostics and parameters every `snapshot_every`
/// steps (and at step 1). A non-finite or exploding loss, or a non-finite
/// update, truncates the run and marks it diverged at that step.
Trajectory record_run(const Problem& problem, OptimizerKind kind, const HyperParams& hp,
                      const RecordOptions& opts, std::uint64_t seed = 0);

struct RaceEntry {
    std::string label;
    OptimizerKind kind = OptimizerKind::Agd;
    HyperParams hp;
};

struct RaceOutcome {
    std::string label;
    std::optional<std::uint64_t> steps_to_tol;  // nullopt: did not finish
    double final_distance = 0.0;
};

struct RaceResult {
    double tol = 0.0;
    std::uint64_t max_steps = 0;
    std::vector<RaceOutcome> outcomes;  // same order as the entries

    const RaceOutcome& at(const std::string& label) const;
};

// Number of steps until ||w_t - optimum||_2 <= tol, checked before each step,
// so a start already within tol scores 0. Entries run concurrently.
RaceResult race(const testfns::TestFunction& fn, const ParamVector& start,
                const std::vector<RaceEntry>& entries, double tol, std::uint64_t max_steps);

// Competitors of the trajectory race with the shared settings (lr 1e-3,
// betas (0.9, 0.999), delta = eps = 1e-8; SGD lr 1e-6, momentum 0.9).
std::vector<RaceEntry> standard_race_roster();

struct SwitchSnapshot {
    std::uint64_t t = 0;
    double truncation_fraction = 0.0;
    BhatHistogram histogram;
};

struct SwitchTimeline {
    std::vector<SwitchSnapshot> snapshots;
    std::optional<std::string> warning;
};

SwitchTimeline switch_timeline(const Trajectory& traj);

// Range of truncation fractions consistent with a histogram: bins entirely
// below delta count as truncated, the bin containing delta may go either way.
std::pair<double, double> truncation_bounds_from_histogram(const BhatHistogram& h, double delta);

testfns::GradDiffReport hessian_diag_vs_gradient_difference(const testfns::TestFunction& fn,
                                                            const Trajectory& traj);

// Trajectory CSV: t,loss,step_norm,truncation_fraction with 17 significant digits.
std::string trajectory_csv(const Trajectory& traj);
// Histogram sidecar JSON for the snapshot steps.
std::string histogram_json(const Trajectory& traj);

}  // namespace agd::diagnostics

#include "agd/diagnostics.hpp"

#include <cmath>
#include <future>
#include <limits>

#include "json.hpp"

#include "agd/io.hpp"

namespace agd::diagnostics {

namespace {

double distance(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return std::sqrt(s);
}

bool all_finite(std::span<const double> v) {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

}  // namespace

Trajectory record_run(const Problem& problem, OptimizerKind kind, const HyperParams& hp,
                      const RecordOptions& opts, std::uint64_t seed) {
    validate(hp);
    if (opts.steps == 0) throw ConfigError("steps", "must be >= 1");
    if (opts.snapshot_every == 0) throw ConfigError("snapshot_every", "must be >= 1");

    Trajectory traj;
    traj.meta = {std::string(optimizer_name(kind)), hp, seed, problem.name()};
    traj.points.reserve(opts.steps);
    const auto optimum = problem.optimum();
    const bool track_tol = opts.tol && optimum;

    ParamVector w = problem.initial_params();
    OptimizerState state = make_state(kind, w.size());

    auto within_tol = [&](std::uint64_t steps_taken) {
        if (!track_tol || traj.steps_to_tol) return traj.steps_to_tol.has_value();
        if (distance(w, *optimum) <= *opts.tol) traj.steps_to_tol = steps_taken;
        return traj.steps_to_tol.has_value();
    };

    for (std::uint64_t t = 1; t <= opts.steps; ++t) {
        if (within_tol(t - 1) && opts.stop_at_tol) break;
        const auto lg = problem.evaluate(w, t);
        if (!std::isfinite(lg.loss) || lg.loss > kDivergenceLoss || !all_finite(lg.grad)) {
            traj.diverged = true;
            traj.diverged_step = t;
            break;
        }
        const bool snapshot = t == 1 || t % opts.snapshot_every == 0;
        TrajectoryPoint pt;
        pt.t = t;
        pt.loss = lg.loss;
        if (snapshot) pt.params = w;
        try {
            StepDiagnostics diag = step_in_place(state, w, lg.grad, t, hp);
            pt.step_norm = diag.step_norm;
            pt.truncation_fraction = diag.truncation_fraction;
            if (snapshot) pt.diag = std::move(diag);
        } catch (const NumericError&) {
            traj.diverged = true;
            traj.diverged_step = t;
            break;
        }
        problem.project(w);
        traj.points.push_back(std::move(pt));
    }
    if (!traj.diverged) within_tol(traj.points.size());
    traj.final_params = w;
    return traj;
}

const RaceOutcome& RaceResult::at(const std::string& label) const {
    for (const auto& o : outcomes)
        if (o.label == label) return o;
    throw ConfigError("race", "no race entry labelled '" + label + "'");
}

namespace {

RaceOutcome run_entry(const testfns::TestFunction& fn, const ParamVector& start,
                      const RaceEntry& entry, double tol, std::uint64_t max_steps) {
    RaceOutcome out{entry.label, std::nullopt, 0.0};
    ParamVector w = start;
    OptimizerState state = make_state(entry.kind, w.size());
    for (std::uint64_t k = 0;; ++k) {
        const double d = distance(w, fn.optimum);
        out.final_distance = d;
        if (d <= tol) {
            out.steps_to_tol = k;
            break;
        }
        if (k == max_steps) break;
        const auto e = fn.eval(w);
        if (!all_finite(e.grad) || !std::isfinite(e.value)) break;
        try {
            step_in_place(state, w, e.grad, k + 1, entry.hp);
        } catch (const NumericError&) {
            out.final_distance = std::numeric_limits<double>::infinity();
            break;
        }
    }
    return out;
}

}  // namespace

RaceResult race(const testfns::TestFunction& fn, const ParamVector& start,
                const std::vector<RaceEntry>& entries, double tol, std::uint64_t max_steps) {
    check_same_length(start.size(), fn.dim, "race start");
    if (!(tol > 0.0)) throw ConfigError("tol", "must be positive");
    for (const auto& e : entries) validate(e.hp);
    std::vector<std::future<RaceOutcome>> futures;
    futures.reserve(entries.size());
    for (const auto& e : entries)
        futures.push_back(std::async(std::launch::async, run_entry, std::cref(fn), std::cref(start),
                                     std::cref(e), tol, max_steps));
    RaceResult result{tol, max_steps, {}};
    for (auto& f : futures) result.outcomes.push_back(f.get());
    return result;
}

std::vector<RaceEntry> standard_race_roster() {
    HyperParams adaptive;
    adaptive.alpha = 1e-3;
    adaptive.beta1 = 0.9;
    adaptive.beta2 = 0.999;
    adaptive.delta = 1e-8;
    HyperParams sgd = adaptive;
    sgd.alpha = 1e-6;
    sgd.beta1 = 0.9;
    return {
        {"agd", OptimizerKind::Agd, adaptive},
        {"adam", OptimizerKind::Adam, adaptive},
        {"adamw", OptimizerKind::AdamW, adaptive},
        {"adabelief", OptimizerKind::AdaBelief, adaptive},
        {"sgd", OptimizerKind::Sgd, sgd},
    };
}

SwitchTimeline switch_timeline(const Trajectory& traj) {
    SwitchTimeline out;
    for (const auto& p : traj.points)
        if (p.diag) out.snapshots.push_back({p.t, p.diag->truncation_fraction, p.diag->bhat_histogram});
    if (out.snapshots.empty()) out.warning = "trajectory has no diagnostic snapshots";
    return out;
}

std::pair<double, double> truncation_bounds_from_histogram(const BhatHistogram& h, double delta) {
    const auto total = static_cast<double>(h.total());
    if (total == 0.0) return {0.0, 0.0};
    double surely = 0.0;
    double maybe = 0.0;
    const int last = BhatHistogram::kBins + 1;
    for (int i = 0; i <= last; ++i) {
        const double lo = BhatHistogram::lower_edge(i);
        const double hi = i == last ? std::numeric_limits<double>::infinity()
                                    : BhatHistogram::lower_edge(i + 1);
        const auto c = static_cast<double>(h.counts[static_cast<std::size_t>(i)]);
        if (hi <= delta)
            surely += c;
        else if (lo < delta)
            maybe += c;
    }
    return {surely / total, (surely + maybe) / total};
}

testfns::GradDiffReport hessian_diag_vs_gradient_difference(const testfns::TestFunction& fn,
                                                            const Trajectory& traj) {
    std::vector<ParamVector> pts;
    for (const auto& p : traj.points)
        if (p.params) pts.push_back(*p.params);
    return testfns::hessian_diag_vs_gradient_difference(fn, pts);
}

std::string trajectory_csv(const Trajectory& traj) {
    std::string out = "t,loss,step_norm,truncation_fraction\n";
    for (const auto& p : traj.points) {
        out += std::to_string(p.t);
        out += ',' + io::format_double(p.loss);
        out += ',' + io::format_double(p.step_norm);
        out += ',' + io::format_double(p.truncation_fraction);
        out += '\n';
    }
    return out;
}

std::string histogram_json(const Trajectory& traj) {
    nlohmann::ordered_json j;
    std::vector<double> edges;
    for (int i = 0; i <= BhatHistogram::kBins + 1; ++i) edges.push_back(BhatHistogram::lower_edge(i));
    j["bin_lower_edges"] = edges;
    j["snapshots"] = nlohmann::ordered_json::array();
    for (const auto& s : switch_timeline(traj).snapshots) {
        nlohmann::ordered_json e;
        e["t"] = s.t;
        e["truncation_fraction"] = s.truncation_fraction;
        e["counts"] = s.histogram.counts;
        j["snapshots"].push_back(std::move(e));
    }
    return j.dump(2) + "\n";
}

}  // namespace agd::diagnostics

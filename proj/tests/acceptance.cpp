// Acceptance harness: one PASS/FAIL line per criterion, non-zero exit if any
// criterion fails. Tolerances and runtime budgets are fixed here.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "agd/commands.hpp"
#include "agd/config.hpp"
#include "agd/diagnostics.hpp"
#include "agd/io.hpp"
#include "agd/models.hpp"
#include "agd/optim.hpp"
#include "agd/rng.hpp"
#include "agd/testfns.hpp"
#include "agd/theory.hpp"
#include "test_util.hpp"

using namespace agd;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

struct Criterion {
    const char* id;
    const char* title;
    double budget_s;  // <= 0: no runtime bound
    std::function<Outcome()> check;
};

std::string fmt(const char* f, double a) {
    char buf[128];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

std::string steps_str(const std::optional<std::uint64_t>& s) { return s ? std::to_string(*s) : "dnf"; }

// ---------------------------------------------------------------------------

Outcome races() {
    Outcome o{true, ""};
    for (const char* name : {"quad_skew", "beale", "rosenbrock"}) {
        const auto fn = testfns::by_name(name);
        const auto r = diagnostics::race(fn, fn.default_start, diagnostics::standard_race_roster(), 1e-2, 100000);
        const auto& agd = r.at("agd");
        o.detail += std::string(name) + ":";
        for (const auto& x : r.outcomes) o.detail += " " + x.label + "=" + steps_str(x.steps_to_tol);
        o.detail += "; ";
        if (!agd.steps_to_tol) {
            o.pass = false;
            continue;
        }
        for (const auto& x : r.outcomes)
            if (x.steps_to_tol && *x.steps_to_tol < *agd.steps_to_tol) o.pass = false;
    }
    return o;
}

Outcome first_step() {
    Rng rng(2, 0);
    std::uint64_t worst = 0;
    for (int trial = 0; trial < 2000; ++trial) {
        HyperParams hp;
        hp.alpha = std::pow(10.0, rng.uniform(-5.0, 0.0));
        hp.beta1 = rng.uniform(0.0, 0.999);
        hp.beta2 = rng.uniform(0.0, 0.9999);
        hp.delta = std::pow(10.0, rng.uniform(-12.0, -1.0));
        const std::size_t n = 1 + rng.below(16);
        GradVector g(n);
        for (auto& x : g) {
            // |g| > delta by at least a factor of 2.
            const double mag = 2.0 * hp.delta * std::pow(10.0, rng.uniform(0.0, 12.0));
            x = rng.below(2) ? mag : -mag;
        }
        const auto r = optimizer_step(make_state(OptimizerKind::Agd, n), ParamVector(n, 0.0), g, 1, hp);
        for (std::size_t i = 0; i < n; ++i) {
            if (std::signbit(r.params[i]) == std::signbit(g[i])) return {false, "update has the gradient's sign"};
            worst = std::max(worst, testing::ulp_distance(std::abs(r.params[i]), hp.alpha));
        }
    }
    return {worst <= 4, "2000 random gradients, max |dw| - alpha = " + std::to_string(worst) + " ulp (tol 4)"};
}

Outcome auto_switch() {
    constexpr std::uint64_t kPinned = 2398;
    HyperParams hp;
    hp.beta2 = 0.999;
    hp.delta = 1e-2;
    auto st = make_state(OptimizerKind::Agd, 1);
    ParamVector w{0.0};
    int transitions = 0;
    std::uint64_t at = 0;
    double prev = 0.0;
    for (std::uint64_t t = 1; t <= 20000; ++t) {
        const auto d = step_in_place(st, w, std::vector<double>{1.0}, t, hp);
        if (d.truncation_fraction != prev) {
            ++transitions;
            at = t;
        }
        prev = d.truncation_fraction;
    }
    return {transitions == 1 && at == kPinned && prev == 1.0,
            std::to_string(transitions) + " transition(s), at t=" + std::to_string(at) + " (pinned " +
                std::to_string(kPinned) + "), 20000 steps"};
}

Outcome scale_invariance() {
    HyperParams hp;
    hp.alpha = 1e-2;
    double worst_per_step = 0.0;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        Rng rng(seed, 3);
        std::vector<GradVector> stream(1000, GradVector(4));
        for (auto& g : stream)
            for (auto& x : g) x = rng.normal();
        auto base_state = make_state(OptimizerKind::Agd, 4);
        ParamVector base_w{0.5, -1.0, 2.0, 0.1};
        std::vector<ParamVector> base_traj;
        for (std::uint64_t t = 1; t <= stream.size(); ++t) {
            const auto d = step_in_place(base_state, base_w, stream[t - 1], t, hp);
            if (d.truncation_fraction != 0.0) return {false, "base run left the adaptive branch"};
            base_traj.push_back(base_w);
        }
        for (double c : {10.0, 1000.0}) {
            auto st = make_state(OptimizerKind::Agd, 4);
            ParamVector w{0.5, -1.0, 2.0, 0.1};
            for (std::uint64_t t = 1; t <= stream.size(); ++t) {
                auto g = stream[t - 1];
                for (auto& x : g) x *= c;
                const auto d = step_in_place(st, w, g, t, hp);
                if (d.truncation_fraction != 0.0) return {false, "scaled run left the adaptive branch"};
                worst_per_step =
                    std::max(worst_per_step, testing::scaled_ulp_error(w, base_traj[t - 1]) / double(t));
            }
        }
    }
    return {worst_per_step <= 8.0,
            "5 streams x c in {10,1000} x 1000 steps, max deviation " + fmt("%.3g", worst_per_step) +
                " ulp/step (tol 8)"};
}

Outcome variance_identity() {
    const auto est = theory::variance_ratio_mc_grid({0.5, 0.9, 0.99}, {2, 10, 100}, 1000000, 2024);
    double worst = 0.0;
    bool below_one = true;
    for (const auto& e : est) {
        worst = std::max(worst, e.relative_error());
        below_one = below_one && e.analytic < 1.0;
    }
    for (double b : {0.5, 0.9, 0.99})
        for (std::uint64_t t = 2; t <= 100000; t = t < 100 ? t + 1 : t * 2)
            below_one = below_one && theory::analytic_variance_ratio(b, t) < 1.0;
    return {worst < 0.02 && below_one, "9 (beta1, t) pairs at 1e6 replicas, max relative error " +
                                           fmt("%.4f", worst) + " (tol 0.02); analytic ratio < 1: " +
                                           (below_one ? "yes" : "no")};
}

Outcome alpha_hat_decreasing() {
    struct Combo {
        Beta1ScheduleKind kind;
        double beta1;
    };
    const Combo combos[] = {{Beta1ScheduleKind::Constant, 0.9},  {Beta1ScheduleKind::Constant, 0.99},
                            {Beta1ScheduleKind::Constant, 0.5},  {Beta1ScheduleKind::OverSqrtT, 0.9},
                            {Beta1ScheduleKind::OverT, 0.9}};
    int checked = 0;
    for (const auto& c : combos) {
        for (double beta2 : {0.0, 0.9, 0.999, 0.9999}) {
            HyperParams hp;
            hp.beta1 = c.beta1;
            hp.beta1_schedule = c.kind;
            hp.beta2 = beta2;
            const auto a = theory::alpha_hat_series(1.0, hp, 100000);
            for (std::size_t i = 1; i < a.size(); ++i)
                if (!(a[i] < a[i - 1]))
                    return {false, "not strictly decreasing at t=" + std::to_string(i + 1) + ", beta2=" +
                                       fmt("%g", beta2)};
            ++checked;
        }
    }
    return {checked == 20, std::to_string(checked) + " combos strictly decreasing over t in [1, 1e5]"};
}

Outcome v_norm_bound() {
    HyperParams hp;
    double worst = 0.0;
    for (std::uint64_t k = 0; k < 1000; ++k)
        worst = std::max(worst, theory::second_moment_bound_check(theory::bounded_gradient_stream(4, 500, 5.0, k), hp, 5.0));
    return {worst < 1.0, "1000 runs, max ||sqrt v||^2 / bound = " + fmt("%.3g", worst) + " (must be < 1)"};
}

Outcome regret() {
    const auto exp = theory::make_regret_experiment(2, 10000, 2024);
    const auto r = theory::online_regret(exp, OptimizerKind::AgdAmsgrad, theory::regret_hyperparams());
    const double final = r.regret.back();
    return {r.slope <= 0.6 && final >= 0.0,
            "slope " + fmt("%.4f", r.slope) + " (tol 0.6), regret_T " + fmt("%.4g", final) + " (>= 0)"};
}

Outcome amsgrad() {
    HyperParams hp;
    Rng rng(9, 0);
    auto st = make_state(OptimizerKind::AgdAmsgrad, 8);
    ParamVector w(8, 0.0);
    for (std::uint64_t t = 1; t <= 10000; ++t) {
        GradVector g(8);
        for (auto& x : g) x = rng.normal() * std::pow(10.0, rng.uniform(-3.0, 2.0));
        const auto before = std::get<AgdState>(st).b;
        step_in_place(st, w, g, t, hp);
        const auto& after = std::get<AgdState>(st).b;
        for (std::size_t i = 0; i < 8; ++i)
            if (after[i] < before[i]) return {false, "b decreased at t=" + std::to_string(t)};
    }
    return {true, "b non-decreasing over 10000 steps, 8 coordinates"};
}

Outcome gradient_oracles() {
    constexpr double h = 1e-6;
    constexpr double tol = 1e-6;
    double worst_fn = 0.0;
    double worst_hess = 0.0;
    Rng rng(10, 0);
    for (const auto& name : testfns::names()) {
        const auto fn = testfns::by_name(name);
        for (int k = 0; k < 100; ++k) {
            std::vector<double> p{rng.uniform(-4.0, 4.0), rng.uniform(-4.0, 4.0)};
            const auto e = fn.eval(p);
            double gs = 1.0;
            double hs = 1.0;
            for (double g : e.grad) gs = std::max(gs, std::abs(g));
            for (double x : e.hess_diag) hs = std::max(hs, std::abs(x));
            for (std::size_t i = 0; i < 2; ++i) {
                auto hi = p;
                auto lo = p;
                hi[i] += h;
                lo[i] -= h;
                const auto ehi = fn.eval(hi);
                const auto elo = fn.eval(lo);
                worst_fn = std::max(worst_fn, std::abs((ehi.value - elo.value) / (2 * h) - e.grad[i]) / gs);
                worst_hess = std::max(worst_hess, std::abs((ehi.grad[i] - elo.grad[i]) / (2 * h) - e.hess_diag[i]) / hs);
            }
        }
    }
    double worst_mlp = 0.0;
    int points = 0;
    while (points < 100) {
        models::MlpSpec spec;
        spec.in_dim = 1 + rng.below(8);
        spec.hidden_dim = 1 + rng.below(8);
        spec.activation = rng.below(2) ? models::Activation::Tanh : models::Activation::ReLU;
        spec.loss = static_cast<models::Loss>(rng.below(3));
        spec.out_dim = spec.loss == models::Loss::Logistic ? 1 : 2 + rng.below(7);
        models::Dataset ds;
        ds.rows = 1 + rng.below(8);
        ds.cols = spec.in_dim;
        ds.target_cols = spec.loss == models::Loss::SquaredError ? spec.out_dim : 1;
        for (std::size_t i = 0; i < ds.rows * ds.cols; ++i) ds.inputs.push_back(rng.uniform(-2.0, 2.0));
        for (std::size_t i = 0; i < ds.rows; ++i) {
            if (spec.loss == models::Loss::SquaredError)
                for (std::size_t j = 0; j < spec.out_dim; ++j) ds.targets.push_back(rng.normal());
            else
                ds.targets.push_back(double(rng.below(spec.loss == models::Loss::Logistic ? 2 : spec.out_dim)));
        }
        auto p = models::mlp_init(spec, rng.next_u64());
        for (auto& x : p) x += 0.1 * rng.normal();
        std::vector<std::size_t> batch(ds.rows);
        for (std::size_t i = 0; i < ds.rows; ++i) batch[i] = i;
        if (spec.activation == models::Activation::ReLU) {
            // Skip points within reach of a ReLU kink.
            bool near_kink = false;
            const std::size_t b1 = spec.hidden_dim * spec.in_dim;
            for (std::size_t r = 0; r < ds.rows && !near_kink; ++r)
                for (std::size_t u = 0; u < spec.hidden_dim; ++u) {
                    double z = p[b1 + u];
                    for (std::size_t i = 0; i < spec.in_dim; ++i) z += p[u * spec.in_dim + i] * ds.input(r)[i];
                    if (std::abs(z) < 1e-3) near_kink = true;
                }
            if (near_kink) continue;
        }
        const auto r = models::mlp_loss_grad(spec, p, ds, batch);
        double scale = 1.0;
        for (double g : r.grad) scale = std::max(scale, std::abs(g));
        for (std::size_t i = 0; i < p.size(); ++i) {
            auto hi = p;
            auto lo = p;
            hi[i] += h;
            lo[i] -= h;
            const double fd = (models::mlp_loss_grad(spec, hi, ds, batch).loss -
                               models::mlp_loss_grad(spec, lo, ds, batch).loss) / (2 * h);
            worst_mlp = std::max(worst_mlp, std::abs(fd - r.grad[i]) / scale);
        }
        ++points;
    }
    const double worst = std::max({worst_fn, worst_hess, worst_mlp});
    return {worst <= tol, "max relative error: gradients " + fmt("%.2g", worst_fn) + ", Hessian diagonals " +
                              fmt("%.2g", worst_hess) + ", backprop " + fmt("%.2g", worst_mlp) + " (tol 1e-6)"};
}

Outcome delta_robustness() {
    constexpr double kLossThreshold = 0.35;
    const models::MlpSpec spec{2, 16, 2, models::Activation::Tanh, models::Loss::SoftmaxCrossEntropy};
    const MlpProblem problem(spec, models::gen_two_moons(1000, 0.1, 7), 32, 7);
    double lo = 1.0;
    double hi = 0.0;
    bool converged = true;
    std::string detail;
    for (double delta : {1e-8, 1e-6, 1e-4, 1e-2}) {
        HyperParams hp;
        hp.alpha = 1e-2;
        hp.delta = delta;
        diagnostics::RecordOptions ro;
        ro.steps = 3 * problem.batches_per_epoch();
        ro.snapshot_every = 50;
        const auto tr = diagnostics::record_run(problem, OptimizerKind::Agd, hp, ro, 7);
        const double acc = problem.accuracy(tr.final_params);
        const double loss = problem.full_loss(tr.final_params);
        converged = converged && !tr.diverged && loss <= kLossThreshold;
        lo = std::min(lo, acc);
        hi = std::max(hi, acc);
        detail += fmt("d=%g:", delta) + fmt(" acc %.3f", acc) + fmt(" loss %.4f; ", loss);
    }
    const double spread_pp = 100.0 * (hi - lo);
    return {converged && spread_pp <= 5.0,
            detail + "spread " + fmt("%.2f", spread_pp) + " pp (tol 5), loss threshold 0.35"};
}

Outcome determinism() {
    testing::TempDir dir("acceptance");
    int configs = 0;
    for (const auto& entry : fs::directory_iterator(AGD_SOURCE_DIR "/configs")) {
        if (entry.path().extension() != ".json" || entry.path().filename().string().rfind("race", 0) == 0)
            continue;
        const auto cfg = config::load_config(entry.path().string());
        const auto a = dir.path() / (entry.path().stem().string() + "_a");
        const auto b = dir.path() / (entry.path().stem().string() + "_b");
        commands::execute(cfg, a);
        commands::execute(cfg, b);
        if (io::read_file(a / "trajectory.csv") != io::read_file(b / "trajectory.csv"))
            return {false, entry.path().filename().string() + " produced different trajectories"};
        ++configs;
    }
    return {configs >= 4, std::to_string(configs) + " committed configs, byte-identical trajectory CSVs"};
}

}  // namespace

int main() {
    const std::vector<Criterion> criteria = {
        {"AC1", "trajectory races: AGD first to tolerance", 5.0, races},
        {"AC2", "first-step identity", 1.0, first_step},
        {"AC3", "constant-gradient auto-switch", 1.0, auto_switch},
        {"AC4", "adaptive-branch scale invariance", 1.0, scale_invariance},
        {"AC5", "variance identity", 30.0, variance_identity},
        {"AC6", "effective step size strictly decreasing", 1.0, alpha_hat_decreasing},
        {"AC7", "second-moment norm bound", 10.0, v_norm_bound},
        {"AC8", "regret order", 10.0, regret},
        {"AC9", "AMSGrad monotonicity", 1.0, amsgrad},
        {"AC10", "gradient oracles", 10.0, gradient_oracles},
        {"AC11", "delta robustness on two moons", 60.0, delta_robustness},
        {"AC12", "determinism", 0.0, determinism},
    };
    int failed = 0;
    for (const auto& c : criteria) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.check();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const bool in_budget = c.budget_s <= 0.0 || secs < c.budget_s;
        const bool pass = o.pass && in_budget;
        if (!pass) ++failed;
        std::string budget = c.budget_s > 0.0 ? fmt(" < %gs", c.budget_s) : "";
        std::printf("[%s] %s %s -- %s [%.3fs%s]\n", pass ? "PASS" : "FAIL", c.id, c.title, o.detail.c_str(), secs,
                    budget.c_str());
        std::fflush(stdout);
    }
    std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}

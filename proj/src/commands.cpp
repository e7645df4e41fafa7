#include "agd/commands.hpp"

#include <atomic>
#include <chrono>
#include <cstdio>
#include <ostream>
#include <thread>

#include "agd/diagnostics.hpp"
#include "agd/io.hpp"
#include "agd/models.hpp"
#include "agd/problem.hpp"
#include "agd/testfns.hpp"
#include "agd/theory.hpp"

namespace agd::commands {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

constexpr double kDefaultTol = 1e-2;

std::unique_ptr<Problem> build_problem(const config::ExperimentConfig& c) {
    switch (c.problem.kind) {
    case config::ProblemKind::TestFn:
        return std::make_unique<TestFnProblem>(testfns::by_name(c.problem.name), c.problem.start);
    case config::ProblemKind::Mlp: {
        auto data = models::gen_two_moons(c.problem.dataset.n, c.problem.dataset.noise, c.seed);
        return std::make_unique<MlpProblem>(c.problem.mlp, std::move(data), c.problem.batch_size, c.seed);
    }
    case config::ProblemKind::Regret:
        return std::make_unique<theory::RegretProblem>(
            theory::make_regret_experiment(c.problem.dim, c.problem.horizon, c.seed));
    }
    throw ConfigError("problem.kind", "unhandled problem kind");
}

std::string dump(const ordered_json& j) { return j.dump(2) + "\n"; }

int report_error(std::ostream& err, int code, const std::string& field, const std::string& msg) {
    err << error_json(code, field, msg) << '\n';
    return code;
}

std::string format_steps(const std::optional<std::uint64_t>& s) {
    return s ? std::to_string(*s) : std::string("dnf");
}

}  // namespace

std::string error_json(int code, const std::string& field, const std::string& message) {
    ordered_json j;
    j["status"] = "error";
    j["exit_code"] = code;
    j["field"] = field;
    j["message"] = message;
    return j.dump();
}

RunOutcome execute(const config::ExperimentConfig& cfg, const fs::path& out_dir) {
    config::validate(cfg);
    const auto started = std::chrono::steady_clock::now();
    const auto problem = build_problem(cfg);

    diagnostics::RecordOptions ro;
    ro.steps = config::effective_steps(cfg);
    ro.snapshot_every = config::effective_snapshot_every(cfg);
    if (cfg.problem.kind == config::ProblemKind::TestFn) ro.tol = cfg.tol.value_or(kDefaultTol);
    const auto traj = diagnostics::record_run(*problem, cfg.optimizer, cfg.hp, ro, cfg.seed);

    RunOutcome outcome;
    ordered_json& s = outcome.summary;
    s["optimizer"] = std::string(optimizer_name(cfg.optimizer));
    s["problem"] = problem->name();
    s["seed"] = cfg.seed;
    s["steps_requested"] = ro.steps;
    s["steps_run"] = traj.points.size();
    if (traj.diverged) {
        outcome.status = "diverged";
        s["diverged_step"] = traj.diverged_step;
    } else if (cfg.problem.kind == config::ProblemKind::TestFn) {
        outcome.status = traj.steps_to_tol ? "converged" : "not_converged";
    } else {
        outcome.status = "completed";
    }
    s["status"] = outcome.status;
    s["final_loss"] = traj.points.empty() ? json(nullptr) : json(traj.points.back().loss);

    switch (cfg.problem.kind) {
    case config::ProblemKind::TestFn: {
        const auto* tp = static_cast<const TestFnProblem*>(problem.get());
        s["tol"] = *ro.tol;
        s["steps_to_tol"] = traj.steps_to_tol ? json(*traj.steps_to_tol) : json(nullptr);
        if (!traj.diverged) s["final_value"] = tp->function().eval(traj.final_params).value;
        break;
    }
    case config::ProblemKind::Mlp: {
        const auto* mp = static_cast<const MlpProblem*>(problem.get());
        if (!traj.diverged) {
            s["final_full_loss"] = mp->full_loss(traj.final_params);
            s["final_accuracy"] = mp->accuracy(traj.final_params);
        }
        break;
    }
    case config::ProblemKind::Regret: {
        const auto* rp = static_cast<const theory::RegretProblem*>(problem.get());
        if (!traj.diverged) {
            const auto r = theory::online_regret(rp->experiment(), cfg.optimizer, cfg.hp);
            s["regret_final"] = r.regret.back();
            s["regret_loglog_slope"] = r.slope;
        }
        break;
    }
    }
    s["final_params"] = traj.final_params;
    s["wall_time_s"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();

    io::write_file_atomic(out_dir / "trajectory.csv", diagnostics::trajectory_csv(traj));
    io::write_file_atomic(out_dir / "histograms.json", diagnostics::histogram_json(traj));
    io::write_file_atomic(out_dir / "config.json", dump(config::to_json(cfg)));
    io::write_file_atomic(out_dir / "summary.json", dump(s));
    return outcome;
}

namespace {

config::ExperimentConfig load_with_overrides(const RunOptions& opts) {
    auto cfg = config::load_config(opts.config_path);
    if (opts.out) cfg.output = *opts.out;
    if (opts.seed) cfg.seed = *opts.seed;
    if (opts.snapshot_every) {
        if (*opts.snapshot_every == 0) throw ConfigError("snapshot_every", "must be >= 1");
        cfg.snapshot_every = *opts.snapshot_every;
    }
    config::validate(cfg);
    return cfg;
}

}  // namespace

int cmd_run(const RunOptions& opts, std::ostream& out, std::ostream& err) {
    try {
        const auto cfg = load_with_overrides(opts);
        const auto outcome = execute(cfg, cfg.output);
        out << outcome.summary.dump() << '\n';
        return kExitOk;
    } catch (const ConfigError& e) {
        return report_error(err, kExitConfig, e.field(), e.what());
    } catch (const std::exception& e) {
        return report_error(err, kExitRuntime, "", e.what());
    }
}

std::uint64_t sweep_seed(std::uint64_t base, std::size_t index) { return base + index; }

json parse_sweep_value(const std::string& text) {
    try {
        std::size_t used = 0;
        const long long i = std::stoll(text, &used);
        if (used == text.size() && i >= 0) return json(static_cast<std::uint64_t>(i));
        if (used == text.size()) return json(i);
    } catch (const std::exception&) {
    }
    try {
        std::size_t used = 0;
        const double d = std::stod(text, &used);
        if (used == text.size()) return json(d);
    } catch (const std::exception&) {
    }
    if (text == "true") return json(true);
    if (text == "false") return json(false);
    return json(text);
}

int cmd_sweep(const SweepOptions& opts, std::ostream& out, std::ostream& err) {
    std::vector<config::ExperimentConfig> points;
    try {
        if (opts.values.empty()) throw ConfigError("values", "sweep needs at least one value");
        if (opts.param.empty()) throw ConfigError("param", "missing parameter path");
        const auto base = load_with_overrides(opts.run);
        for (std::size_t i = 0; i < opts.values.size(); ++i) {
            auto c = config::with_override(base, opts.param, parse_sweep_value(opts.values[i]));
            if (!opts.shared_seed && opts.param != "seed") c.seed = sweep_seed(base.seed, i);
            c.output = (fs::path(base.output) / ("point_" + std::to_string(i))).string();
            points.push_back(std::move(c));
        }
    } catch (const ConfigError& e) {
        return report_error(err, kExitConfig, e.field(), e.what());
    } catch (const std::exception& e) {
        return report_error(err, kExitRuntime, "", e.what());
    }

    struct Row {
        std::string status;
        ordered_json summary;
        std::string error;
    };
    std::vector<Row> rows(points.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < points.size(); i = next++) {
            try {
                auto o = execute(points[i], points[i].output);
                rows[i] = {o.status, std::move(o.summary), ""};
            } catch (const std::exception& e) {
                rows[i] = {"error", {}, e.what()};
            }
        }
    };
    const unsigned jobs = std::max(1u, std::min<unsigned>(opts.jobs, static_cast<unsigned>(points.size())));
    {
        std::vector<std::jthread> pool;
        for (unsigned k = 0; k < jobs; ++k) pool.emplace_back(worker);
    }

    auto field = [](const ordered_json& s, const char* key) -> std::string {
        if (!s.is_object() || !s.contains(key) || s[key].is_null()) return "";
        const auto& v = s[key];
        if (v.is_number_float()) return io::format_double(v.get<double>());
        return v.dump();
    };
    std::string table = "index,value,seed,status,final_loss,steps_to_tol,final_accuracy\n";
    bool any_error = false;
    for (std::size_t i = 0; i < points.size(); ++i) {
        const json v = parse_sweep_value(opts.values[i]);
        const std::string value =
            v.is_number_float() ? io::format_double(v.get<double>()) : (v.is_string() ? v.get<std::string>() : v.dump());
        table += std::to_string(i) + "," + value + "," + std::to_string(points[i].seed) + "," + rows[i].status +
                 "," + field(rows[i].summary, "final_loss") + "," + field(rows[i].summary, "steps_to_tol") +
                 "," + field(rows[i].summary, "final_accuracy") + "\n";
        if (!rows[i].error.empty()) {
            any_error = true;
            err << error_json(kExitRuntime, "point_" + std::to_string(i), rows[i].error) << '\n';
        }
    }
    const fs::path base_out = fs::path(points.front().output).parent_path();
    try {
        io::write_file_atomic(base_out / "sweep.csv", table);
    } catch (const std::exception& e) {
        return report_error(err, kExitRuntime, "", e.what());
    }
    out << table;
    return any_error ? kExitRuntime : kExitOk;
}

int cmd_verify(const VerifyCliOptions& opts, std::ostream& out, std::ostream& err) {
    theory::VerifyOptions vo;
    if (opts.mc_samples) vo.mc_samples = *opts.mc_samples;
    if (opts.seed) vo.seed = *opts.seed;
    if (opts.beta1) vo.hp.beta1 = *opts.beta1;
    if (opts.beta2) vo.hp.beta2 = *opts.beta2;
    if (opts.delta) vo.hp.delta = *opts.delta;
    std::vector<theory::ClaimReport> reports;
    try {
        reports = theory::run_verify(vo);
    } catch (const ConfigError& e) {
        return report_error(err, kExitConfig, e.field(), e.what());
    } catch (const std::exception& e) {
        return report_error(err, kExitRuntime, "", e.what());
    }

    ordered_json report = ordered_json::array();
    std::vector<std::string> failed;
    char line[256];
    std::snprintf(line, sizeof line, "%-28s %-14s %-14s %s\n", "claim", "observed", "bound", "status");
    out << line;
    for (const auto& r : reports) {
        std::snprintf(line, sizeof line, "%-28s %-14.6g %-14.6g %s\n", r.claim.c_str(), r.observed, r.bound,
                      theory::to_string(r.status).c_str());
        out << line;
        report.push_back(r.to_json());
        if (r.status == theory::ClaimStatus::Fail) failed.push_back(r.claim);
    }
    if (opts.out) {
        try {
            io::write_file_atomic(fs::path(*opts.out) / "verify.json", report.dump(2) + "\n");
        } catch (const std::exception& e) {
            return report_error(err, kExitRuntime, "", e.what());
        }
    }
    if (!failed.empty()) {
        out << "failed claims:";
        for (const auto& f : failed) out << ' ' << f;
        out << '\n';
        return kExitVerifyFailed;
    }
    return kExitOk;
}

int cmd_race(const RaceCliOptions& opts, std::ostream& out, std::ostream& err) {
    try {
        std::string fn_name = opts.function.value_or("");
        std::optional<ParamVector> start;
        double tol = kDefaultTol;
        std::uint64_t max_steps = 100000;
        std::vector<diagnostics::RaceEntry> entries = diagnostics::standard_race_roster();
        if (opts.config_path) {
            json j;
            try {
                j = json::parse(io::read_file(*opts.config_path));
            } catch (const std::exception& e) {
                throw ConfigError("config", e.what());
            }
            if (!j.is_object()) throw ConfigError("config", "expected an object");
            for (auto it = j.begin(); it != j.end(); ++it) {
                const auto& k = it.key();
                if (k != "function" && k != "start" && k != "tol" && k != "max_steps" && k != "entries")
                    throw ConfigError(k, "unknown field");
            }
            if (j.contains("function")) fn_name = j["function"].get<std::string>();
            if (j.contains("start")) start = j["start"].get<ParamVector>();
            if (j.contains("tol")) tol = j["tol"].get<double>();
            if (j.contains("max_steps")) max_steps = j["max_steps"].get<std::uint64_t>();
            if (j.contains("entries")) {
                entries.clear();
                for (std::size_t i = 0; i < j["entries"].size(); ++i) {
                    const auto& e = j["entries"][i];
                    const std::string where = "entries[" + std::to_string(i) + "]";
                    if (!e.is_object() || !e.contains("optimizer"))
                        throw ConfigError(where, "expected {label, optimizer}");
                    for (auto it = e.begin(); it != e.end(); ++it)
                        if (it.key() != "label" && it.key() != "optimizer")
                            throw ConfigError(where + "." + it.key(), "unknown field");
                    diagnostics::RaceEntry entry;
                    entry.hp = config::parse_optimizer(e["optimizer"], entry.kind, where + ".optimizer");
                    entry.label = e.value("label", std::string(optimizer_name(entry.kind)));
                    entries.push_back(std::move(entry));
                }
            }
        }
        if (opts.tol) tol = *opts.tol;
        if (opts.max_steps) max_steps = *opts.max_steps;
        if (fn_name.empty()) throw ConfigError("function", "missing test function name");
        const auto fn = testfns::by_name(fn_name);
        const ParamVector s = start.value_or(fn.default_start);
        if (s.size() != fn.dim) throw ConfigError("start", "dimension does not match the function");
        const auto result = diagnostics::race(fn, s, entries, tol, max_steps);

        ordered_json j;
        j["function"] = fn_name;
        j["start"] = s;
        j["tol"] = tol;
        j["max_steps"] = max_steps;
        j["results"] = ordered_json::array();
        std::string table;
        for (const auto& o : result.outcomes) {
            j["results"].push_back({{"label", o.label},
                                    {"steps_to_tol", o.steps_to_tol ? json(*o.steps_to_tol) : json("did-not-finish")},
                                    {"final_distance", o.final_distance}});
            table += o.label + ' ' + format_steps(o.steps_to_tol) + ' ' + io::format_double(o.final_distance) + '\n';
        }
        if (opts.out) io::write_file_atomic(fs::path(*opts.out) / "race.json", j.dump(2) + "\n");
        out << table;
        return kExitOk;
    } catch (const ConfigError& e) {
        return report_error(err, kExitConfig, e.field(), e.what());
    } catch (const nlohmann::json::exception& e) {
        return report_error(err, kExitConfig, "config", e.what());
    } catch (const std::exception& e) {
        return report_error(err, kExitRuntime, "", e.what());
    }
}

}  // namespace agd::commands

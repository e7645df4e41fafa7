// agd: run, sweep, verify and race experiments from the command line.

#include <iostream>

#include "CLI11.hpp"

#include "agd/commands.hpp"

int main(int argc, char** argv) {
    using namespace agd::commands;
    CLI::App app{"AGD optimizer experiments"};
    app.require_subcommand(1);

    RunOptions run;
    auto* run_cmd = app.add_subcommand("run", "Run one experiment from a config file");
    run_cmd->add_option("--config", run.config_path, "Experiment config (JSON)")->required();
    run_cmd->add_option("--out", run.out, "Output directory (overrides config)");
    run_cmd->add_option("--seed", run.seed, "Seed (overrides config)");
    run_cmd->add_option("--snapshot-every", run.snapshot_every, "Diagnostics snapshot cadence");

    SweepOptions sweep;
    auto* sweep_cmd = app.add_subcommand("sweep", "Run one experiment per parameter value");
    sweep_cmd->add_option("--config", sweep.run.config_path, "Base experiment config (JSON)")->required();
    sweep_cmd->add_option("--out", sweep.run.out, "Output directory (overrides config)");
    sweep_cmd->add_option("--seed", sweep.run.seed, "Base seed (overrides config)");
    sweep_cmd->add_option("--snapshot-every", sweep.run.snapshot_every, "Diagnostics snapshot cadence");
    sweep_cmd->add_option("--param", sweep.param, "Dotted parameter path, e.g. optimizer.delta")->required();
    sweep_cmd->add_option("--values", sweep.values, "Values to sweep")->required()->delimiter(',');
    sweep_cmd->add_option("--jobs", sweep.jobs, "Concurrent sweep points")->check(CLI::PositiveNumber);
    sweep_cmd->add_flag("--shared-seed", sweep.shared_seed, "Use the base seed for every point");

    VerifyCliOptions verify;
    auto* verify_cmd = app.add_subcommand("verify", "Run the numeric theory checks");
    verify_cmd->add_option("--mc-samples", verify.mc_samples, "Monte-Carlo replicas for the variance check");
    verify_cmd->add_option("--seed", verify.seed, "Seed");
    verify_cmd->add_option("--beta1", verify.beta1, "beta1 for the AGD checks");
    verify_cmd->add_option("--beta2", verify.beta2, "beta2 for the AGD checks");
    verify_cmd->add_option("--delta", verify.delta, "delta for the AGD checks");
    verify_cmd->add_option("--out", verify.out, "Directory for verify.json");

    RaceCliOptions race;
    auto* race_cmd = app.add_subcommand("race", "Steps-to-tolerance race on a test function");
    race_cmd->add_option("--config", race.config_path, "Race config (JSON)");
    race_cmd->add_option("--function", race.function, "beale | rosenbrock | quad_skew");
    race_cmd->add_option("--tol", race.tol, "Distance-to-optimum tolerance");
    race_cmd->add_option("--max-steps", race.max_steps, "Step budget");
    race_cmd->add_option("--out", race.out, "Directory for race.json");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        std::cerr << error_json(kExitConfig, "arguments", e.what()) << '\n';
        return kExitConfig;
    }

    if (*run_cmd) return cmd_run(run, std::cout, std::cerr);
    if (*sweep_cmd) return cmd_sweep(sweep, std::cout, std::cerr);
    if (*verify_cmd) return cmd_verify(verify, std::cout, std::cerr);
    if (*race_cmd) return cmd_race(race, std::cout, std::cerr);
    return kExitConfig;
}

// weldplan: perception and planning pipeline for the welding cell.

#include <iostream>

#include "CLI11.hpp"

#include "commands.hpp"
#include "weldplan/common.hpp"

#ifndef WELDPLAN_DEFAULT_CONFIG
#define WELDPLAN_DEFAULT_CONFIG "configs/tky_workcell.yaml"
#endif

namespace cli = weldplan::cli;

int main(int argc, char** argv)
{
    CLI::App app{"Weld-cell perception and cost-driven motion planning"};
    app.require_subcommand(1);

    cli::GlobalOptions global;
    global.config = WELDPLAN_DEFAULT_CONFIG;
    std::uint64_t seed = 0;
    app.add_option("--config", global.config, "Workcell YAML")->capture_default_str();
    auto* seed_opt = app.add_option("--seed", seed, "Master seed (overrides the config)");
    app.add_option("--out", global.out, "Output directory")->capture_default_str();

    cli::PerceiveOptions perceive;
    auto* c_perceive = app.add_subcommand("perceive", "Write the CAD and synthetic sensor clouds");
    c_perceive->add_option("--offset-x", perceive.offset_x, "Workpiece offset [mm]");
    c_perceive->add_option("--offset-y", perceive.offset_y, "Workpiece offset [mm]");
    c_perceive->add_option("--offset-z", perceive.offset_z, "Workpiece offset [mm]");
    c_perceive->add_option("--offset-yaw", perceive.offset_yaw, "Workpiece rotation about z [deg]");

    cli::RegisterOptions reg;
    auto* c_register = app.add_subcommand("register", "Register a sensor cloud onto the CAD cloud");
    c_register->add_option("source", reg.source, "Sensor cloud (PLY)")->required()->check(CLI::ExistingFile);
    c_register->add_option("target", reg.target, "CAD cloud (PLY)")->required()->check(CLI::ExistingFile);
    c_register->add_option("--report", reg.report, "JSON report path (default <out>/registration.json)");

    cli::SweepOptions sweep;
    double max_offset = 0.0;
    auto* c_sweep = app.add_subcommand("sweep", "ICP convergence score against initial offset");
    c_sweep->add_option("--axis", sweep.axis, "x, y, z or yaw")->capture_default_str();
    auto* max_opt = c_sweep->add_option("--max-offset", max_offset, "Largest offset [mm, deg for yaw]");
    c_sweep->add_option("--steps", sweep.steps, "Offsets from 0 to the maximum")->capture_default_str();
    c_sweep->add_option("--workers", sweep.workers, "Threads, 0 = all cores")->capture_default_str();

    cli::PlanOptions plan;
    double time_budget = 0.0;
    auto* c_plan = app.add_subcommand("plan", "Plan to one goal and write the path");
    c_plan->add_option("--planner", plan.planner, "bitrrt, rrtconnect, rrtstar, prmstar or lbtrrt")
        ->capture_default_str();
    c_plan->add_option("--goal", plan.goal, "Goal name from the config")->capture_default_str();
    auto* budget_opt = c_plan->add_option("--time-budget", time_budget, "Seconds (overrides the config)");

    cli::BenchCliOptions bench;
    int trials = 0;
    unsigned workers = 0;
    auto* c_bench = app.add_subcommand("bench", "Repeated trials of every planner on every goal");
    auto* trials_opt = c_bench->add_option("--trials", trials, "Trials per planner and goal");
    c_bench->add_option("--planners", bench.planners, "Subset of planners")->delimiter(',');
    c_bench->add_option("--goals", bench.goals, "Subset of goals")->delimiter(',');
    auto* workers_opt = c_bench->add_option("--workers", workers, "Threads, 0 = all cores");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? cli::kExitOk : cli::kExitUsage;
    }
    if (*seed_opt)
        global.seed = seed;

    try {
        if (*c_perceive)
            return cli::cmd_perceive(global, perceive, std::cout);
        if (*c_register)
            return cli::cmd_register(global, reg, std::cout);
        if (*c_sweep) {
            if (*max_opt)
                sweep.max_offset = max_offset;
            return cli::cmd_sweep(global, sweep, std::cout);
        }
        if (*c_plan) {
            if (*budget_opt)
                plan.time_budget = time_budget;
            return cli::cmd_plan(global, plan, std::cout);
        }
        if (*c_bench) {
            if (*trials_opt)
                bench.trials = trials;
            if (*workers_opt)
                bench.workers = workers;
            return cli::cmd_bench(global, bench, std::cout);
        }
    } catch (const cli::UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return cli::kExitUsage;
    } catch (const weldplan::InvalidArgument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return cli::kExitUsage;
    } catch (const cli::RegistrationFailure& e) {
        std::cerr << "registration failed: " << e.what() << "\n";
        return cli::kExitRegistration;
    } catch (const std::exception& e) {
        // parse, config and I/O errors
        std::cerr << "error: " << e.what() << "\n";
        return cli::kExitIo;
    }
    return cli::kExitUsage;
}

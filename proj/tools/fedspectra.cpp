#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "fedspectra/cli.hpp"

namespace {

void add_common(CLI::App* cmd, fedspectra::cli::CommonArgs& args) {
    cmd->add_option("--config", args.config, "Config file (key = value lines)");
    cmd->add_option("--set", args.overrides, "Override a config key, key=value (repeatable)");
    cmd->add_option("--out", args.out, "Output directory");
    cmd->add_option("--seed", args.seed, "Root seed");
}

}  // namespace

int main(int argc, char** argv) {
    namespace cli = fedspectra::cli;
    CLI::App app{"Federated spectral aggregation and co-training experiments"};
    app.require_subcommand(1);

    cli::CommonArgs run_args, sweep_args, gen_args;
    std::string clients = "2,4,8";
    std::string methods = "config";
    std::string report_dir;

    auto* run = app.add_subcommand("run", "Run one federated experiment");
    add_common(run, run_args);
    auto* sweep = app.add_subcommand("sweep", "Run a grid over client counts and methods");
    add_common(sweep, sweep_args);
    sweep->add_option("--clients", clients, "Comma-separated client counts")->capture_default_str();
    sweep->add_option("--methods", methods, "Comma-separated methods: fedavg, cfa, cto, cfa_cto, config")
        ->capture_default_str();
    auto* report = app.add_subcommand("report", "Summarize a finished run");
    report->add_option("run_dir", report_dir, "Run output directory")->required();
    auto* gen = app.add_subcommand("gen-data", "Write the synthetic dataset to disk");
    add_common(gen, gen_args);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? cli::kExitOk : cli::kExitConfig;
    }

    if (run->parsed()) return cli::cmd_run(run_args, std::cout, std::cerr);
    if (sweep->parsed()) return cli::cmd_sweep(sweep_args, clients, methods, std::cout, std::cerr);
    if (report->parsed()) return cli::cmd_report(report_dir, std::cout, std::cerr);
    return cli::cmd_gen_data(gen_args, std::cout, std::cerr);
}

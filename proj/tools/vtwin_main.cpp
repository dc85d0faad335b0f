// Experiment harness entry point. Exit codes: 0 on success, 2 for
// configuration problems, 3 for data problems.

#include <cstdint>
#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "vtwin/vtwin.hpp"

namespace {

struct CommonArgs {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out_dir;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config_path, "configuration file (JSON)")
        ->check(CLI::ExistingFile);
    cmd->add_option("--seed", args.seed, "seed override");
    cmd->add_option("--out", args.out_dir, "output directory override");
}

vtwin::ExperimentConfig effective_config(const CommonArgs& args) {
    vtwin::ExperimentConfig cfg = args.config_path.empty()
                                      ? vtwin::parse_config(nlohmann::json::object())
                                      : vtwin::load_config(args.config_path);
    if (args.seed) cfg.seed = *args.seed;
    if (args.out_dir) cfg.out_dir = *args.out_dir;
    return cfg;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"RSU queue analysis, twin mirroring and attack detection experiments"};
    app.require_subcommand(1);

    CommonArgs args;
    CLI::App* queue = app.add_subcommand("queue-validate", "analytical vs simulated waiting");
    CLI::App* simulate = app.add_subcommand("simulate", "run one scenario, write trace/windows");
    CLI::App* resource = app.add_subcommand("resource", "serving-side vs twin-side cost");
    CLI::App* bench = app.add_subcommand("detect-bench", "detector comparison on the benchmarks");
    CLI::App* delay = app.add_subcommand("delay-delivery", "lifetime sweep with detector overhead");
    CLI::App* sweep = app.add_subcommand("twinning-sweep", "detection rate and memory vs gamma");
    for (CLI::App* cmd : {queue, simulate, resource, bench, delay, sweep}) add_common(cmd, args);

    CLI11_PARSE(app, argc, argv);

    try {
        const vtwin::ExperimentConfig cfg = effective_config(args);
        if (queue->parsed()) {
            std::cout << vtwin::run_queue_validate(cfg).string() << '\n';
        } else if (simulate->parsed()) {
            for (const auto& p : vtwin::run_simulate(cfg)) std::cout << p.string() << '\n';
        } else if (resource->parsed()) {
            std::cout << vtwin::run_resource(cfg).string() << '\n';
        } else if (bench->parsed()) {
            for (const auto& p : vtwin::run_detection_bench(cfg)) std::cout << p.string() << '\n';
        } else if (delay->parsed()) {
            std::cout << vtwin::run_delay_delivery(cfg).string() << '\n';
        } else if (sweep->parsed()) {
            std::cout << vtwin::run_twinning_sweep(cfg).string() << '\n';
        }
    } catch (const vtwin::config_error& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const vtwin::data_error& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}

#include <cstdint>
#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "olss/commands.hpp"
#include "olss/run_config.hpp"

namespace {

struct SharedArgs {
    std::string config_path;
    std::string out;
    bool force = false;
    std::optional<std::uint64_t> seed;
    std::optional<int> threads;
};

void add_shared(CLI::App* cmd, SharedArgs& args, bool out_required = true) {
    cmd->add_option("--config", args.config_path, "JSON config file (flags override file values)");
    auto* out = cmd->add_option("--out", args.out, "output directory");
    if (out_required) out->required();
    cmd->add_flag("--force", args.force, "overwrite existing outputs");
    cmd->add_option("--seed", args.seed, "override the base seed");
    cmd->add_option("--threads", args.threads, "worker threads");
}

olss::cli::RunConfig resolve_config(const SharedArgs& args) {
    olss::cli::RunConfig config =
        args.config_path.empty() ? olss::cli::default_config() : olss::cli::load_run_config(args.config_path);
    if (args.seed) config.base_seed = *args.seed;
    if (args.threads) {
        if (*args.threads < 1) throw olss::cli::ConfigError("--threads must be >= 1");
        config.threads = *args.threads;
    }
    return config;
}

std::filesystem::path resolve_out(const SharedArgs& args, const olss::cli::RunConfig& config) {
    if (!args.out.empty()) return args.out;
    if (!config.out.empty()) return config.out;
    throw olss::cli::ConfigError("no output directory given (use --out or the 'out' config key)");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"fast approximate diffusion schedulers: record teacher runs, fit step weights, benchmark"};
    app.require_subcommand(1);

    SharedArgs record_args, train_args, sample_args, compare_args, viz_args;
    std::string train_container, compare_container, viz_container;
    std::optional<int> train_steps;
    std::string train_mode;
    std::optional<double> train_epsilon;
    std::string sample_scheduler, viz_scheduler;
    std::uint64_t sample_seed = 0;

    CLI::App* record = app.add_subcommand("record", "run the full teacher process and store the trajectories");
    add_shared(record, record_args, false);

    CLI::App* train = app.add_subcommand("train", "fit a scheduler from a recorded container");
    add_shared(train, train_args, false);
    train->add_option("--container", train_container, "trajectory container directory")->required();
    train->add_option("--steps", train_steps, "number of sampling steps (n)");
    train->add_option("--mode", train_mode, "path selection: uniform | optimized")
        ->check(CLI::IsMember({"uniform", "optimized"}));
    train->add_option("--epsilon", train_epsilon, "outer search tolerance, relative to the uniform bound");

    CLI::App* sample = app.add_subcommand("sample", "run a trained scheduler from a seeded x_T");
    add_shared(sample, sample_args, false);
    sample->add_option("--scheduler", sample_scheduler, "scheduler JSON file")->required();

    CLI::App* compare = app.add_subcommand("compare", "benchmark schedulers on held-out seeds");
    add_shared(compare, compare_args, false);
    compare->add_option("--container", compare_container, "trajectory container directory")->required();

    CLI::App* viz = app.add_subcommand("viz", "export correlation heat-map and PCA path data");
    add_shared(viz, viz_args, false);
    viz->add_option("--container", viz_container, "trajectory container directory")->required();
    viz->add_option("--scheduler", viz_scheduler, "include a trained scheduler in the path plot");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    try {
        if (record->parsed()) {
            const auto config = resolve_config(record_args);
            olss::cli::cmd_record(config, resolve_out(record_args, config), record_args.force);
        } else if (train->parsed()) {
            auto config = resolve_config(train_args);
            if (train_steps) config.n = *train_steps;
            if (!train_mode.empty()) config.mode = train_mode;
            if (train_epsilon) config.epsilon = *train_epsilon;
            if (config.n < 1 || config.n > config.total_steps)
                throw olss::cli::ConfigError("--steps must be in [1, T]");
            if (train_epsilon && !(*train_epsilon > 0.0)) throw olss::cli::ConfigError("--epsilon must be positive");
            olss::cli::cmd_train(config, train_container, resolve_out(train_args, config), train_args.force);
        } else if (sample->parsed()) {
            if (!sample_args.seed) throw olss::cli::ConfigError("sample requires --seed");
            const auto config = resolve_config(sample_args);
            olss::cli::cmd_sample(sample_scheduler, *sample_args.seed, resolve_out(sample_args, config),
                                  sample_args.force);
        } else if (compare->parsed()) {
            const auto config = resolve_config(compare_args);
            olss::cli::cmd_compare(config, compare_container, resolve_out(compare_args, config), compare_args.force);
        } else if (viz->parsed()) {
            const auto config = resolve_config(viz_args);
            std::optional<std::filesystem::path> scheduler;
            if (!viz_scheduler.empty()) scheduler = viz_scheduler;
            olss::cli::cmd_viz(config, viz_container, scheduler, resolve_out(viz_args, config), viz_args.force);
        }
    } catch (const olss::cli::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}

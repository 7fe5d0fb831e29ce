#include "olss/commands.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>

#include "olss/csv.hpp"
#include "olss/evaluation.hpp"
#include "olss/olss.hpp"
#include "olss/trajectory.hpp"
#include "olss/vec.hpp"

namespace olss::cli {

namespace {

using Clock = std::chrono::steady_clock;

void prepare_out_dir(const std::filesystem::path& out, bool force) {
    if (std::filesystem::exists(out)) {
        if (!std::filesystem::is_directory(out))
            throw ConfigError("output path exists and is not a directory: " + out.string() + " (use --force to overwrite)");
        if (!force && !std::filesystem::is_empty(out))
            throw ConfigError("output directory is not empty: " + out.string() + " (use --force to overwrite)");
    }
    std::filesystem::create_directories(out);
}

void echo_config(const nlohmann::json& doc, const std::filesystem::path& out) {
    std::ofstream file(out / "config.json", std::ios::trunc);
    if (!file) throw std::runtime_error("cannot open for writing: " + (out / "config.json").string());
    file << doc.dump(2) << "\n";
}

diffusion::TrajectorySet load_matching_container(const RunConfig& config, const std::filesystem::path& container) {
    diffusion::TrajectorySet set = diffusion::load_trajectory_set(container);
    const nlohmann::json expected = diffusion::describe_schedule(build_schedule(config));
    if (set.schedule_descriptor != expected)
        throw std::runtime_error("container " + container.string() + " was recorded with a different schedule (" +
                                 set.schedule_descriptor.dump() + " vs config " + expected.dump() + ")");
    return set;
}

std::vector<std::uint64_t> evaluation_seeds(const RunConfig& config) {
    std::vector<std::uint64_t> seeds;
    seeds.reserve(static_cast<std::size_t>(config.eval_count));
    for (int i = 0; i < config.eval_count; ++i)
        seeds.push_back(config.effective_eval_seed_base() + static_cast<std::uint64_t>(i));
    return seeds;
}

}  // namespace

void cmd_record(const RunConfig& config, const std::filesystem::path& out, bool force) {
    prepare_out_dir(out, force);
    const diffusion::NoiseSchedule schedule = build_schedule(config);
    const auto predictor = build_predictor(config, schedule);

    const auto started = Clock::now();
    const diffusion::TrajectorySet set =
        diffusion::record_trajectory_set(schedule, *predictor, config.trajectory_count, config.base_seed, config.threads);
    const double seconds = std::chrono::duration<double>(Clock::now() - started).count();

    diffusion::save_trajectory_set(set, out);
    echo_config(effective_config(config), out);
    std::printf("recorded K=%d trajectories (d=%d, T=%d) in %.2f s -> %s\n", set.count(), set.d, set.total_steps,
                seconds, out.string().c_str());
}

void cmd_train(const RunConfig& config, const std::filesystem::path& container, const std::filesystem::path& out,
               bool force) {
    prepare_out_dir(out, force);
    const diffusion::TrajectorySet set = load_matching_container(config, container);

    const auto started = Clock::now();
    const TrainMode mode = (config.mode == "uniform") ? TrainMode::Uniform : TrainMode::Optimized;
    const OlssScheduler scheduler = train(set, config.n, mode, config.epsilon);
    const double seconds = std::chrono::duration<double>(Clock::now() - started).count();

    save_scheduler(scheduler, out / "scheduler.json");
    echo_config(effective_config(config), out);

    std::printf("trained %s scheduler (n=%d) in %.2f s\n", scheduler.mode.c_str(), config.n, seconds);
    std::printf("path:");
    for (int t : scheduler.path.steps) std::printf(" %d", t);
    std::printf(" -> 0\n");
    if (scheduler.d_star) std::printf("D_star: %.6e\n", *scheduler.d_star);
    std::printf("per-step residuals:");
    for (double r : scheduler.residuals) std::printf(" %.6e", r);
    std::printf("\n");
}

void cmd_sample(const std::filesystem::path& scheduler_file, std::uint64_t seed, const std::filesystem::path& out,
                bool force) {
    prepare_out_dir(out, force);
    const OlssScheduler scheduler = load_scheduler(scheduler_file);
    const diffusion::NoiseSchedule schedule = diffusion::schedule_from_descriptor(scheduler.schedule_descriptor);
    const auto predictor = diffusion::make_predictor(scheduler.predictor_descriptor, schedule);

    Rng rng(seed);
    std::vector<double> x_start = rng.gaussian_vector(static_cast<std::size_t>(scheduler.d));
    const samplers::SamplerRun run = sample(scheduler, *predictor, std::move(x_start));

    eval::CsvTable table;
    table.header = {"t"};
    for (int i = 0; i < scheduler.d; ++i) table.header.push_back("c" + std::to_string(i));
    for (std::size_t i = 0; i < run.visited.size(); ++i) {
        const int t = (i < run.visited.size() - 1) ? run.path.steps[i] : 0;
        std::vector<std::string> row{std::to_string(t)};
        for (double v : run.visited[i]) row.push_back(eval::format_double(v));
        table.rows.push_back(std::move(row));
    }
    eval::write_csv(out / "states.csv", table);

    echo_config({{"command", "sample"}, {"scheduler_file", scheduler_file.string()}, {"seed", seed}}, out);
    std::printf("sampled %d steps from seed %llu -> %s\n", run.model_calls,
                static_cast<unsigned long long>(seed), (out / "states.csv").string().c_str());
}

void cmd_compare(const RunConfig& config, const std::filesystem::path& container, const std::filesystem::path& out,
                 bool force) {
    prepare_out_dir(out, force);
    const diffusion::TrajectorySet set = load_matching_container(config, container);
    const diffusion::NoiseSchedule schedule = build_schedule(config);
    const auto predictor = diffusion::make_predictor(set.predictor_descriptor, schedule);

    const eval::ComparisonReport report =
        eval::compare_schedulers(schedule, *predictor, set, evaluation_seeds(config), config.n_values, config.epsilon);
    eval::write_csv(out / "comparison.csv", eval::comparison_to_csv(report));
    echo_config(effective_config(config), out);

    for (const auto& row : report.rows)
        std::printf("%-8s n=%-3d rmse=%.6e time=%.3e s calls=%d\n", row.scheduler.c_str(), row.n, row.mean_final_rmse,
                    row.seconds_per_sample, row.model_calls);
}

void cmd_viz(const RunConfig& config, const std::filesystem::path& container,
             const std::optional<std::filesystem::path>& scheduler_file, const std::filesystem::path& out,
             bool force) {
    prepare_out_dir(out, force);
    const diffusion::TrajectorySet set = load_matching_container(config, container);
    const diffusion::NoiseSchedule schedule = build_schedule(config);
    const auto predictor = diffusion::make_predictor(set.predictor_descriptor, schedule);
    const diffusion::Trajectory& teacher = set.trajectories.front();

    eval::correlation_heatmap_csv(teacher, config.stride, out / "correlation.csv");

    const samplers::StepPath path = samplers::uniform_path(schedule.total_steps, config.n);
    const samplers::SamplerRun ddim =
        samplers::run_sampler(samplers::SamplerKind::Ddim, schedule, *predictor, path, teacher.states.front());
    const samplers::SamplerRun pndm =
        samplers::run_sampler(samplers::SamplerKind::Pndm, schedule, *predictor, path, teacher.states.front());
    std::vector<std::pair<std::string, const samplers::SamplerRun*>> runs = {{"ddim", &ddim}, {"pndm", &pndm}};

    samplers::SamplerRun olss_run;
    if (scheduler_file) {
        const OlssScheduler scheduler = load_scheduler(*scheduler_file);
        if (scheduler.total_steps != set.total_steps || scheduler.d != set.d)
            throw std::runtime_error("scheduler " + scheduler_file->string() + " does not match the container");
        olss_run = sample(scheduler, *predictor, teacher.states.front());
        runs.emplace_back("olss", &olss_run);
    }
    eval::pca_paths_csv(teacher, runs, out / "pca_paths.csv");

    echo_config(effective_config(config), out);
    std::printf("wrote %s and %s\n", (out / "correlation.csv").string().c_str(),
                (out / "pca_paths.csv").string().c_str());
}

}  // namespace olss::cli

#include "olss/evaluation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <stdexcept>

#include "olss/rng.hpp"
#include "olss/vec.hpp"

namespace olss::eval {

namespace {

using Clock = std::chrono::steady_clock;

void check_same_origin(const samplers::SamplerRun& run, const diffusion::Trajectory& teacher, const char* what) {
    if (run.visited.empty() || run.visited.front().size() != teacher.states.front().size())
        throw std::invalid_argument(std::string(what) + ": dimension mismatch with teacher");
    if (run.visited.front() != teacher.states.front())
        throw std::invalid_argument(std::string(what) + ": run does not share the teacher's x_T (seed mismatch)");
}

}  // namespace

double final_state_rmse(const samplers::SamplerRun& run, const diffusion::Trajectory& teacher) {
    check_same_origin(run, teacher, "final_state_rmse");
    return rms_diff(run.visited.back(), teacher.states.back());
}

std::vector<double> per_step_rmse(const samplers::SamplerRun& run, const diffusion::Trajectory& teacher) {
    check_same_origin(run, teacher, "per_step_rmse");
    std::vector<double> out;
    out.reserve(run.visited.size() - 1);
    for (std::size_t i = 1; i < run.visited.size(); ++i) {
        const int t = (i < run.visited.size() - 1) ? run.path.steps[i] : 0;
        out.push_back(rms_diff(run.visited[i], teacher.state_at(t)));
    }
    return out;
}

ComparisonReport compare_schedulers(const diffusion::NoiseSchedule& schedule,
                                    const diffusion::NoisePredictor& predictor,
                                    const diffusion::TrajectorySet& teacher_set,
                                    const std::vector<std::uint64_t>& eval_seeds, const std::vector<int>& n_values,
                                    double epsilon_rel) {
    if (eval_seeds.empty()) throw std::invalid_argument("compare_schedulers: needs at least one evaluation seed");
    const std::size_t d = static_cast<std::size_t>(teacher_set.d);

    // One teacher reference per seed, shared across schedulers and step counts.
    std::map<std::uint64_t, diffusion::Trajectory> references;
    for (std::uint64_t seed : eval_seeds) {
        if (references.count(seed)) continue;
        Rng rng(seed);
        std::vector<double> x_start = rng.gaussian_vector(d);
        references.emplace(seed, diffusion::full_generate(schedule, predictor, std::move(x_start), rng));
    }

    ComparisonReport report;
    for (int n : n_values) {
        const OlssScheduler olss_uniform = train(teacher_set, n, TrainMode::Uniform);
        const OlssScheduler olss_optimized = train(teacher_set, n, TrainMode::Optimized, epsilon_rel);
        const samplers::StepPath path = samplers::uniform_path(schedule.total_steps, n);

        struct Entry {
            std::string name;
            std::function<samplers::SamplerRun(std::vector<double>)> run;
        };
        const std::vector<Entry> entries = {
            {"ddim", [&](std::vector<double> x) { return samplers::run_sampler(samplers::SamplerKind::Ddim, schedule, predictor, path, std::move(x)); }},
            {"pndm", [&](std::vector<double> x) { return samplers::run_sampler(samplers::SamplerKind::Pndm, schedule, predictor, path, std::move(x)); }},
            {"olss_p", [&](std::vector<double> x) { return sample(olss_uniform, predictor, std::move(x)); }},
            {"olss", [&](std::vector<double> x) { return sample(olss_optimized, predictor, std::move(x)); }},
        };

        for (const Entry& entry : entries) {
            ComparisonRow row;
            row.scheduler = entry.name;
            row.n = n;
            row.model_calls = n;
            row.per_step_mean_rmse.assign(static_cast<std::size_t>(n), 0.0);
            double total_seconds = 0.0;
            for (std::uint64_t seed : eval_seeds) {
                const diffusion::Trajectory& teacher = references.at(seed);
                std::vector<double> x_start = teacher.states.front();
                const auto started = Clock::now();
                const samplers::SamplerRun run = entry.run(std::move(x_start));
                total_seconds += std::chrono::duration<double>(Clock::now() - started).count();
                if (run.model_calls != n) throw std::runtime_error("compare_schedulers: unexpected model call count");
                row.mean_final_rmse += final_state_rmse(run, teacher);
                const std::vector<double> steps = per_step_rmse(run, teacher);
                for (std::size_t i = 0; i < steps.size(); ++i) row.per_step_mean_rmse[i] += steps[i];
            }
            const double count = static_cast<double>(eval_seeds.size());
            row.mean_final_rmse /= count;
            for (double& v : row.per_step_mean_rmse) v /= count;
            row.seconds_per_sample = total_seconds / count;
            report.rows.push_back(std::move(row));
        }
    }
    return report;
}

CsvTable comparison_to_csv(const ComparisonReport& report) {
    CsvTable table;
    table.header = {"scheduler", "n", "mean_final_rmse", "seconds_per_sample", "model_calls"};
    for (const auto& row : report.rows)
        table.rows.push_back({row.scheduler, std::to_string(row.n), format_double(row.mean_final_rmse),
                              format_double(row.seconds_per_sample), std::to_string(row.model_calls)});
    return table;
}

HeatmapVariables heatmap_variables(const diffusion::Trajectory& trajectory, int stride) {
    if (stride < 1) throw std::invalid_argument("heatmap_variables: stride must be >= 1");
    const int total = trajectory.total_steps();
    HeatmapVariables vars;
    for (int t = total; t > 0; t -= stride) {
        vars.names.push_back("x_" + std::to_string(t));
        vars.values.push_back(trajectory.state_at(t));
    }
    vars.names.push_back("x_0");
    vars.values.push_back(trajectory.state_at(0));
    int last_e = 0;
    for (int t = total; t >= 1; t -= stride) {
        vars.names.push_back("e_" + std::to_string(t));
        vars.values.push_back(trajectory.output_at(t));
        last_e = t;
    }
    if (last_e != 1) {
        vars.names.push_back("e_1");
        vars.values.push_back(trajectory.output_at(1));
    }
    return vars;
}

void correlation_heatmap_csv(const diffusion::Trajectory& trajectory, int stride,
                             const std::filesystem::path& out_path) {
    const HeatmapVariables vars = heatmap_variables(trajectory, stride);
    const linalg::Matrix corr = linalg::pearson_correlation_matrix(vars.values);
    CsvTable table;
    table.header = vars.names;
    for (std::size_t i = 0; i < corr.rows(); ++i) {
        std::vector<std::string> row;
        row.reserve(corr.cols());
        for (std::size_t j = 0; j < corr.cols(); ++j) row.push_back(format_double(corr(i, j)));
        table.rows.push_back(std::move(row));
    }
    write_csv(out_path, table);
}

CorrelationOrdering correlation_ordering(const diffusion::Trajectory& trajectory, int window) {
    const int total = trajectory.total_steps();
    window = std::min(window, total);
    if (window < 2) throw std::invalid_argument("correlation_ordering: needs at least 2 steps");

    std::vector<std::vector<double>> outputs;
    outputs.reserve(static_cast<std::size_t>(window));
    for (int t = 1; t <= window; ++t) outputs.push_back(trajectory.output_at(t));
    const linalg::Matrix corr = linalg::pearson_correlation_matrix(outputs);

    CorrelationOrdering result;
    double sum = 0.0;
    std::size_t pairs = 0;
    for (std::size_t i = 0; i < corr.rows(); ++i)
        for (std::size_t j = i + 1; j < corr.cols(); ++j) {
            sum += corr(i, j);
            ++pairs;
        }
    result.late_output_pairwise_mean = sum / static_cast<double>(pairs);

    const linalg::Matrix xe =
        linalg::pearson_correlation_matrix({trajectory.state_at(1), trajectory.output_at(1)});
    result.final_state_output_corr = xe(0, 1);
    return result;
}

void pca_paths_csv(const diffusion::Trajectory& teacher,
                   const std::vector<std::pair<std::string, const samplers::SamplerRun*>>& runs,
                   const std::filesystem::path& out_path) {
    for (const auto& [name, run] : runs) check_same_origin(*run, teacher, "pca_paths_csv");

    const linalg::PcaBasis basis = linalg::pca_fit(teacher.states);
    CsvTable table;
    table.header = {"series", "step", "pc1", "pc2"};
    const int total = teacher.total_steps();
    for (int t = total; t >= 0; --t) {
        const auto [p1, p2] = linalg::pca_project(basis, teacher.state_at(t));
        table.rows.push_back({"teacher", std::to_string(t), format_double(p1), format_double(p2)});
    }
    for (const auto& [name, run] : runs) {
        for (std::size_t i = 0; i < run->visited.size(); ++i) {
            const int t = (i < run->visited.size() - 1) ? run->path.steps[i] : 0;
            const auto [p1, p2] = linalg::pca_project(basis, run->visited[i]);
            table.rows.push_back({name, std::to_string(t), format_double(p1), format_double(p2)});
        }
    }
    write_csv(out_path, table);
}

std::vector<SweepRow> efficiency_sweep(const diffusion::NoiseSchedule& schedule,
                                       const diffusion::NoisePredictor& predictor,
                                       const std::function<OlssScheduler(int)>& factory,
                                       const std::vector<int>& n_values, int repeats,
                                       const std::vector<std::uint64_t>& seeds) {
    if (repeats < 1) throw std::invalid_argument("efficiency_sweep: repeats must be >= 1");
    if (seeds.empty()) throw std::invalid_argument("efficiency_sweep: needs at least one seed");

    std::map<std::uint64_t, diffusion::Trajectory> references;
    for (std::uint64_t seed : seeds) {
        if (references.count(seed)) continue;
        Rng rng(seed);
        std::vector<double> x_start = rng.gaussian_vector(static_cast<std::size_t>(predictor.dimension()));
        references.emplace(seed, diffusion::full_generate(schedule, predictor, std::move(x_start), rng));
    }

    std::vector<SweepRow> rows;
    for (int n : n_values) {
        const OlssScheduler scheduler = factory(n);
        SweepRow row;
        row.n = n;
        double rmse_sum = 0.0;
        for (std::uint64_t seed : seeds) {
            const diffusion::Trajectory& teacher = references.at(seed);
            rmse_sum += final_state_rmse(sample(scheduler, predictor, teacher.states.front()), teacher);
        }
        row.mean_rmse = rmse_sum / static_cast<double>(seeds.size());

        const auto started = Clock::now();
        for (int r = 0; r < repeats; ++r)
            for (std::uint64_t seed : seeds) sample(scheduler, predictor, references.at(seed).states.front());
        const double seconds = std::chrono::duration<double>(Clock::now() - started).count();
        row.seconds_per_sample = seconds / (static_cast<double>(repeats) * static_cast<double>(seeds.size()));
        rows.push_back(row);
    }
    return rows;
}

CsvTable sweep_to_csv(const std::vector<SweepRow>& rows) {
    CsvTable table;
    table.header = {"n", "rmse", "seconds_per_sample"};
    for (const auto& row : rows)
        table.rows.push_back({std::to_string(row.n), format_double(row.mean_rmse), format_double(row.seconds_per_sample)});
    return table;
}

}  // namespace olss::eval

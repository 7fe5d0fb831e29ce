#pragma once

#include <functional>
#include <string>
#include <vector>

#include "olss/csv.hpp"
#include "olss/linalg.hpp"
#include "olss/olss.hpp"
#include "olss/samplers.hpp"
#include "olss/trajectory.hpp"

namespace olss::eval {

/// Root-mean-square distance between the run's final state and the teacher's
/// x_0. The run must share the teacher's x_T (same seed).
double final_state_rmse(const samplers::SamplerRun& run, const diffusion::Trajectory& teacher);

/// RMS distance to the teacher at every visited step t(2)..t(n+1).
std::vector<double> per_step_rmse(const samplers::SamplerRun& run, const diffusion::Trajectory& teacher);

struct ComparisonRow {
    std::string scheduler;
    int n = 0;
    double mean_final_rmse = 0.0;
    std::vector<double> per_step_mean_rmse;
    double seconds_per_sample = 0.0;
    int model_calls = 0;
};

struct ComparisonReport {
    std::vector<ComparisonRow> rows;
};

/// Benchmarks DDIM, PNDM, OLSS-P and OLSS at each step count. The OLSS
/// variants are trained on `teacher_set`; evaluation runs start from x_T
/// drawn from `eval_seeds` and are scored against freshly generated teacher
/// trajectories for those seeds. Metric values are deterministic given the
/// seeds; only the timing column varies between runs.
ComparisonReport compare_schedulers(const diffusion::NoiseSchedule& schedule,
                                    const diffusion::NoisePredictor& predictor,
                                    const diffusion::TrajectorySet& teacher_set,
                                    const std::vector<std::uint64_t>& eval_seeds, const std::vector<int>& n_values,
                                    double epsilon_rel = 1e-4);

CsvTable comparison_to_csv(const ComparisonReport& report);

/// Ordered heat-map variables for one trajectory: states x_T, x_{T-stride},
/// ..., x_0 followed by outputs e_T, e_{T-stride}, ..., e_1 (the endpoints are
/// always included).
struct HeatmapVariables {
    std::vector<std::string> names;
    std::vector<std::vector<double>> values;
};

HeatmapVariables heatmap_variables(const diffusion::Trajectory& trajectory, int stride);

/// Pearson correlation matrix of the heat-map variables, as a CSV whose
/// header names each variable.
void correlation_heatmap_csv(const diffusion::Trajectory& trajectory, int stride,
                             const std::filesystem::path& out_path);

struct CorrelationOrdering {
    double late_output_pairwise_mean = 0.0;  // mean corr(e_s, e_t) over pairs in the last `window` steps
    double final_state_output_corr = 0.0;    // corr(x_1, e_1)
};

/// The redundancy ordering visible in the correlation structure: late model
/// outputs correlate with each other more strongly than the near-final state
/// correlates with the last output.
CorrelationOrdering correlation_ordering(const diffusion::Trajectory& trajectory, int window = 100);

/// Projects the teacher path and each run onto the teacher's top-2 PCA basis
/// and emits rows (series, step, pc1, pc2). All runs must share the teacher's
/// x_T.
void pca_paths_csv(const diffusion::Trajectory& teacher,
                   const std::vector<std::pair<std::string, const samplers::SamplerRun*>>& runs,
                   const std::filesystem::path& out_path);

struct SweepRow {
    int n = 0;
    double mean_rmse = 0.0;
    double seconds_per_sample = 0.0;
};

/// Steps-versus-quality/runtime trade-off: for each n, builds a scheduler via
/// `factory`, samples every seed `repeats` times and reports mean RMSE to the
/// teacher plus mean wall-clock per sample (timed around the sampling loop
/// only).
std::vector<SweepRow> efficiency_sweep(const diffusion::NoiseSchedule& schedule,
                                       const diffusion::NoisePredictor& predictor,
                                       const std::function<OlssScheduler(int)>& factory,
                                       const std::vector<int>& n_values, int repeats,
                                       const std::vector<std::uint64_t>& seeds);

CsvTable sweep_to_csv(const std::vector<SweepRow>& rows);

}  // namespace olss::eval

#pragma once

#include <atomic>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "olss/linalg.hpp"
#include "olss/samplers.hpp"
#include "olss/trajectory.hpp"

namespace olss {

/// Learned skip-estimation coefficients: row i (1-based) holds the i+1
/// weights combining x_T and e_{t(1)}..e_{t(i)} into the next state.
struct WeightMatrix {
    std::vector<std::vector<double>> rows;

    int count() const { return static_cast<int>(rows.size()); }
    void validate() const;

    bool operator==(const WeightMatrix&) const = default;
};

/// The deployable training artifact: step path, weights and provenance.
struct OlssScheduler {
    samplers::StepPath path;
    WeightMatrix weights;
    std::optional<double> d_star;    // achieved error bound; absent for uniform-path training
    std::vector<double> residuals;   // per-step training residual
    std::string mode;                // "uniform" | "optimized"
    int trajectory_count = 0;        // K
    int d = 0;
    int total_steps = 0;             // T
    nlohmann::json schedule_descriptor;
    nlohmann::json predictor_descriptor;
};

/// Stacked least-squares system for predicting the teacher state at `target`
/// from the basis {x_T, e_{t(1)}, ..., e_{t(i)}}, with the weights shared
/// across all K trajectories: A is (K*d) x (i+1), b stacks x_target.
std::pair<linalg::Matrix, std::vector<double>> stack_design(const diffusion::TrajectorySet& set,
                                                            std::span<const int> prefix, int target);

struct StepWeights {
    std::vector<double> weights;
    double residual = 0.0;  // ||A w - b||_2 / sqrt(K*d), RMS per element
    bool regularized = false;
};

StepWeights solve_step_weights(const diffusion::TrajectorySet& set, std::span<const int> prefix, int target);

/// Residual of a caller-supplied coefficient vector on the same stacked
/// system (normalized like solve_step_weights). Used to compare the trained
/// weights against fixed-rule coefficient vectors.
double coefficient_residual(const diffusion::TrajectorySet& set, std::span<const int> prefix, int target,
                            std::span<const double> weights);

/// Coefficients of the DDIM rule unrolled along `prefix` down to `target`,
/// expressed over the basis {x_T, e_{t(1)}, ..., e_{t(i)}}.
std::vector<double> ddim_coefficient_vector(const diffusion::NoiseSchedule& schedule, std::span<const int> prefix,
                                            int target);

struct NaiveSkipEstimate {
    std::vector<std::vector<double>> estimates;  // final x estimate per trajectory
    double residual = 0.0;                       // RMS per element vs the teacher states
};

/// Cascaded skip estimation: walks every intermediate step from t(i) down to
/// `target`, replacing each missing model output by its least-squares
/// projection onto span{x_T, e_{t(1)}, ..., e_{t(i)}} (projection weights fit
/// on the training stack) and applying the per-step update.
NaiveSkipEstimate naive_skip_estimate(const diffusion::TrajectorySet& set, const diffusion::NoiseSchedule& schedule,
                                      std::span<const int> prefix, int target);

/// Evaluation contract for the path search: given a prefix and a candidate
/// next step, the normalized residual of predicting the candidate's teacher
/// state from the prefix basis.
class ResidualFn {
public:
    virtual ~ResidualFn() = default;
    virtual double operator()(std::span<const int> prefix, int target) const = 0;
    virtual int total_steps() const = 0;
};

/// Memoized residual over a recorded trajectory set; solve counting is used
/// by the efficiency checks. Safe for concurrent queries.
class TrainingResidual : public ResidualFn {
public:
    explicit TrainingResidual(const diffusion::TrajectorySet& set);

    double operator()(std::span<const int> prefix, int target) const override;
    int total_steps() const override { return set_.total_steps; }

    std::size_t solve_count() const { return solves_.load(); }

private:
    const diffusion::TrajectorySet& set_;
    mutable std::map<std::vector<int>, double> cache_;
    mutable std::mutex mutex_;
    mutable std::atomic<std::size_t> solves_{0};
};

/// Minimal t(i+1) in [0, t(i)-1] whose residual stays within `bound`, found
/// by binary search under the skip-monotonicity assumption and re-verified
/// before being returned. Empty when even the consecutive step violates the
/// bound (or no candidate range exists).
std::optional<int> find_next_step(const ResidualFn& residual, std::span<const int> prefix, double bound);

enum class PathSearchStatus {
    Found,
    BoundTooSmall,  // a step had no feasible candidate, or t(n+1) > 0
    BoundTooLarge,  // the greedy walk reached 0 before spending all n steps
};

struct PathSearchResult {
    PathSearchStatus status = PathSearchStatus::BoundTooSmall;
    samplers::StepPath path;  // valid only when status == Found

    bool found() const { return status == PathSearchStatus::Found; }
};

/// Greedy path construction under error bound `bound`: t(1) = T, each
/// following step from find_next_step, requiring exactly n steps with
/// t(n+1) = 0.
PathSearchResult find_path(const ResidualFn& residual, int n, double bound);

struct OptimizedPath {
    samplers::StepPath path;
    double d_star = 0.0;               // max per-step residual of the returned path
    std::vector<double> residuals;     // per-step residuals of the returned path
    double bound_hi = 0.0;             // initial upper bound (uniform-path max residual)
};

/// Outer binary search for the smallest feasible error bound, bracketed by
/// the uniform path's max residual (the uniform path itself is the fallback
/// when the greedy search fails at the upper end, so the result never loses
/// to uniform spacing). epsilon_rel is relative to the initial upper bound.
OptimizedPath optimize_path(const ResidualFn& residual, int n, double epsilon_rel);

enum class TrainMode { Uniform, Optimized };

/// Fits the full scheduler: selects the path, then solves the stacked
/// least-squares weights for every step (terminal target x_0).
OlssScheduler train(const diffusion::TrajectorySet& set, int n, TrainMode mode, double epsilon_rel = 1e-4);

/// Runs a trained scheduler: one predictor call per step, next state formed
/// from the stored weight rows.
samplers::SamplerRun sample(const OlssScheduler& scheduler, const diffusion::NoisePredictor& predictor,
                            std::vector<double> x_start);

void save_scheduler(const OlssScheduler& scheduler, const std::filesystem::path& path);
OlssScheduler load_scheduler(const std::filesystem::path& path);

}  // namespace olss

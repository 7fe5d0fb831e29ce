#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include <json.hpp>

#include "olss/predictor.hpp"
#include "olss/rng.hpp"
#include "olss/schedule.hpp"

namespace olss::diffusion {

struct LatentState {
    int t = 0;
    std::vector<double> x;
};

struct ModelOutput {
    int t = 0;
    std::vector<double> e;
};

/// One full teacher run. states holds x_T..x_0 (descending t), outputs holds
/// e_T..e_1.
struct Trajectory {
    int d = 0;
    std::uint64_t seed = 0;
    std::vector<std::vector<double>> states;
    std::vector<std::vector<double>> outputs;

    int total_steps() const { return static_cast<int>(states.size()) - 1; }
    const std::vector<double>& state_at(int t) const { return states[static_cast<std::size_t>(total_steps() - t)]; }
    const std::vector<double>& output_at(int t) const { return outputs[static_cast<std::size_t>(total_steps() - t)]; }

    bool operator==(const Trajectory&) const = default;
};

struct TrajectorySet {
    int total_steps = 0;  // T
    int d = 0;
    std::uint64_t base_seed = 0;
    nlohmann::json schedule_descriptor;
    nlohmann::json predictor_descriptor;
    std::vector<Trajectory> trajectories;

    int count() const { return static_cast<int>(trajectories.size()); }
};

nlohmann::json describe_schedule(const NoiseSchedule& schedule);
NoiseSchedule schedule_from_descriptor(const nlohmann::json& descriptor);

/// Runs the complete T-step generation process from x_T, recording every
/// state and model output. Noise is drawn from `rng` only at steps where
/// sigma > 0.
Trajectory full_generate(const NoiseSchedule& schedule, const NoisePredictor& predictor,
                         std::vector<double> x_start, Rng& rng);

/// K independent teacher runs; trajectory k draws x_T from seed base_seed + k.
/// Deterministic for a fixed base_seed regardless of `threads`.
TrajectorySet record_trajectory_set(const NoiseSchedule& schedule, const NoisePredictor& predictor, int count,
                                    std::uint64_t base_seed, int threads = 1);

/// Container layout: <dir>/manifest.json plus per-trajectory blobs
/// traj_<k>_states.f64 and traj_<k>_outputs.f64 (little-endian doubles,
/// vectors concatenated in descending-t order, no header).
void save_trajectory_set(const TrajectorySet& set, const std::filesystem::path& dir);
TrajectorySet load_trajectory_set(const std::filesystem::path& dir);

}  // namespace olss::diffusion

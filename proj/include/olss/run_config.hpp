#pragma once

#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "olss/predictor.hpp"
#include "olss/schedule.hpp"

namespace olss::cli {

/// Usage or configuration problem; the CLI exits with code 1.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct RunConfig {
    int total_steps = 1000;  // T
    double beta_start = 1e-4;
    double beta_end = 0.02;
    nlohmann::json predictor_config;  // shorthand or explicit descriptor
    int d = 16;
    int trajectory_count = 32;  // K
    std::uint64_t base_seed = 1000;
    int n = 5;
    std::string mode = "optimized";
    double epsilon = 1e-4;               // relative to the uniform-path bound
    std::vector<int> n_values = {5, 10};  // compare
    int eval_count = 32;
    std::uint64_t eval_seed_base = 0;  // 0 -> base_seed + K + 1000
    int stride = 25;                   // heat-map subsampling
    int threads = 1;
    std::string out;  // default output directory, overridden by --out

    std::uint64_t effective_eval_seed_base() const {
        return eval_seed_base != 0 ? eval_seed_base
                                   : base_seed + static_cast<std::uint64_t>(trajectory_count) + 1000;
    }
};

RunConfig default_config();

/// Parses and validates a config document; unknown keys are rejected.
RunConfig parse_run_config(const nlohmann::json& doc);

RunConfig load_run_config(const std::string& path);

/// Full config with defaults materialized, for provenance echoes.
nlohmann::json effective_config(const RunConfig& config);

diffusion::NoiseSchedule build_schedule(const RunConfig& config);

/// Builds the teacher from the config's predictor block. Shorthand forms
/// ({"kind":"gmm","components":..,"mean_norm":..,"variance":..,"seed":..} or
/// {"kind":"gaussian","variance":..[,"mean":[..]]}) are expanded here; an
/// explicit {"kind":..,"parameters":..} descriptor is passed through.
std::shared_ptr<diffusion::NoisePredictor> build_predictor(const RunConfig& config,
                                                           const diffusion::NoiseSchedule& schedule);

}  // namespace olss::cli

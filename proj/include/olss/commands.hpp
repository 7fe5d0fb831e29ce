#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>

#include "olss/run_config.hpp"

namespace olss::cli {

/// Records a teacher trajectory container under `out`.
void cmd_record(const RunConfig& config, const std::filesystem::path& out, bool force);

/// Trains a scheduler from a recorded container; writes <out>/scheduler.json.
void cmd_train(const RunConfig& config, const std::filesystem::path& container, const std::filesystem::path& out,
               bool force);

/// Draws x_T from `seed`, runs the trained scheduler and writes
/// <out>/states.csv with one row per visited step.
void cmd_sample(const std::filesystem::path& scheduler_file, std::uint64_t seed, const std::filesystem::path& out,
                bool force);

/// Benchmarks DDIM, PNDM, OLSS-P and OLSS on held-out seeds; writes
/// <out>/comparison.csv.
void cmd_compare(const RunConfig& config, const std::filesystem::path& container, const std::filesystem::path& out,
                 bool force);

/// Figure-data exports: <out>/correlation.csv (heat map of trajectory 0) and
/// <out>/pca_paths.csv (teacher path plus DDIM/PNDM and, when a scheduler
/// file is given, the trained scheduler).
void cmd_viz(const RunConfig& config, const std::filesystem::path& container,
             const std::optional<std::filesystem::path>& scheduler_file, const std::filesystem::path& out,
             bool force);

}  // namespace olss::cli

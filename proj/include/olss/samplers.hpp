#pragma once

#include <span>
#include <vector>

#include "olss/predictor.hpp"
#include "olss/schedule.hpp"

namespace olss::samplers {

/// Selected sampling steps t(1) > t(2) > ... > t(n); the terminal step
/// t(n+1) = 0 is implicit.
struct StepPath {
    std::vector<int> steps;

    int length() const { return static_cast<int>(steps.size()); }
    void validate(int total_steps) const;

    bool operator==(const StepPath&) const = default;
};

/// Equally spaced path: t(i) = round(T*(n-i+1)/n), nudged where rounding
/// collides so the sequence stays strictly decreasing with t(1) = T.
StepPath uniform_path(int total_steps, int n);

/// One DDIM hop expressed directly in the alpha_bar values. Identical to the
/// deterministic full-process update when the steps are consecutive.
std::vector<double> ddim_update(std::span<const double> x, std::span<const double> e,
                                double alpha_cur, double alpha_next);

std::vector<double> ddim_step(const diffusion::NoiseSchedule& schedule, std::span<const double> x, int t_cur,
                              std::span<const double> e, int t_next);

/// Adams-Bashforth combination weights for history lengths 1..4, most recent
/// output first. Order 4 is (55, -59, 37, -9)/24.
std::span<const double> adams_bashforth_coefficients(int order);

/// Linear multi-step combination of the most recent <= 4 model outputs.
std::vector<double> linear_multistep_combination(std::span<const std::vector<double>> history);

/// Transfer coefficient for the pseudo linear-multistep hop:
/// (a_next - a_cur) / (sqrt((1-a_next) a_cur) + sqrt((1-a_cur) a_next)).
double pndm_alpha_prime(double alpha_cur, double alpha_next);

std::vector<double> pndm_update(std::span<const double> x, std::span<const double> e_combined,
                                double alpha_cur, double alpha_next);

/// history holds the most recent model outputs first (e at t(i), t(i-1), ...),
/// at most 4 of them; shorter histories fall back to the lower-order
/// Adams-Bashforth weights.
std::vector<double> pndm_step(const diffusion::NoiseSchedule& schedule, std::span<const double> x, int t_cur,
                              std::span<const std::vector<double>> history, int t_next);

enum class SamplerKind { Ddim, Pndm };

struct SamplerRun {
    StepPath path;
    std::vector<std::vector<double>> visited;   // x at t(1)..t(n+1), so n+1 entries
    std::vector<std::vector<double>> outputs;   // e at t(1)..t(n)
    int model_calls = 0;
};

/// Runs the chosen step rule along the path, calling the predictor exactly
/// once per selected step.
SamplerRun run_sampler(SamplerKind kind, const diffusion::NoiseSchedule& schedule,
                       const diffusion::NoisePredictor& predictor, const StepPath& path,
                       std::vector<double> x_start);

}  // namespace olss::samplers

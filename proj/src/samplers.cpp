#include "olss/samplers.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>
#include <string>

#include "olss/vec.hpp"

namespace olss::samplers {

void StepPath::validate(int total_steps) const {
    if (steps.empty()) throw std::invalid_argument("StepPath: needs at least one step");
    if (steps.front() != total_steps) throw std::invalid_argument("StepPath: t(1) must equal T");
    for (std::size_t i = 0; i < steps.size(); ++i) {
        if (steps[i] < 1 || steps[i] > total_steps) throw std::invalid_argument("StepPath: step out of range");
        if (i > 0 && steps[i] >= steps[i - 1]) throw std::invalid_argument("StepPath: steps must be strictly decreasing");
    }
}

StepPath uniform_path(int total_steps, int n) {
    if (n < 1 || n > total_steps) throw std::invalid_argument("uniform_path: requires 1 <= n <= T");
    StepPath path;
    path.steps.resize(static_cast<std::size_t>(n));
    for (int i = 1; i <= n; ++i) {
        const double pos = static_cast<double>(total_steps) * static_cast<double>(n - i + 1) / static_cast<double>(n);
        int t = static_cast<int>(std::lround(pos));
        if (i == 1) t = total_steps;
        if (i > 1) t = std::min(t, path.steps[static_cast<std::size_t>(i - 2)] - 1);
        path.steps[static_cast<std::size_t>(i - 1)] = t;
    }
    path.validate(total_steps);
    return path;
}

std::vector<double> ddim_update(std::span<const double> x, std::span<const double> e,
                                double alpha_cur, double alpha_next) {
    return diffusion::deterministic_hop(x, e, alpha_cur, alpha_next);
}

std::vector<double> ddim_step(const diffusion::NoiseSchedule& schedule, std::span<const double> x, int t_cur,
                              std::span<const double> e, int t_next) {
    if (t_next >= t_cur) throw std::invalid_argument("ddim_step: t_next must be below the current step");
    std::vector<double> out = ddim_update(x, e, schedule.alpha_at(t_cur), schedule.alpha_at(t_next));
    if (!all_finite(out)) throw std::runtime_error("ddim_step: non-finite result");
    return out;
}

std::span<const double> adams_bashforth_coefficients(int order) {
    static constexpr std::array<double, 1> k1{1.0};
    static constexpr std::array<double, 2> k2{3.0 / 2.0, -1.0 / 2.0};
    static constexpr std::array<double, 3> k3{23.0 / 12.0, -16.0 / 12.0, 5.0 / 12.0};
    static constexpr std::array<double, 4> k4{55.0 / 24.0, -59.0 / 24.0, 37.0 / 24.0, -9.0 / 24.0};
    switch (order) {
        case 1: return k1;
        case 2: return k2;
        case 3: return k3;
        case 4: return k4;
        default: throw std::invalid_argument("adams_bashforth_coefficients: order must be 1..4");
    }
}

std::vector<double> linear_multistep_combination(std::span<const std::vector<double>> history) {
    if (history.empty()) throw std::invalid_argument("linear_multistep_combination: history must be nonempty");
    const int order = std::min<int>(4, static_cast<int>(history.size()));
    const auto coefs = adams_bashforth_coefficients(order);
    std::vector<double> combined(history[0].size(), 0.0);
    for (int j = 0; j < order; ++j) axpy(coefs[static_cast<std::size_t>(j)], history[static_cast<std::size_t>(j)], combined);
    return combined;
}

double pndm_alpha_prime(double alpha_cur, double alpha_next) {
    return (alpha_next - alpha_cur) /
           (std::sqrt((1.0 - alpha_next) * alpha_cur) + std::sqrt((1.0 - alpha_cur) * alpha_next));
}

std::vector<double> pndm_update(std::span<const double> x, std::span<const double> e_combined,
                                double alpha_cur, double alpha_next) {
    const double sqrt_cur = std::sqrt(alpha_cur);
    const double x_coef = std::sqrt(alpha_next) / sqrt_cur;
    const double e_coef = -pndm_alpha_prime(alpha_cur, alpha_next) / sqrt_cur;
    std::vector<double> out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = x_coef * x[i] + e_coef * e_combined[i];
    return out;
}

std::vector<double> pndm_step(const diffusion::NoiseSchedule& schedule, std::span<const double> x, int t_cur,
                              std::span<const std::vector<double>> history, int t_next) {
    if (t_next >= t_cur) throw std::invalid_argument("pndm_step: t_next must be below the current step");
    const std::vector<double> combined = linear_multistep_combination(history);
    std::vector<double> out = pndm_update(x, combined, schedule.alpha_at(t_cur), schedule.alpha_at(t_next));
    if (!all_finite(out)) throw std::runtime_error("pndm_step: non-finite result");
    return out;
}

SamplerRun run_sampler(SamplerKind kind, const diffusion::NoiseSchedule& schedule,
                       const diffusion::NoisePredictor& predictor, const StepPath& path,
                       std::vector<double> x_start) {
    path.validate(schedule.total_steps);
    if (static_cast<int>(x_start.size()) != predictor.dimension())
        throw std::invalid_argument("run_sampler: x_T dimension does not match predictor");

    const int n = path.length();
    SamplerRun run;
    run.path = path;
    run.visited.reserve(static_cast<std::size_t>(n) + 1);
    run.outputs.reserve(static_cast<std::size_t>(n));
    run.visited.push_back(std::move(x_start));

    std::vector<std::vector<double>> history;  // most recent first, capped at 4
    for (int i = 0; i < n; ++i) {
        const int t_cur = path.steps[static_cast<std::size_t>(i)];
        const int t_next = (i + 1 < n) ? path.steps[static_cast<std::size_t>(i + 1)] : 0;
        const std::vector<double>& x = run.visited.back();
        std::vector<double> e = predictor.predict(x, t_cur);
        ++run.model_calls;

        std::vector<double> next;
        if (kind == SamplerKind::Ddim) {
            next = ddim_step(schedule, x, t_cur, e, t_next);
        } else {
            history.insert(history.begin(), e);
            if (history.size() > 4) history.pop_back();
            next = pndm_step(schedule, x, t_cur, history, t_next);
        }
        run.outputs.push_back(std::move(e));
        run.visited.push_back(std::move(next));
    }
    return run;
}

}  // namespace olss::samplers

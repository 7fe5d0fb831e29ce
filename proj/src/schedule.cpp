#include "olss/schedule.hpp"

#include <cmath>
#include <stdexcept>

namespace olss::diffusion {

NoiseSchedule make_linear_schedule(int total_steps, double beta_start, double beta_end) {
    if (total_steps < 1) throw std::invalid_argument("make_linear_schedule: T must be >= 1");
    if (!(beta_start > 0.0) || !(beta_start <= beta_end) || !(beta_end < 1.0))
        throw std::invalid_argument("make_linear_schedule: requires 0 < beta_start <= beta_end < 1");

    NoiseSchedule s;
    s.total_steps = total_steps;
    s.kind = "linear";
    s.beta_start = beta_start;
    s.beta_end = beta_end;
    s.alpha_bar.resize(static_cast<std::size_t>(total_steps) + 1);
    s.sigma.assign(static_cast<std::size_t>(total_steps) + 1, 0.0);
    s.alpha_bar[0] = 1.0;
    for (int t = 1; t <= total_steps; ++t) {
        const double frac = (total_steps == 1) ? 0.0 : static_cast<double>(t - 1) / static_cast<double>(total_steps - 1);
        const double beta = beta_start + (beta_end - beta_start) * frac;
        s.alpha_bar[static_cast<std::size_t>(t)] = s.alpha_bar[static_cast<std::size_t>(t - 1)] * (1.0 - beta);
    }
    return s;
}

std::vector<double> deterministic_hop(std::span<const double> x, std::span<const double> e,
                                      double alpha_from, double alpha_to) {
    const double sqrt_from = std::sqrt(alpha_from);
    const double sqrt_to = std::sqrt(alpha_to);
    const double noise_from = std::sqrt(1.0 - alpha_from);
    const double noise_to = std::sqrt(1.0 - alpha_to);
    std::vector<double> out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double predicted_x0 = (x[i] - noise_from * e[i]) / sqrt_from;
        out[i] = sqrt_to * predicted_x0 + noise_to * e[i];
    }
    return out;
}

}  // namespace olss::diffusion

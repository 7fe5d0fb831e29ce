#pragma once

#include <span>
#include <string>
#include <vector>

namespace olss::diffusion {

/// Discrete-time forward-process parameters. alpha_bar[t] is the cumulative
/// retention product at step t (alpha_bar[0] = 1, strictly decreasing);
/// sigma[t] is the per-step sampling noise scale (all zero for the
/// deterministic process).
struct NoiseSchedule {
    int total_steps = 0;                // T
    std::vector<double> alpha_bar;      // indexed 0..T
    std::vector<double> sigma;          // indexed 1..T (slot 0 unused)

    std::string kind = "linear";
    double beta_start = 0.0;
    double beta_end = 0.0;

    double alpha_at(int t) const { return alpha_bar[static_cast<std::size_t>(t)]; }
    bool deterministic() const {
        for (std::size_t t = 1; t < sigma.size(); ++t)
            if (sigma[t] != 0.0) return false;
        return true;
    }
};

/// Linear beta schedule: beta interpolated from beta_start (t=1) to beta_end
/// (t=T), alpha_bar as the running product of (1 - beta), sigma all zero.
NoiseSchedule make_linear_schedule(int total_steps, double beta_start, double beta_end);

/// One deterministic denoising hop from alpha_from to alpha_to:
/// sqrt(a_to) * (x - sqrt(1-a_from) e) / sqrt(a_from) + sqrt(1-a_to) e.
/// Shared by the full generation process (sigma = 0 case) and the DDIM rule
/// so the two agree bit for bit on consecutive steps.
std::vector<double> deterministic_hop(std::span<const double> x, std::span<const double> e,
                                      double alpha_from, double alpha_to);

}  // namespace olss::diffusion

#pragma once

#include <memory>
#include <span>
#include <vector>

#include <json.hpp>

#include "olss/matrix.hpp"
#include "olss/schedule.hpp"

namespace olss::diffusion {

/// Deterministic noise-prediction contract: e = predict(x, t). Implementations
/// must be safely callable from multiple threads after construction.
class NoisePredictor {
public:
    virtual ~NoisePredictor() = default;
    virtual int dimension() const = 0;
    virtual std::vector<double> predict(std::span<const double> x, int t) const = 0;
    /// Serializable descriptor: {"kind": ..., "parameters": {...}}.
    virtual nlohmann::json describe() const = 0;
};

/// Exact conditional-expectation noise predictor for data x0 ~ N(mu, Sigma):
/// e(x, t) = sqrt(1 - a_t) * C_t^{-1} (x - sqrt(a_t) mu) with
/// C_t = a_t Sigma + (1 - a_t) I, a_t = alpha_bar[t].
class GaussianPredictor : public NoisePredictor {
public:
    GaussianPredictor(std::vector<double> mu, linalg::Matrix sigma, const NoiseSchedule& schedule);

    int dimension() const override { return static_cast<int>(mu_.size()); }
    std::vector<double> predict(std::span<const double> x, int t) const override;
    nlohmann::json describe() const override;

private:
    std::vector<double> mu_;
    linalg::Matrix sigma_;
    std::vector<double> alpha_bar_;
    std::vector<linalg::Matrix> chol_;  // Cholesky factor of C_t, t = 1..T
};

/// Mixture teacher: e(x, t) = sum_k gamma_k(x, t) e_k(x, t) with posterior
/// responsibilities gamma_k computed under the per-component marginals of x_t
/// (log-sum-exp stabilized).
class GmmPredictor : public NoisePredictor {
public:
    GmmPredictor(std::vector<double> weights, std::vector<std::vector<double>> mus,
                 std::vector<linalg::Matrix> sigmas, const NoiseSchedule& schedule);

    int dimension() const override { return static_cast<int>(mus_[0].size()); }
    std::vector<double> predict(std::span<const double> x, int t) const override;
    nlohmann::json describe() const override;

    std::vector<double> responsibilities(std::span<const double> x, int t) const;

private:
    std::vector<double> weights_;
    std::vector<std::vector<double>> mus_;
    std::vector<linalg::Matrix> sigmas_;
    std::vector<double> alpha_bar_;
    // chol_[t * components + k] holds the factor of C_{t,k}; log_det_[same] its log-determinant.
    std::vector<linalg::Matrix> chol_;
    std::vector<double> log_det_;
};

/// Reconstructs a predictor from its describe() output.
std::shared_ptr<NoisePredictor> make_predictor(const nlohmann::json& descriptor, const NoiseSchedule& schedule);

/// Seeded mixture teacher used as the default benchmark target: `components`
/// Gaussians in dimension d with random means scaled to `mean_norm` and
/// isotropic covariance variance * I.
std::shared_ptr<NoisePredictor> make_gmm_teacher(int d, int components, double mean_norm, double variance,
                                                 std::uint64_t seed, const NoiseSchedule& schedule);

}  // namespace olss::diffusion

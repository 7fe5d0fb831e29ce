#include "olss/predictor.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "olss/linalg.hpp"
#include "olss/rng.hpp"
#include "olss/vec.hpp"

namespace olss::diffusion {

namespace {

linalg::Matrix marginal_covariance(const linalg::Matrix& sigma, double alpha) {
    const std::size_t d = sigma.rows();
    linalg::Matrix c(d, d);
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j) c(i, j) = alpha * sigma(i, j) + ((i == j) ? (1.0 - alpha) : 0.0);
    return c;
}

double log_det_from_cholesky(const linalg::Matrix& l) {
    double s = 0.0;
    for (std::size_t i = 0; i < l.rows(); ++i) s += std::log(l(i, i));
    return 2.0 * s;
}

linalg::Matrix matrix_from_json(const nlohmann::json& rows) {
    const std::size_t n = rows.size();
    if (n == 0) throw std::invalid_argument("predictor descriptor: empty covariance");
    linalg::Matrix m(n, rows[0].size());
    for (std::size_t i = 0; i < n; ++i) {
        if (rows[i].size() != m.cols()) throw std::invalid_argument("predictor descriptor: ragged covariance");
        for (std::size_t j = 0; j < m.cols(); ++j) m(i, j) = rows[i][j].get<double>();
    }
    return m;
}

nlohmann::json matrix_to_json(const linalg::Matrix& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t i = 0; i < m.rows(); ++i) {
        nlohmann::json row = nlohmann::json::array();
        for (std::size_t j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(row);
    }
    return rows;
}

void check_symmetric(const linalg::Matrix& m, const char* what) {
    if (m.rows() != m.cols()) throw std::invalid_argument(std::string(what) + ": covariance must be square");
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = i + 1; j < m.cols(); ++j)
            if (m(i, j) != m(j, i)) throw std::invalid_argument(std::string(what) + ": covariance must be symmetric");
}

}  // namespace

GaussianPredictor::GaussianPredictor(std::vector<double> mu, linalg::Matrix sigma, const NoiseSchedule& schedule)
    : mu_(std::move(mu)), sigma_(std::move(sigma)), alpha_bar_(schedule.alpha_bar) {
    check_symmetric(sigma_, "GaussianPredictor");
    if (sigma_.rows() != mu_.size()) throw std::invalid_argument("GaussianPredictor: mu/Sigma dimension mismatch");
    linalg::cholesky(sigma_);  // rejects non-PD Sigma up front
    chol_.reserve(static_cast<std::size_t>(schedule.total_steps));
    for (int t = 1; t <= schedule.total_steps; ++t)
        chol_.push_back(linalg::cholesky(marginal_covariance(sigma_, alpha_bar_[static_cast<std::size_t>(t)])));
}

std::vector<double> GaussianPredictor::predict(std::span<const double> x, int t) const {
    if (x.size() != mu_.size()) throw std::invalid_argument("GaussianPredictor: x dimension mismatch");
    if (t < 1 || t >= static_cast<int>(alpha_bar_.size())) throw std::invalid_argument("GaussianPredictor: t out of range");
    const double alpha = alpha_bar_[static_cast<std::size_t>(t)];
    const double sqrt_alpha = std::sqrt(alpha);
    std::vector<double> centered(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) centered[i] = x[i] - sqrt_alpha * mu_[i];
    std::vector<double> z = linalg::cholesky_solve(chol_[static_cast<std::size_t>(t - 1)], centered);
    scale(z, std::sqrt(1.0 - alpha));
    return z;
}

nlohmann::json GaussianPredictor::describe() const {
    return {{"kind", "gaussian"}, {"parameters", {{"mean", mu_}, {"covariance", matrix_to_json(sigma_)}}}};
}

GmmPredictor::GmmPredictor(std::vector<double> weights, std::vector<std::vector<double>> mus,
                           std::vector<linalg::Matrix> sigmas, const NoiseSchedule& schedule)
    : weights_(std::move(weights)), mus_(std::move(mus)), sigmas_(std::move(sigmas)), alpha_bar_(schedule.alpha_bar) {
    const std::size_t m = weights_.size();
    if (m == 0 || mus_.size() != m || sigmas_.size() != m)
        throw std::invalid_argument("GmmPredictor: component counts inconsistent");
    double sum = 0.0;
    for (double w : weights_) {
        if (!(w > 0.0)) throw std::invalid_argument("GmmPredictor: weights must be positive");
        sum += w;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw std::invalid_argument("GmmPredictor: weights must sum to 1");
    const std::size_t d = mus_[0].size();
    for (std::size_t k = 0; k < m; ++k) {
        if (mus_[k].size() != d) throw std::invalid_argument("GmmPredictor: mean dimension mismatch");
        check_symmetric(sigmas_[k], "GmmPredictor");
        if (sigmas_[k].rows() != d) throw std::invalid_argument("GmmPredictor: covariance dimension mismatch");
        linalg::cholesky(sigmas_[k]);
    }

    const std::size_t steps = static_cast<std::size_t>(schedule.total_steps);
    chol_.reserve(steps * m);
    log_det_.reserve(steps * m);
    for (int t = 1; t <= schedule.total_steps; ++t) {
        const double alpha = alpha_bar_[static_cast<std::size_t>(t)];
        for (std::size_t k = 0; k < m; ++k) {
            chol_.push_back(linalg::cholesky(marginal_covariance(sigmas_[k], alpha)));
            log_det_.push_back(log_det_from_cholesky(chol_.back()));
        }
    }
}

std::vector<double> GmmPredictor::responsibilities(std::span<const double> x, int t) const {
    const std::size_t m = weights_.size();
    const double alpha = alpha_bar_[static_cast<std::size_t>(t)];
    const double sqrt_alpha = std::sqrt(alpha);
    const std::size_t base = static_cast<std::size_t>(t - 1) * m;

    std::vector<double> log_post(m);
    for (std::size_t k = 0; k < m; ++k) {
        std::vector<double> centered(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) centered[i] = x[i] - sqrt_alpha * mus_[k][i];
        const std::vector<double> z = linalg::cholesky_solve(chol_[base + k], centered);
        const double quad = dot(centered, z);
        log_post[k] = std::log(weights_[k]) - 0.5 * (quad + log_det_[base + k]);
    }
    double max_log = log_post[0];
    for (double v : log_post) max_log = std::max(max_log, v);
    double denom = 0.0;
    for (double v : log_post) denom += std::exp(v - max_log);
    std::vector<double> gamma(m);
    for (std::size_t k = 0; k < m; ++k) gamma[k] = std::exp(log_post[k] - max_log) / denom;
    return gamma;
}

std::vector<double> GmmPredictor::predict(std::span<const double> x, int t) const {
    if (x.size() != mus_[0].size()) throw std::invalid_argument("GmmPredictor: x dimension mismatch");
    if (t < 1 || t >= static_cast<int>(alpha_bar_.size())) throw std::invalid_argument("GmmPredictor: t out of range");
    const std::size_t m = weights_.size();
    const double alpha = alpha_bar_[static_cast<std::size_t>(t)];
    const double sqrt_alpha = std::sqrt(alpha);
    const double sqrt_noise = std::sqrt(1.0 - alpha);
    const std::size_t base = static_cast<std::size_t>(t - 1) * m;

    const std::vector<double> gamma = responsibilities(x, t);
    std::vector<double> e(x.size(), 0.0);
    for (std::size_t k = 0; k < m; ++k) {
        std::vector<double> centered(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) centered[i] = x[i] - sqrt_alpha * mus_[k][i];
        const std::vector<double> z = linalg::cholesky_solve(chol_[base + k], centered);
        axpy(gamma[k] * sqrt_noise, z, e);
    }
    return e;
}

nlohmann::json GmmPredictor::describe() const {
    nlohmann::json means = nlohmann::json::array();
    nlohmann::json covs = nlohmann::json::array();
    for (std::size_t k = 0; k < weights_.size(); ++k) {
        means.push_back(mus_[k]);
        covs.push_back(matrix_to_json(sigmas_[k]));
    }
    return {{"kind", "gmm"}, {"parameters", {{"weights", weights_}, {"means", means}, {"covariances", covs}}}};
}

std::shared_ptr<NoisePredictor> make_predictor(const nlohmann::json& descriptor, const NoiseSchedule& schedule) {
    if (!descriptor.contains("kind")) throw std::invalid_argument("predictor descriptor: missing field 'kind'");
    const std::string kind = descriptor.at("kind").get<std::string>();
    const nlohmann::json& params = descriptor.at("parameters");
    if (kind == "gaussian") {
        return std::make_shared<GaussianPredictor>(params.at("mean").get<std::vector<double>>(),
                                                   matrix_from_json(params.at("covariance")), schedule);
    }
    if (kind == "gmm") {
        std::vector<linalg::Matrix> sigmas;
        for (const auto& c : params.at("covariances")) sigmas.push_back(matrix_from_json(c));
        return std::make_shared<GmmPredictor>(params.at("weights").get<std::vector<double>>(),
                                              params.at("means").get<std::vector<std::vector<double>>>(),
                                              std::move(sigmas), schedule);
    }
    throw std::invalid_argument("predictor descriptor: unknown kind '" + kind + "'");
}

std::shared_ptr<NoisePredictor> make_gmm_teacher(int d, int components, double mean_norm, double variance,
                                                 std::uint64_t seed, const NoiseSchedule& schedule) {
    if (d < 1 || components < 1) throw std::invalid_argument("make_gmm_teacher: d and components must be >= 1");
    if (!(variance > 0.0)) throw std::invalid_argument("make_gmm_teacher: variance must be positive");
    Rng rng(seed);
    std::vector<std::vector<double>> mus;
    std::vector<linalg::Matrix> sigmas;
    for (int k = 0; k < components; ++k) {
        std::vector<double> mu = rng.gaussian_vector(static_cast<std::size_t>(d));
        const double n = norm2(mu);
        if (n > 0.0) scale(mu, mean_norm / n);
        mus.push_back(std::move(mu));
        linalg::Matrix sigma(static_cast<std::size_t>(d), static_cast<std::size_t>(d));
        for (int i = 0; i < d; ++i) sigma(static_cast<std::size_t>(i), static_cast<std::size_t>(i)) = variance;
        sigmas.push_back(std::move(sigma));
    }
    std::vector<double> weights(static_cast<std::size_t>(components), 1.0 / static_cast<double>(components));
    return std::make_shared<GmmPredictor>(std::move(weights), std::move(mus), std::move(sigmas), schedule);
}

}  // namespace olss::diffusion

#include "olss/run_config.hpp"

#include <fstream>
#include <set>

#include "olss/matrix.hpp"

namespace olss::cli {

namespace {

void reject_unknown_keys(const nlohmann::json& obj, const std::set<std::string>& allowed, const std::string& where) {
    for (const auto& [key, value] : obj.items())
        if (!allowed.count(key)) throw ConfigError("unknown config key '" + key + "' in " + where);
}

template <typename T>
void read_field(const nlohmann::json& obj, const char* key, T& target) {
    if (!obj.contains(key)) return;
    try {
        target = obj.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw ConfigError(std::string("config key '") + key + "' has the wrong type");
    }
}

nlohmann::json default_predictor_config() {
    return {{"kind", "gmm"}, {"components", 3}, {"mean_norm", 3.0}, {"variance", 0.5}, {"seed", 7}};
}

}  // namespace

RunConfig default_config() {
    RunConfig config;
    config.predictor_config = default_predictor_config();
    return config;
}

RunConfig parse_run_config(const nlohmann::json& doc) {
    if (!doc.is_object()) throw ConfigError("config must be a JSON object");
    reject_unknown_keys(doc,
                        {"schedule", "predictor", "d", "K", "base_seed", "n", "mode", "epsilon", "n_values",
                         "eval_count", "eval_seed_base", "stride", "threads", "out"},
                        "the top level");

    RunConfig config = default_config();
    if (doc.contains("schedule")) {
        const auto& sched = doc.at("schedule");
        if (!sched.is_object()) throw ConfigError("config key 'schedule' must be an object");
        reject_unknown_keys(sched, {"T", "beta_start", "beta_end"}, "'schedule'");
        read_field(sched, "T", config.total_steps);
        read_field(sched, "beta_start", config.beta_start);
        read_field(sched, "beta_end", config.beta_end);
    }
    if (doc.contains("predictor")) {
        const auto& pred = doc.at("predictor");
        if (!pred.is_object() || !pred.contains("kind")) throw ConfigError("config key 'predictor' must be an object with a 'kind'");
        const std::string kind = pred.at("kind").get<std::string>();
        if (kind == "gmm") {
            if (pred.contains("parameters"))
                reject_unknown_keys(pred, {"kind", "parameters"}, "'predictor'");
            else
                reject_unknown_keys(pred, {"kind", "components", "mean_norm", "variance", "seed"}, "'predictor'");
        } else if (kind == "gaussian") {
            if (pred.contains("parameters"))
                reject_unknown_keys(pred, {"kind", "parameters"}, "'predictor'");
            else
                reject_unknown_keys(pred, {"kind", "variance", "mean"}, "'predictor'");
        } else {
            throw ConfigError("config: predictor kind must be 'gaussian' or 'gmm'");
        }
        config.predictor_config = pred;
    }
    read_field(doc, "d", config.d);
    read_field(doc, "K", config.trajectory_count);
    read_field(doc, "base_seed", config.base_seed);
    read_field(doc, "n", config.n);
    read_field(doc, "mode", config.mode);
    read_field(doc, "epsilon", config.epsilon);
    read_field(doc, "n_values", config.n_values);
    read_field(doc, "eval_count", config.eval_count);
    read_field(doc, "eval_seed_base", config.eval_seed_base);
    read_field(doc, "stride", config.stride);
    read_field(doc, "threads", config.threads);
    read_field(doc, "out", config.out);

    if (config.total_steps < 1) throw ConfigError("config: schedule.T must be >= 1");
    if (!(config.beta_start > 0.0) || !(config.beta_start <= config.beta_end) || !(config.beta_end < 1.0))
        throw ConfigError("config: requires 0 < beta_start <= beta_end < 1");
    if (config.d < 1) throw ConfigError("config: d must be >= 1");
    if (config.trajectory_count < 1) throw ConfigError("config: K must be >= 1");
    if (config.n < 1 || config.n > config.total_steps) throw ConfigError("config: requires 1 <= n <= T");
    if (config.mode != "uniform" && config.mode != "optimized")
        throw ConfigError("config: mode must be 'uniform' or 'optimized'");
    if (!(config.epsilon > 0.0)) throw ConfigError("config: epsilon must be positive");
    if (config.n_values.empty()) throw ConfigError("config: n_values must be nonempty");
    for (int n : config.n_values)
        if (n < 1 || n > config.total_steps) throw ConfigError("config: every n_values entry must be in [1, T]");
    if (config.eval_count < 1) throw ConfigError("config: eval_count must be >= 1");
    if (config.stride < 1) throw ConfigError("config: stride must be >= 1");
    if (config.threads < 1) throw ConfigError("config: threads must be >= 1");

    const std::uint64_t eval_base = config.effective_eval_seed_base();
    const std::uint64_t eval_end = eval_base + static_cast<std::uint64_t>(config.eval_count);
    const std::uint64_t train_end = config.base_seed + static_cast<std::uint64_t>(config.trajectory_count);
    if (eval_base < train_end && config.base_seed < eval_end)
        throw ConfigError("config: evaluation seeds overlap the training seeds");
    return config;
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("malformed config file " + path + ": " + e.what());
    }
    return parse_run_config(doc);
}

nlohmann::json effective_config(const RunConfig& config) {
    return {{"schedule", {{"T", config.total_steps}, {"beta_start", config.beta_start}, {"beta_end", config.beta_end}}},
            {"predictor", config.predictor_config},
            {"d", config.d},
            {"K", config.trajectory_count},
            {"base_seed", config.base_seed},
            {"n", config.n},
            {"mode", config.mode},
            {"epsilon", config.epsilon},
            {"n_values", config.n_values},
            {"eval_count", config.eval_count},
            {"eval_seed_base", config.effective_eval_seed_base()},
            {"stride", config.stride},
            {"threads", config.threads}};
}

diffusion::NoiseSchedule build_schedule(const RunConfig& config) {
    return diffusion::make_linear_schedule(config.total_steps, config.beta_start, config.beta_end);
}

std::shared_ptr<diffusion::NoisePredictor> build_predictor(const RunConfig& config,
                                                           const diffusion::NoiseSchedule& schedule) {
    const nlohmann::json& pred = config.predictor_config;
    const std::string kind = pred.at("kind").get<std::string>();
    if (pred.contains("parameters")) return diffusion::make_predictor(pred, schedule);

    if (kind == "gmm") {
        int components = 3;
        double mean_norm = 3.0;
        double variance = 0.5;
        std::uint64_t seed = 7;
        read_field(pred, "components", components);
        read_field(pred, "mean_norm", mean_norm);
        read_field(pred, "variance", variance);
        read_field(pred, "seed", seed);
        if (components < 1) throw ConfigError("config: predictor.components must be >= 1");
        if (!(variance > 0.0)) throw ConfigError("config: predictor.variance must be positive");
        return diffusion::make_gmm_teacher(config.d, components, mean_norm, variance, seed, schedule);
    }
    // gaussian shorthand: mean defaults to zero, covariance to variance * I
    double variance = 1.0;
    std::vector<double> mean(static_cast<std::size_t>(config.d), 0.0);
    read_field(pred, "variance", variance);
    read_field(pred, "mean", mean);
    if (!(variance > 0.0)) throw ConfigError("config: predictor.variance must be positive");
    if (mean.size() != static_cast<std::size_t>(config.d)) throw ConfigError("config: predictor.mean must have length d");
    linalg::Matrix sigma(static_cast<std::size_t>(config.d), static_cast<std::size_t>(config.d));
    for (int i = 0; i < config.d; ++i) sigma(static_cast<std::size_t>(i), static_cast<std::size_t>(i)) = variance;
    return std::make_shared<diffusion::GaussianPredictor>(std::move(mean), std::move(sigma), schedule);
}

}  // namespace olss::cli

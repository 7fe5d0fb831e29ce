#include "olss/olss.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "olss/vec.hpp"

namespace olss {

namespace {

std::runtime_error data_error(const std::string& msg) { return std::runtime_error(msg); }

void check_prefix(const diffusion::TrajectorySet& set, std::span<const int> prefix, int target) {
    if (prefix.empty()) throw std::invalid_argument("prefix must be nonempty");
    if (prefix.front() != set.total_steps) throw std::invalid_argument("prefix must start at t(1) = T");
    for (std::size_t i = 0; i < prefix.size(); ++i) {
        if (prefix[i] < 1 || prefix[i] > set.total_steps) throw std::invalid_argument("prefix step out of range");
        if (i > 0 && prefix[i] >= prefix[i - 1]) throw std::invalid_argument("prefix must be strictly decreasing");
    }
    if (target < 0 || target >= prefix.back()) throw std::invalid_argument("target must lie in [0, t(i)-1]");
}

// Eq with sigma = 0 applied per trajectory during the cascaded estimate.
std::vector<double> hop(const diffusion::NoiseSchedule& schedule, std::span<const double> x,
                        std::span<const double> e, int t_from, int t_to) {
    return diffusion::deterministic_hop(x, e, schedule.alpha_at(t_from), schedule.alpha_at(t_to));
}

double normalized_residual(double norm, const diffusion::TrajectorySet& set) {
    return norm / std::sqrt(static_cast<double>(set.count()) * static_cast<double>(set.d));
}

}  // namespace

void WeightMatrix::validate() const {
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != i + 2)
            throw data_error("WeightMatrix: row " + std::to_string(i + 1) + " must hold " + std::to_string(i + 2) +
                             " coefficients");
        require_finite(rows[i], "WeightMatrix row " + std::to_string(i + 1));
    }
}

std::pair<linalg::Matrix, std::vector<double>> stack_design(const diffusion::TrajectorySet& set,
                                                            std::span<const int> prefix, int target) {
    check_prefix(set, prefix, target);
    const std::size_t k = static_cast<std::size_t>(set.count());
    const std::size_t d = static_cast<std::size_t>(set.d);
    const std::size_t rows = k * d;
    const std::size_t cols = prefix.size() + 1;
    if (rows < cols)
        throw data_error("stack_design: K*d = " + std::to_string(rows) + " rows cannot determine " +
                         std::to_string(cols) + " coefficients; raise K or d");

    linalg::Matrix a(rows, cols);
    std::vector<double> b(rows);
    for (std::size_t traj = 0; traj < k; ++traj) {
        const auto& t = set.trajectories[traj];
        const std::vector<double>& x_start = t.state_at(set.total_steps);
        const std::vector<double>& x_target = t.state_at(target);
        for (std::size_t i = 0; i < d; ++i) {
            const std::size_t row = traj * d + i;
            a(row, 0) = x_start[i];
            for (std::size_t j = 1; j < cols; ++j) a(row, j) = t.output_at(prefix[j - 1])[i];
            b[row] = x_target[i];
        }
    }
    return {std::move(a), std::move(b)};
}

StepWeights solve_step_weights(const diffusion::TrajectorySet& set, std::span<const int> prefix, int target) {
    auto [a, b] = stack_design(set, prefix, target);
    const linalg::LeastSquaresSolution sol = linalg::solve_least_squares(a, b);
    return {sol.weights, normalized_residual(sol.residual_norm, set), sol.regularized};
}

double coefficient_residual(const diffusion::TrajectorySet& set, std::span<const int> prefix, int target,
                            std::span<const double> weights) {
    auto [a, b] = stack_design(set, prefix, target);
    if (weights.size() != a.cols()) throw std::invalid_argument("coefficient_residual: weight count mismatch");
    std::vector<double> r = linalg::matvec(a, weights);
    for (std::size_t i = 0; i < r.size(); ++i) r[i] -= b[i];
    return normalized_residual(norm2(r), set);
}

std::vector<double> ddim_coefficient_vector(const diffusion::NoiseSchedule& schedule, std::span<const int> prefix,
                                            int target) {
    // Unroll x_{t(i+1)} = s * x_{t(i)} + c * e_{t(i)} along the prefix; the
    // running x coefficient folds into every earlier slot.
    std::vector<double> coefs{1.0};  // slot 0: x_T
    for (std::size_t i = 0; i < prefix.size(); ++i) {
        const int t_cur = prefix[i];
        const int t_next = (i + 1 < prefix.size()) ? prefix[i + 1] : target;
        const double a_cur = schedule.alpha_at(t_cur);
        const double a_next = schedule.alpha_at(t_next);
        const double x_coef = std::sqrt(a_next / a_cur);
        const double e_coef = std::sqrt(1.0 - a_next) - x_coef * std::sqrt(1.0 - a_cur);
        for (double& c : coefs) c *= x_coef;
        coefs.push_back(e_coef);
    }
    return coefs;
}

NaiveSkipEstimate naive_skip_estimate(const diffusion::TrajectorySet& set, const diffusion::NoiseSchedule& schedule,
                                      std::span<const int> prefix, int target) {
    check_prefix(set, prefix, target);
    if (schedule.total_steps != set.total_steps)
        throw std::invalid_argument("naive_skip_estimate: schedule does not match trajectory set");
    const std::size_t k = static_cast<std::size_t>(set.count());
    const int t_start = prefix.back();

    auto [a, b_unused] = stack_design(set, prefix, target);
    (void)b_unused;
    const std::size_t cols = a.cols();

    // Basis values per trajectory, for applying fitted projection weights.
    std::vector<std::vector<const std::vector<double>*>> basis(k);
    for (std::size_t traj = 0; traj < k; ++traj) {
        basis[traj].push_back(&set.trajectories[traj].state_at(set.total_steps));
        for (std::size_t j = 0; j + 1 < cols; ++j)
            basis[traj].push_back(&set.trajectories[traj].output_at(prefix[j]));
    }

    std::vector<std::vector<double>> current(k);
    for (std::size_t traj = 0; traj < k; ++traj) current[traj] = set.trajectories[traj].state_at(t_start);

    for (int s = t_start; s > target; --s) {
        std::vector<std::vector<double>> outputs(k);
        if (s == t_start) {
            for (std::size_t traj = 0; traj < k; ++traj) outputs[traj] = set.trajectories[traj].output_at(s);
        } else {
            // Projection of the missing teacher output onto the basis (fit
            // once across the stacked trajectories, then applied per trajectory).
            std::vector<double> e_stacked(a.rows());
            for (std::size_t traj = 0; traj < k; ++traj) {
                const auto& e = set.trajectories[traj].output_at(s);
                std::copy(e.begin(), e.end(), e_stacked.begin() + static_cast<std::ptrdiff_t>(traj * e.size()));
            }
            const linalg::LeastSquaresSolution proj = linalg::solve_least_squares(a, e_stacked);
            for (std::size_t traj = 0; traj < k; ++traj) {
                std::vector<double> e(static_cast<std::size_t>(set.d), 0.0);
                for (std::size_t j = 0; j < cols; ++j) axpy(proj.weights[j], *basis[traj][j], e);
                outputs[traj] = std::move(e);
            }
        }
        for (std::size_t traj = 0; traj < k; ++traj)
            current[traj] = hop(schedule, current[traj], outputs[traj], s, s - 1);
    }

    NaiveSkipEstimate result;
    double sq = 0.0;
    for (std::size_t traj = 0; traj < k; ++traj) {
        const auto& truth = set.trajectories[traj].state_at(target);
        for (std::size_t i = 0; i < truth.size(); ++i) {
            const double diff = current[traj][i] - truth[i];
            sq += diff * diff;
        }
    }
    result.estimates = std::move(current);
    result.residual = normalized_residual(std::sqrt(sq), set);
    return result;
}

TrainingResidual::TrainingResidual(const diffusion::TrajectorySet& set) : set_(set) {
    if (set.count() < 1) throw std::invalid_argument("TrainingResidual: empty trajectory set");
}

double TrainingResidual::operator()(std::span<const int> prefix, int target) const {
    std::vector<int> key(prefix.begin(), prefix.end());
    key.push_back(target);
    {
        std::lock_guard<std::mutex> lock(mutex_);
        auto it = cache_.find(key);
        if (it != cache_.end()) return it->second;
    }
    const double residual = solve_step_weights(set_, prefix, target).residual;
    solves_.fetch_add(1);
    std::lock_guard<std::mutex> lock(mutex_);
    cache_.emplace(std::move(key), residual);
    return residual;
}

std::optional<int> find_next_step(const ResidualFn& residual, std::span<const int> prefix, double bound) {
    if (prefix.empty()) throw std::invalid_argument("find_next_step: prefix must be nonempty");
    if (bound < 0.0) throw std::invalid_argument("find_next_step: bound must be >= 0");
    const int t_cur = prefix.back();
    if (t_cur <= 0) return std::nullopt;

    int lo = 0;
    int hi = t_cur - 1;
    while (lo < hi) {
        const int mid = lo + (hi - lo) / 2;
        if (residual(prefix, mid) <= bound)
            hi = mid;
        else
            lo = mid + 1;
    }
    // The monotonicity assumption may not hold exactly; re-verify the answer.
    if (residual(prefix, lo) <= bound) return lo;
    return std::nullopt;
}

PathSearchResult find_path(const ResidualFn& residual, int n, double bound) {
    if (n < 1) throw std::invalid_argument("find_path: n must be >= 1");
    PathSearchResult result;
    std::vector<int> prefix{residual.total_steps()};
    for (int i = 1; i <= n; ++i) {
        const std::optional<int> next = find_next_step(residual, prefix, bound);
        if (!next) {
            result.status = PathSearchStatus::BoundTooSmall;
            return result;
        }
        if (*next == 0 && i < n) {
            result.status = PathSearchStatus::BoundTooLarge;
            return result;
        }
        prefix.push_back(*next);
    }
    if (prefix.back() > 0) {
        result.status = PathSearchStatus::BoundTooSmall;
        return result;
    }
    result.status = PathSearchStatus::Found;
    result.path.steps.assign(prefix.begin(), prefix.end() - 1);
    return result;
}

namespace {

std::vector<double> path_residuals(const ResidualFn& residual, const samplers::StepPath& path) {
    std::vector<double> out;
    out.reserve(path.steps.size());
    std::vector<int> prefix;
    for (std::size_t i = 0; i < path.steps.size(); ++i) {
        prefix.push_back(path.steps[i]);
        const int target = (i + 1 < path.steps.size()) ? path.steps[i + 1] : 0;
        out.push_back(residual(prefix, target));
    }
    return out;
}

}  // namespace

OptimizedPath optimize_path(const ResidualFn& residual, int n, double epsilon_rel) {
    if (!(epsilon_rel > 0.0)) throw std::invalid_argument("optimize_path: epsilon must be positive");
    const int total = residual.total_steps();
    const samplers::StepPath uniform = samplers::uniform_path(total, n);
    const std::vector<double> uniform_residuals = path_residuals(residual, uniform);
    const double bound_hi = *std::max_element(uniform_residuals.begin(), uniform_residuals.end());

    OptimizedPath best;
    best.bound_hi = bound_hi;
    best.path = uniform;  // feasible at bound_hi by construction

    if (bound_hi > 0.0) {
        PathSearchResult at_hi = find_path(residual, n, bound_hi);
        if (at_hi.found()) best.path = std::move(at_hi.path);

        double lo = 0.0;
        double hi = bound_hi;
        const double epsilon = epsilon_rel * bound_hi;
        while (hi - lo > epsilon) {
            const double mid = 0.5 * (lo + hi);
            PathSearchResult attempt = find_path(residual, n, mid);
            if (attempt.found()) {
                hi = mid;
                best.path = std::move(attempt.path);
            } else if (attempt.status == PathSearchStatus::BoundTooLarge) {
                hi = mid;  // the greedy walk overshot; the feasible band is below
            } else {
                lo = mid;
            }
        }
    }

    best.residuals = path_residuals(residual, best.path);
    best.d_star = *std::max_element(best.residuals.begin(), best.residuals.end());
    return best;
}

OlssScheduler train(const diffusion::TrajectorySet& set, int n, TrainMode mode, double epsilon_rel) {
    if (n < 1 || n > set.total_steps) throw std::invalid_argument("train: requires 1 <= n <= T");

    OlssScheduler scheduler;
    scheduler.trajectory_count = set.count();
    scheduler.d = set.d;
    scheduler.total_steps = set.total_steps;
    scheduler.schedule_descriptor = set.schedule_descriptor;
    scheduler.predictor_descriptor = set.predictor_descriptor;

    if (mode == TrainMode::Uniform) {
        scheduler.mode = "uniform";
        scheduler.path = samplers::uniform_path(set.total_steps, n);
    } else {
        scheduler.mode = "optimized";
        TrainingResidual residual(set);
        OptimizedPath optimized = optimize_path(residual, n, epsilon_rel);
        scheduler.path = std::move(optimized.path);
        scheduler.d_star = optimized.d_star;
    }

    std::vector<int> prefix;
    for (int i = 0; i < n; ++i) {
        prefix.push_back(scheduler.path.steps[static_cast<std::size_t>(i)]);
        const int target = (i + 1 < n) ? scheduler.path.steps[static_cast<std::size_t>(i + 1)] : 0;
        StepWeights sw = solve_step_weights(set, prefix, target);
        scheduler.weights.rows.push_back(std::move(sw.weights));
        scheduler.residuals.push_back(sw.residual);
    }
    scheduler.weights.validate();
    return scheduler;
}

samplers::SamplerRun sample(const OlssScheduler& scheduler, const diffusion::NoisePredictor& predictor,
                            std::vector<double> x_start) {
    if (static_cast<int>(x_start.size()) != scheduler.d)
        throw std::invalid_argument("sample: x_T dimension does not match the trained scheduler");
    if (predictor.dimension() != scheduler.d)
        throw std::invalid_argument("sample: predictor dimension does not match the trained scheduler");

    const int n = scheduler.path.length();
    samplers::SamplerRun run;
    run.path = scheduler.path;
    run.visited.reserve(static_cast<std::size_t>(n) + 1);
    run.outputs.reserve(static_cast<std::size_t>(n));
    run.visited.push_back(std::move(x_start));
    const std::vector<double>& x_initial = run.visited.front();

    for (int i = 1; i <= n; ++i) {
        const int t = scheduler.path.steps[static_cast<std::size_t>(i - 1)];
        run.outputs.push_back(predictor.predict(run.visited.back(), t));
        ++run.model_calls;

        const std::vector<double>& row = scheduler.weights.rows[static_cast<std::size_t>(i - 1)];
        std::vector<double> next(x_initial.size(), 0.0);
        axpy(row[0], x_initial, next);
        for (int j = 1; j <= i; ++j) axpy(row[static_cast<std::size_t>(j)], run.outputs[static_cast<std::size_t>(j - 1)], next);
        run.visited.push_back(std::move(next));
    }
    return run;
}

namespace {

// Decimal with enough digits for a bit-faithful round trip.
std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void write_double_array(std::ostream& out, std::span<const double> values) {
    out << "[";
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i) out << ", ";
        out << format_double(values[i]);
    }
    out << "]";
}

}  // namespace

void save_scheduler(const OlssScheduler& scheduler, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw data_error("cannot open for writing: " + path.string());
    out << "{\n";
    out << "  \"format_version\": 1,\n";
    out << "  \"T\": " << scheduler.total_steps << ",\n";
    out << "  \"d\": " << scheduler.d << ",\n";
    out << "  \"K\": " << scheduler.trajectory_count << ",\n";
    out << "  \"n\": " << scheduler.path.length() << ",\n";
    out << "  \"mode\": \"" << scheduler.mode << "\",\n";
    out << "  \"path\": [";
    for (int i = 0; i < scheduler.path.length(); ++i) {
        if (i) out << ", ";
        out << scheduler.path.steps[static_cast<std::size_t>(i)];
    }
    out << "],\n";
    if (scheduler.d_star) out << "  \"D_star\": " << format_double(*scheduler.d_star) << ",\n";
    out << "  \"residuals\": ";
    write_double_array(out, scheduler.residuals);
    out << ",\n";
    out << "  \"weights\": [\n";
    for (std::size_t i = 0; i < scheduler.weights.rows.size(); ++i) {
        out << "    ";
        write_double_array(out, scheduler.weights.rows[i]);
        out << (i + 1 < scheduler.weights.rows.size() ? ",\n" : "\n");
    }
    out << "  ],\n";
    out << "  \"schedule\": " << scheduler.schedule_descriptor.dump() << ",\n";
    out << "  \"predictor\": " << scheduler.predictor_descriptor.dump() << "\n";
    out << "}\n";
    if (!out) throw data_error("write failed: " + path.string());
}

OlssScheduler load_scheduler(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw data_error("cannot open for reading: " + path.string());
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw data_error("malformed scheduler file " + path.string() + ": " + e.what());
    }
    for (const char* field : {"format_version", "T", "d", "K", "n", "mode", "path", "residuals", "weights",
                              "schedule", "predictor"})
        if (!doc.contains(field))
            throw data_error("scheduler file " + path.string() + ": missing field '" + field + "'");
    if (doc.at("format_version").get<int>() != 1)
        throw data_error("scheduler file " + path.string() + ": unsupported field 'format_version'");

    OlssScheduler s;
    s.total_steps = doc.at("T").get<int>();
    s.d = doc.at("d").get<int>();
    s.trajectory_count = doc.at("K").get<int>();
    s.mode = doc.at("mode").get<std::string>();
    if (s.mode != "uniform" && s.mode != "optimized")
        throw data_error("scheduler file " + path.string() + ": invalid field 'mode'");
    s.path.steps = doc.at("path").get<std::vector<int>>();
    const int n = doc.at("n").get<int>();
    if (n != s.path.length()) throw data_error("scheduler file " + path.string() + ": field 'n' does not match 'path'");
    try {
        s.path.validate(s.total_steps);
    } catch (const std::invalid_argument& e) {
        throw data_error("scheduler file " + path.string() + ": invalid field 'path': " + e.what());
    }
    if (doc.contains("D_star")) s.d_star = doc.at("D_star").get<double>();
    s.residuals = doc.at("residuals").get<std::vector<double>>();
    if (s.residuals.size() != static_cast<std::size_t>(n))
        throw data_error("scheduler file " + path.string() + ": field 'residuals' must hold n values");
    s.weights.rows = doc.at("weights").get<std::vector<std::vector<double>>>();
    if (s.weights.count() != n)
        throw data_error("scheduler file " + path.string() + ": field 'weights' must hold n rows");
    try {
        s.weights.validate();
    } catch (const std::exception& e) {
        throw data_error("scheduler file " + path.string() + ": invalid field 'weights': " + e.what());
    }
    s.schedule_descriptor = doc.at("schedule");
    s.predictor_descriptor = doc.at("predictor");
    return s;
}

}  // namespace olss

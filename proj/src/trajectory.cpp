#include "olss/trajectory.hpp"

#include <atomic>
#include <bit>
#include <cmath>
#include <fstream>
#include <stdexcept>
#include <thread>

#include "olss/rng.hpp"
#include "olss/vec.hpp"

static_assert(std::endian::native == std::endian::little, "blob format assumes a little-endian host");

namespace olss::diffusion {

namespace {

std::runtime_error data_error(const std::string& msg) { return std::runtime_error(msg); }

void write_blob(const std::filesystem::path& path, const std::vector<std::vector<double>>& vectors) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw data_error("cannot open for writing: " + path.string());
    for (const auto& v : vectors)
        out.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(double)));
    if (!out) throw data_error("write failed: " + path.string());
}

std::vector<std::vector<double>> read_blob(const std::filesystem::path& path, std::size_t vectors, std::size_t d) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw data_error("cannot open for reading: " + path.string());
    in.seekg(0, std::ios::end);
    const auto size = static_cast<std::size_t>(in.tellg());
    const std::size_t expected = vectors * d * sizeof(double);
    if (size != expected)
        throw data_error("blob size mismatch in " + path.string() + ": expected " + std::to_string(expected) +
                         " bytes, found " + std::to_string(size));
    in.seekg(0, std::ios::beg);
    std::vector<std::vector<double>> out(vectors, std::vector<double>(d));
    for (auto& v : out) {
        in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(d * sizeof(double)));
        if (!in) throw data_error("read failed: " + path.string());
    }
    return out;
}

}  // namespace

nlohmann::json describe_schedule(const NoiseSchedule& schedule) {
    return {{"kind", schedule.kind},
            {"T", schedule.total_steps},
            {"beta_start", schedule.beta_start},
            {"beta_end", schedule.beta_end}};
}

NoiseSchedule schedule_from_descriptor(const nlohmann::json& descriptor) {
    for (const char* field : {"kind", "T", "beta_start", "beta_end"})
        if (!descriptor.contains(field))
            throw data_error(std::string("schedule descriptor: missing field '") + field + "'");
    const std::string kind = descriptor.at("kind").get<std::string>();
    if (kind != "linear") throw data_error("schedule descriptor: unknown kind '" + kind + "'");
    return make_linear_schedule(descriptor.at("T").get<int>(), descriptor.at("beta_start").get<double>(),
                                descriptor.at("beta_end").get<double>());
}

Trajectory full_generate(const NoiseSchedule& schedule, const NoisePredictor& predictor,
                         std::vector<double> x_start, Rng& rng) {
    const int steps = schedule.total_steps;
    const std::size_t d = x_start.size();
    if (static_cast<int>(d) != predictor.dimension())
        throw std::invalid_argument("full_generate: x_T dimension does not match predictor");

    Trajectory traj;
    traj.d = static_cast<int>(d);
    traj.states.reserve(static_cast<std::size_t>(steps) + 1);
    traj.outputs.reserve(static_cast<std::size_t>(steps));
    traj.states.push_back(std::move(x_start));

    for (int t = steps; t >= 1; --t) {
        const std::vector<double>& x = traj.states.back();
        std::vector<double> e = predictor.predict(x, t);
        const double alpha_cur = schedule.alpha_at(t);
        const double alpha_prev = schedule.alpha_at(t - 1);
        const double sigma = schedule.sigma[static_cast<std::size_t>(t)];

        std::vector<double> next;
        if (sigma == 0.0) {
            next = deterministic_hop(x, e, alpha_cur, alpha_prev);
        } else {
            const double direction = 1.0 - alpha_prev - sigma * sigma;
            if (direction < 0.0)
                throw std::runtime_error("full_generate: sigma too large at step " + std::to_string(t));
            const double sqrt_cur = std::sqrt(alpha_cur);
            const double sqrt_prev = std::sqrt(alpha_prev);
            const double noise_cur = std::sqrt(1.0 - alpha_cur);
            const double dir_coef = std::sqrt(direction);
            next.resize(d);
            for (std::size_t i = 0; i < d; ++i) {
                const double predicted_x0 = (x[i] - noise_cur * e[i]) / sqrt_cur;
                next[i] = sqrt_prev * predicted_x0 + dir_coef * e[i] + sigma * rng.gaussian();
            }
        }
        if (!all_finite(next))
            throw std::runtime_error("full_generate: non-finite state at step " + std::to_string(t - 1));
        traj.outputs.push_back(std::move(e));
        traj.states.push_back(std::move(next));
    }
    return traj;
}

TrajectorySet record_trajectory_set(const NoiseSchedule& schedule, const NoisePredictor& predictor, int count,
                                    std::uint64_t base_seed, int threads) {
    if (count < 1) throw std::invalid_argument("record_trajectory_set: K must be >= 1");
    const int d = predictor.dimension();

    TrajectorySet set;
    set.total_steps = schedule.total_steps;
    set.d = d;
    set.base_seed = base_seed;
    set.schedule_descriptor = describe_schedule(schedule);
    set.predictor_descriptor = predictor.describe();
    set.trajectories.resize(static_cast<std::size_t>(count));

    auto run_one = [&](int k) {
        const std::uint64_t seed = base_seed + static_cast<std::uint64_t>(k);
        Rng rng(seed);
        std::vector<double> x_start = rng.gaussian_vector(static_cast<std::size_t>(d));
        Trajectory traj = full_generate(schedule, predictor, std::move(x_start), rng);
        traj.seed = seed;
        set.trajectories[static_cast<std::size_t>(k)] = std::move(traj);
    };

    if (threads <= 1 || count == 1) {
        for (int k = 0; k < count; ++k) run_one(k);
    } else {
        std::vector<std::thread> pool;
        std::atomic<int> next{0};
        const int workers = std::min(threads, count);
        pool.reserve(static_cast<std::size_t>(workers));
        for (int w = 0; w < workers; ++w)
            pool.emplace_back([&] {
                for (int k = next.fetch_add(1); k < count; k = next.fetch_add(1)) run_one(k);
            });
        for (auto& th : pool) th.join();
    }
    return set;
}

void save_trajectory_set(const TrajectorySet& set, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    nlohmann::json manifest = {{"format_version", 1},
                               {"T", set.total_steps},
                               {"d", set.d},
                               {"K", set.count()},
                               {"base_seed", set.base_seed},
                               {"schedule", set.schedule_descriptor},
                               {"predictor", set.predictor_descriptor}};
    std::ofstream out(dir / "manifest.json", std::ios::trunc);
    if (!out) throw data_error("cannot open for writing: " + (dir / "manifest.json").string());
    out << manifest.dump(2) << "\n";
    if (!out) throw data_error("write failed: " + (dir / "manifest.json").string());

    for (int k = 0; k < set.count(); ++k) {
        const auto& traj = set.trajectories[static_cast<std::size_t>(k)];
        write_blob(dir / ("traj_" + std::to_string(k) + "_states.f64"), traj.states);
        write_blob(dir / ("traj_" + std::to_string(k) + "_outputs.f64"), traj.outputs);
    }
}

TrajectorySet load_trajectory_set(const std::filesystem::path& dir) {
    const auto manifest_path = dir / "manifest.json";
    std::ifstream in(manifest_path);
    if (!in) throw data_error("cannot open for reading: " + manifest_path.string());
    nlohmann::json manifest;
    try {
        manifest = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw data_error("malformed manifest " + manifest_path.string() + ": " + e.what());
    }
    for (const char* field : {"format_version", "T", "d", "K", "base_seed", "schedule", "predictor"})
        if (!manifest.contains(field))
            throw data_error("malformed manifest " + manifest_path.string() + ": missing field '" + field + "'");
    if (manifest.at("format_version").get<int>() != 1)
        throw data_error("manifest " + manifest_path.string() + ": unsupported format_version");

    TrajectorySet set;
    set.total_steps = manifest.at("T").get<int>();
    set.d = manifest.at("d").get<int>();
    set.base_seed = manifest.at("base_seed").get<std::uint64_t>();
    set.schedule_descriptor = manifest.at("schedule");
    set.predictor_descriptor = manifest.at("predictor");
    const int count = manifest.at("K").get<int>();
    if (set.total_steps < 1 || set.d < 1 || count < 1)
        throw data_error("manifest " + manifest_path.string() + ": T, d and K must be >= 1");

    const auto steps = static_cast<std::size_t>(set.total_steps);
    const auto d = static_cast<std::size_t>(set.d);
    set.trajectories.reserve(static_cast<std::size_t>(count));
    for (int k = 0; k < count; ++k) {
        Trajectory traj;
        traj.d = set.d;
        traj.seed = set.base_seed + static_cast<std::uint64_t>(k);
        traj.states = read_blob(dir / ("traj_" + std::to_string(k) + "_states.f64"), steps + 1, d);
        traj.outputs = read_blob(dir / ("traj_" + std::to_string(k) + "_outputs.f64"), steps, d);
        set.trajectories.push_back(std::move(traj));
    }
    return set;
}

}  // namespace olss::diffusion

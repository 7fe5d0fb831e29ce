#pragma once

#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "olss/matrix.hpp"
#include "olss/predictor.hpp"
#include "olss/schedule.hpp"

namespace testsupport {

/// Unique scratch directory, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        const auto base = std::filesystem::temp_directory_path();
        static std::mt19937_64 rng{std::random_device{}()};
        path_ = base / ("olss_" + tag + "_" + std::to_string(rng()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

/// Degenerate predictor: e = 0 everywhere. With a beta = 0.75 schedule every
/// state update is an exact power-of-two scaling, so recorded trajectories
/// are exactly representable.
class ZeroPredictor : public olss::diffusion::NoisePredictor {
public:
    explicit ZeroPredictor(int d) : d_(d) {}
    int dimension() const override { return d_; }
    std::vector<double> predict(std::span<const double> x, int) const override {
        return std::vector<double>(x.size(), 0.0);
    }
    nlohmann::json describe() const override { return {{"kind", "zero"}, {"parameters", nlohmann::json::object()}}; }

private:
    int d_;
};

inline olss::diffusion::NoiseSchedule pow2_schedule(int total_steps) {
    return olss::diffusion::make_linear_schedule(total_steps, 0.75, 0.75);
}

inline olss::linalg::Matrix isotropic(int d, double variance) {
    olss::linalg::Matrix m(static_cast<std::size_t>(d), static_cast<std::size_t>(d));
    for (int i = 0; i < d; ++i) m(static_cast<std::size_t>(i), static_cast<std::size_t>(i)) = variance;
    return m;
}

inline olss::linalg::Matrix seeded_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> dist(0.0, 1.0);
    olss::linalg::Matrix m(rows, cols);
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j) m(i, j) = dist(rng);
    return m;
}

inline std::vector<double> seeded_vector(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> dist(0.0, 1.0);
    std::vector<double> v(n);
    for (double& x : v) x = dist(rng);
    return v;
}

}  // namespace testsupport

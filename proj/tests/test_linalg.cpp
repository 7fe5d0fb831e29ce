#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "olss/linalg.hpp"
#include "olss/vec.hpp"
#include "test_support.hpp"

using olss::linalg::Matrix;
using testsupport::seeded_matrix;
using testsupport::seeded_vector;

namespace {

double max_abs(const Matrix& m) {
    double v = 0.0;
    for (double x : m.data()) v = std::max(v, std::abs(x));
    return v;
}

Matrix identity_gap(const Matrix& q) {
    Matrix g(q.cols(), q.cols());
    for (std::size_t i = 0; i < q.cols(); ++i)
        for (std::size_t j = 0; j < q.cols(); ++j) {
            double s = 0.0;
            for (std::size_t r = 0; r < q.rows(); ++r) s += q(r, i) * q(r, j);
            g(i, j) = s - ((i == j) ? 1.0 : 0.0);
        }
    return g;
}

double reconstruction_error(const Matrix& q, const Matrix& r, const Matrix& a) {
    const Matrix qr = olss::linalg::matmul(q, r);
    double s = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) {
            const double d = qr(i, j) - a(i, j);
            s += d * d;
        }
    return std::sqrt(s);
}

}  // namespace

TEST_CASE("qr of the identity is the identity") {
    const Matrix a = Matrix::identity(2);
    const auto [q, r, deficient] = olss::linalg::qr_decompose(a);
    CHECK_FALSE(deficient);
    for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t j = 0; j < 2; ++j) {
            CHECK(std::abs(std::abs(q(i, j)) - ((i == j) ? 1.0 : 0.0)) <= 1e-15);
            CHECK(std::abs(std::abs(r(i, j)) - ((i == j) ? 1.0 : 0.0)) <= 1e-15);
        }
}

TEST_CASE("qr of a single column is the normalized column") {
    Matrix a(2, 1, {3.0, 4.0});
    const auto [q, r, deficient] = olss::linalg::qr_decompose(a);
    CHECK_FALSE(deficient);
    CHECK(std::abs(std::abs(r(0, 0)) - 5.0) <= 1e-12);
    const double sign = r(0, 0) > 0 ? 1.0 : -1.0;
    CHECK(q(0, 0) * sign == doctest::Approx(0.6).epsilon(1e-12));
    CHECK(q(1, 0) * sign == doctest::Approx(0.8).epsilon(1e-12));
}

TEST_CASE("qr reconstructs seeded random matrices with orthonormal Q") {
    for (std::uint64_t seed : {11u, 12u, 13u}) {
        const Matrix a = seeded_matrix(20, 5, seed);
        const auto [q, r, deficient] = olss::linalg::qr_decompose(a);
        CHECK_FALSE(deficient);
        CHECK(max_abs(identity_gap(q)) <= 1e-10);
        CHECK(reconstruction_error(q, r, a) <= 1e-10 * std::max(1.0, olss::linalg::frobenius_norm(a)));
        for (std::size_t i = 1; i < r.rows(); ++i)
            for (std::size_t j = 0; j < i; ++j) CHECK(r(i, j) == 0.0);
    }
}

TEST_CASE("qr flags rank deficiency") {
    Matrix a(3, 2, {1.0, 2.0, 1.0, 2.0, 1.0, 2.0});  // second column is 2x the first
    const auto result = olss::linalg::qr_decompose(a);
    CHECK(result.rank_deficient);
}

TEST_CASE("qr rejects wide or non-finite input") {
    CHECK_THROWS_AS(olss::linalg::qr_decompose(Matrix(1, 2, {1.0, 2.0})), std::invalid_argument);
    Matrix bad(2, 1, {1.0, std::nan("")});
    CHECK_THROWS_AS(olss::linalg::qr_decompose(bad), std::invalid_argument);
}

TEST_CASE("least squares solves an exact system") {
    Matrix a(2, 2, {1.0, 0.0, 0.0, 1.0});
    const auto sol = olss::linalg::solve_least_squares(a, std::vector<double>{3.0, 4.0});
    CHECK(sol.weights[0] == doctest::Approx(3.0).epsilon(1e-14));
    CHECK(sol.weights[1] == doctest::Approx(4.0).epsilon(1e-14));
    CHECK(sol.residual_norm <= 1e-14);
    CHECK_FALSE(sol.regularized);
}

TEST_CASE("least squares of a constant column is the mean") {
    Matrix a(3, 1, {1.0, 1.0, 1.0});
    const auto sol = olss::linalg::solve_least_squares(a, std::vector<double>{1.0, 2.0, 3.0});
    CHECK(sol.weights[0] == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(sol.residual_norm == doctest::Approx(std::sqrt(2.0)).epsilon(1e-14));
}

TEST_CASE("least squares satisfies the normal equations and dominates probes") {
    std::mt19937_64 rng(99);
    std::normal_distribution<double> dist(0.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t rows = 8 + static_cast<std::size_t>(trial) * 3;
        const std::size_t cols = 2 + static_cast<std::size_t>(trial) % 5;
        const Matrix a = seeded_matrix(rows, cols, 1000 + static_cast<std::uint64_t>(trial));
        const std::vector<double> b = seeded_vector(rows, 2000 + static_cast<std::uint64_t>(trial));
        const auto sol = olss::linalg::solve_least_squares(a, b);

        std::vector<double> residual = olss::linalg::matvec(a, sol.weights);
        for (std::size_t i = 0; i < rows; ++i) residual[i] -= b[i];
        const std::vector<double> gradient = olss::linalg::matvec_transposed(a, residual);
        double gap = 0.0;
        for (double g : gradient) gap = std::max(gap, std::abs(g));
        const double scale = olss::linalg::frobenius_norm(a) * std::max(1.0, olss::norm2(b));
        CHECK(gap <= 1e-8 * scale);

        for (int probe = 0; probe < 100; ++probe) {
            std::vector<double> v(cols);
            for (double& x : v) x = dist(rng);
            std::vector<double> rv = olss::linalg::matvec(a, v);
            for (std::size_t i = 0; i < rows; ++i) rv[i] -= b[i];
            CHECK(sol.residual_norm <= olss::norm2(rv) + 1e-12);
        }
    }
}

TEST_CASE("least squares falls back to ridge on near-dependent columns") {
    Matrix a(4, 2);
    for (std::size_t i = 0; i < 4; ++i) {
        a(i, 0) = static_cast<double>(i) + 1.0;
        a(i, 1) = (static_cast<double>(i) + 1.0) * (1.0 + 1e-15);
    }
    const std::vector<double> b{1.0, 2.0, 3.0, 4.0};
    const auto sol = olss::linalg::solve_least_squares(a, b);
    CHECK(sol.regularized);
    CHECK(olss::all_finite(sol.weights));
    CHECK(sol.residual_norm <= 1e-6);
}

TEST_CASE("least squares zeroes out exactly-zero columns without ridge") {
    Matrix a(4, 2);
    for (std::size_t i = 0; i < 4; ++i) a(i, 0) = static_cast<double>(i) + 1.0;
    std::vector<double> b{2.0, 4.0, 6.0, 8.0};
    const auto sol = olss::linalg::solve_least_squares(a, b);
    CHECK_FALSE(sol.regularized);
    CHECK(sol.weights[0] == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(sol.weights[1] == 0.0);
}

TEST_CASE("pearson correlation of identical vectors is all ones") {
    const std::vector<std::vector<double>> vectors{{1.0, 2.0, 5.0}, {1.0, 2.0, 5.0}};
    const Matrix c = olss::linalg::pearson_correlation_matrix(vectors);
    for (double v : c.data()) CHECK(v == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("pearson correlation detects exact anticorrelation") {
    const Matrix c = olss::linalg::pearson_correlation_matrix({{1.0, 2.0, 3.0}, {3.0, 2.0, 1.0}});
    CHECK(c(0, 1) == doctest::Approx(-1.0).epsilon(1e-14));
    CHECK(c(1, 0) == doctest::Approx(-1.0).epsilon(1e-14));
    CHECK(c(0, 0) == 1.0);
    CHECK(c(1, 1) == 1.0);
}

TEST_CASE("pearson correlation matches the direct covariance formula") {
    const std::vector<std::vector<double>> vectors{{1.0, 2.0, 3.0}, {1.0, 2.0, 4.0}};
    const Matrix c = olss::linalg::pearson_correlation_matrix(vectors);
    // direct evaluation: cov / sqrt(var_a * var_b), computed independently here
    const double mean_a = 2.0, mean_b = 7.0 / 3.0;
    double cov = 0.0, va = 0.0, vb = 0.0;
    for (int i = 0; i < 3; ++i) {
        const double da = vectors[0][static_cast<std::size_t>(i)] - mean_a;
        const double db = vectors[1][static_cast<std::size_t>(i)] - mean_b;
        cov += da * db;
        va += da * da;
        vb += db * db;
    }
    const double expected = cov / std::sqrt(va * vb);
    CHECK(expected == doctest::Approx(0.9819805060619657).epsilon(1e-12));
    CHECK(c(0, 1) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("pearson correlation is symmetric with unit diagonal on random input") {
    std::vector<std::vector<double>> vectors;
    for (int i = 0; i < 6; ++i) vectors.push_back(seeded_vector(40, 3000 + static_cast<std::uint64_t>(i)));
    const Matrix c = olss::linalg::pearson_correlation_matrix(vectors);
    for (std::size_t i = 0; i < c.rows(); ++i) {
        CHECK(c(i, i) == 1.0);
        for (std::size_t j = 0; j < c.cols(); ++j) {
            CHECK(std::abs(c(i, j) - c(j, i)) <= 1e-12);
            CHECK(c(i, j) >= -1.0);
            CHECK(c(i, j) <= 1.0);
        }
    }
}

TEST_CASE("pearson correlation names the zero-variance vector") {
    const std::vector<std::vector<double>> vectors{{1.0, 2.0, 3.0}, {5.0, 5.0, 5.0}};
    CHECK_THROWS_WITH_AS(olss::linalg::pearson_correlation_matrix(vectors),
                         doctest::Contains("vector 1"), std::invalid_argument);
}

TEST_CASE("pca on an axis-aligned cloud finds the axis with zero second variance") {
    const std::vector<std::vector<double>> points{{1.0, 0.0, 0.0}, {2.0, 0.0, 0.0}, {4.0, 0.0, 0.0}, {7.0, 0.0, 0.0}};
    const auto basis = olss::linalg::pca_fit(points);
    CHECK(std::abs(std::abs(basis.components[0][0]) - 1.0) <= 1e-12);
    CHECK(std::abs(basis.components[0][1]) <= 1e-12);
    CHECK(std::abs(basis.components[0][2]) <= 1e-12);
    CHECK(basis.explained_variance[1] == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("pca finds the diagonal of a near-collinear cloud") {
    const std::vector<std::vector<double>> points{{0.0, 0.0}, {1.0, 1.0}, {2.0, 2.0}, {3.0, 3.01}};
    const auto basis = olss::linalg::pca_fit(points);
    const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    CHECK(std::abs(basis.components[0][0] - inv_sqrt2) <= 1e-2);
    CHECK(std::abs(basis.components[0][1] - inv_sqrt2) <= 1e-2);
    CHECK(basis.explained_variance[0] >= basis.explained_variance[1]);
}

TEST_CASE("pca reconstructs rank-2 point clouds exactly") {
    std::mt19937_64 rng(77);
    std::normal_distribution<double> dist(0.0, 1.0);
    const std::size_t d = 7;
    std::vector<double> u(d), v(d);
    for (double& x : u) x = dist(rng);
    for (double& x : v) x = dist(rng);
    std::vector<std::vector<double>> points;
    for (int i = 0; i < 12; ++i) {
        std::vector<double> p(d, 0.5);
        const double a = dist(rng), b = 0.3 * dist(rng);
        for (std::size_t j = 0; j < d; ++j) p[j] += a * u[j] + b * v[j];
        points.push_back(std::move(p));
    }
    const auto basis = olss::linalg::pca_fit(points);
    CHECK(std::abs(olss::norm2(basis.components[0]) - 1.0) <= 1e-10);
    CHECK(std::abs(olss::norm2(basis.components[1]) - 1.0) <= 1e-10);
    CHECK(std::abs(olss::dot(basis.components[0], basis.components[1])) <= 1e-10);
    for (const auto& p : points) {
        const auto [p1, p2] = olss::linalg::pca_project(basis, p);
        std::vector<double> rec = basis.mean;
        olss::axpy(p1, basis.components[0], rec);
        olss::axpy(p2, basis.components[1], rec);
        CHECK(olss::max_abs_diff(rec, p) <= 1e-8);
    }
}

TEST_CASE("pca rejects identical points") {
    const std::vector<std::vector<double>> points{{1.0, 2.0}, {1.0, 2.0}, {1.0, 2.0}};
    CHECK_THROWS_AS(olss::linalg::pca_fit(points), std::invalid_argument);
}

TEST_CASE("pca projection basics") {
    const std::vector<std::vector<double>> points{{0.0, 0.0}, {1.0, 0.2}, {2.0, 0.1}, {3.0, 0.4}};
    const auto basis = olss::linalg::pca_fit(points);
    const auto [m1, m2] = olss::linalg::pca_project(basis, basis.mean);
    CHECK(std::abs(m1) <= 1e-12);
    CHECK(std::abs(m2) <= 1e-12);
    std::vector<double> shifted = basis.mean;
    olss::axpy(1.0, basis.components[0], shifted);
    const auto [s1, s2] = olss::linalg::pca_project(basis, shifted);
    CHECK(std::abs(s1 - 1.0) <= 1e-10);
    CHECK(std::abs(s2) <= 1e-10);
    CHECK_THROWS_AS(olss::linalg::pca_project(basis, std::vector<double>{1.0, 2.0, 3.0}), std::invalid_argument);
}

TEST_CASE("cholesky solves SPD systems and rejects indefinite ones") {
    Matrix a(2, 2, {4.0, 1.0, 1.0, 3.0});
    const Matrix l = olss::linalg::cholesky(a);
    const std::vector<double> x = olss::linalg::cholesky_solve(l, std::vector<double>{1.0, 2.0});
    const std::vector<double> back = olss::linalg::matvec(a, x);
    CHECK(back[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(back[1] == doctest::Approx(2.0).epsilon(1e-12));
    Matrix indefinite(2, 2, {1.0, 2.0, 2.0, 1.0});
    CHECK_THROWS_AS(olss::linalg::cholesky(indefinite), std::invalid_argument);
}

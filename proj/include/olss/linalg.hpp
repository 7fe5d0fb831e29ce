#pragma once

#include <array>
#include <span>
#include <utility>
#include <vector>

#include "olss/matrix.hpp"

namespace olss::linalg {

struct QrResult {
    Matrix q;  // rows x cols, orthonormal columns
    Matrix r;  // cols x cols, upper triangular
    bool rank_deficient = false;
};

/// Thin QR factorization by Householder reflections. Requires rows >= cols
/// and finite entries. rank_deficient is set when any |R(k,k)| <= 1e-12 * ||A||_F;
/// the factors are still returned and the caller decides how to proceed.
QrResult qr_decompose(const Matrix& a);

struct LeastSquaresSolution {
    std::vector<double> weights;   // one per column of A
    double residual_norm = 0.0;    // ||A*w - b||_2
    bool regularized = false;      // true when the ridge fallback was used
};

/// Minimizes ||A*w - b||_2 via QR and back-substitution. Columns that are
/// exactly zero get weight 0 and are excluded from the factorization; if the
/// remaining columns are still rank deficient the solve is repeated with
/// ridge regularization lambda = 1e-10 * ||A||_F^2 and flagged.
LeastSquaresSolution solve_least_squares(const Matrix& a, std::span<const double> b);

/// Pearson correlation of each pair of vectors over their elements.
/// Symmetric, unit diagonal, entries in [-1, 1].
Matrix pearson_correlation_matrix(const std::vector<std::vector<double>>& vectors);

struct PcaBasis {
    std::vector<double> mean;
    std::array<std::vector<double>, 2> components;   // orthonormal
    std::array<double, 2> explained_variance{};      // descending, >= 0
};

/// Top-2 PCA of the sample covariance, computed by orthogonal (block power)
/// iteration with a 2x2 Rayleigh-Ritz step. Component signs are fixed so the
/// largest-magnitude entry of each component is positive.
PcaBasis pca_fit(const std::vector<std::vector<double>>& points);

/// ((point - mean) . c1, (point - mean) . c2)
std::pair<double, double> pca_project(const PcaBasis& basis, std::span<const double> point);

/// Cholesky factor L (lower triangular, row-major) of an SPD matrix.
/// Throws std::invalid_argument when the matrix is not positive definite.
Matrix cholesky(const Matrix& a);

/// Solves L * L^T * x = b given the Cholesky factor L.
std::vector<double> cholesky_solve(const Matrix& l, std::span<const double> b);

}  // namespace olss::linalg

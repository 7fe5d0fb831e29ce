#include "olss/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "olss/vec.hpp"

namespace olss::linalg {

namespace {

constexpr double kRankTolerance = 1e-12;

// Column-major workspace for the Householder sweep; keeps the inner loops
// unit-stride for tall matrices.
struct ColMajor {
    std::size_t m, n;
    std::vector<double> a;  // column j at a[j*m]

    ColMajor(std::size_t rows, std::size_t cols) : m(rows), n(cols), a(rows * cols, 0.0) {}

    explicit ColMajor(const Matrix& src) : m(src.rows()), n(src.cols()), a(m * n) {
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < n; ++j) a[j * m + i] = src(i, j);
    }

    double* col(std::size_t j) { return a.data() + j * m; }
    const double* col(std::size_t j) const { return a.data() + j * m; }
};

struct HouseholderQr {
    ColMajor work;                // reflectors below the diagonal, R on and above
    std::vector<double> beta;     // 2 / (v^T v) per reflector, 0 for a skipped column
    std::vector<double> diag;     // R(k,k)
    double norm_a = 0.0;
    bool rank_deficient = false;

    explicit HouseholderQr(const Matrix& a) : work(a), beta(a.cols(), 0.0), diag(a.cols(), 0.0) {
        const std::size_t m = work.m, n = work.n;
        norm_a = 0.0;
        for (double v : work.a) norm_a += v * v;
        norm_a = std::sqrt(norm_a);

        for (std::size_t k = 0; k < n; ++k) {
            double* x = work.col(k);
            double sigma = 0.0;
            for (std::size_t i = k; i < m; ++i) sigma += x[i] * x[i];
            const double alpha = std::sqrt(sigma);
            if (alpha == 0.0) {
                diag[k] = 0.0;
                rank_deficient = true;
                continue;
            }
            const double pivot = (x[k] >= 0.0) ? -alpha : alpha;
            const double v0 = x[k] - pivot;
            // v = (v0, x[k+1..m)); H = I - beta v v^T maps column k to pivot*e_k
            const double vtv = v0 * v0 + (sigma - x[k] * x[k]);
            const double bk = (vtv > 0.0) ? 2.0 / vtv : 0.0;
            x[k] = v0;
            beta[k] = bk;
            diag[k] = pivot;

            for (std::size_t j = k + 1; j < n; ++j) {
                double* c = work.col(j);
                double s = 0.0;
                for (std::size_t i = k; i < m; ++i) s += x[i] * c[i];
                s *= bk;
                for (std::size_t i = k; i < m; ++i) c[i] -= s * x[i];
            }
        }
        const double tol = kRankTolerance * norm_a;
        for (std::size_t k = 0; k < n; ++k)
            if (std::abs(diag[k]) <= tol) rank_deficient = true;
    }

    // Applies Q^T to a vector of length m, in place.
    void apply_qt(std::span<double> y) const {
        const std::size_t m = work.m, n = work.n;
        for (std::size_t k = 0; k < n; ++k) {
            if (beta[k] == 0.0) continue;
            const double* v = work.col(k);
            double s = v[k] * y[k];
            for (std::size_t i = k + 1; i < m; ++i) s += v[i] * y[i];
            s *= beta[k];
            y[k] -= s * v[k];
            for (std::size_t i = k + 1; i < m; ++i) y[i] -= s * v[i];
        }
    }

    Matrix r_factor() const {
        const std::size_t n = work.n;
        Matrix r(n, n);
        for (std::size_t k = 0; k < n; ++k) {
            r(k, k) = diag[k];
            for (std::size_t i = 0; i < k; ++i) r(i, k) = work.col(k)[i];
        }
        return r;
    }

    Matrix q_factor() const {
        const std::size_t m = work.m, n = work.n;
        ColMajor q(m, n);
        for (std::size_t j = 0; j < n; ++j) q.col(j)[j] = 1.0;
        // Q = H_0 H_1 ... H_{n-1} * I_thin: apply reflectors in reverse.
        for (std::size_t kk = work.n; kk-- > 0;) {
            if (beta[kk] == 0.0) continue;
            const double* v = work.col(kk);
            for (std::size_t j = 0; j < n; ++j) {
                double* c = q.col(j);
                double s = v[kk] * c[kk];
                for (std::size_t i = kk + 1; i < m; ++i) s += v[i] * c[i];
                s *= beta[kk];
                c[kk] -= s * v[kk];
                for (std::size_t i = kk + 1; i < m; ++i) c[i] -= s * v[i];
            }
        }
        Matrix out(m, n);
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < n; ++j) out(i, j) = q.col(j)[i];
        return out;
    }

    // Back-substitution on R w = y[0..n). Assumes nonzero diagonal.
    std::vector<double> back_substitute(std::span<const double> y) const {
        const std::size_t n = work.n;
        std::vector<double> w(n, 0.0);
        for (std::size_t kk = n; kk-- > 0;) {
            double s = y[kk];
            for (std::size_t j = kk + 1; j < n; ++j) s -= work.col(j)[kk] * w[j];
            w[kk] = s / diag[kk];
        }
        return w;
    }
};

void check_matrix_finite(const Matrix& a, const char* what) {
    if (!all_finite(a.data())) throw std::invalid_argument(std::string(what) + ": non-finite entry in matrix");
}

std::vector<double> residual_vector(const Matrix& a, std::span<const double> w, std::span<const double> b) {
    std::vector<double> r = matvec(a, w);
    for (std::size_t i = 0; i < r.size(); ++i) r[i] -= b[i];
    return r;
}

LeastSquaresSolution solve_full_rank(const Matrix& a, std::span<const double> b, bool& deficient) {
    HouseholderQr qr(a);
    deficient = qr.rank_deficient;
    if (deficient) return {};
    std::vector<double> y(b.begin(), b.end());
    qr.apply_qt(y);
    LeastSquaresSolution sol;
    sol.weights = qr.back_substitute(y);
    sol.residual_norm = norm2(residual_vector(a, sol.weights, b));
    return sol;
}

// Minimizes ||A w - b||^2 + lambda ||w||^2 via QR of the stacked system
// [A; sqrt(lambda) I] w = [b; 0].
LeastSquaresSolution solve_ridge(const Matrix& a, std::span<const double> b, double lambda) {
    const std::size_t m = a.rows(), n = a.cols();
    Matrix aug(m + n, n);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) aug(i, j) = a(i, j);
    const double s = std::sqrt(lambda);
    for (std::size_t j = 0; j < n; ++j) aug(m + j, j) = s;
    std::vector<double> b_aug(m + n, 0.0);
    std::copy(b.begin(), b.end(), b_aug.begin());

    bool deficient = false;
    LeastSquaresSolution sol = solve_full_rank(aug, b_aug, deficient);
    if (deficient) throw std::runtime_error("solve_least_squares: ridge system still rank deficient");
    sol.residual_norm = norm2(residual_vector(a, sol.weights, b));
    sol.regularized = true;
    return sol;
}

}  // namespace

QrResult qr_decompose(const Matrix& a) {
    if (a.rows() < a.cols()) throw std::invalid_argument("qr_decompose: requires rows >= cols");
    check_matrix_finite(a, "qr_decompose");
    HouseholderQr qr(a);
    return {qr.q_factor(), qr.r_factor(), qr.rank_deficient};
}

LeastSquaresSolution solve_least_squares(const Matrix& a, std::span<const double> b) {
    if (b.size() != a.rows()) throw std::invalid_argument("solve_least_squares: b length != rows");
    if (a.rows() < a.cols()) throw std::invalid_argument("solve_least_squares: requires rows >= cols");
    check_matrix_finite(a, "solve_least_squares");
    require_finite(b, "solve_least_squares: b");

    const std::size_t m = a.rows(), n = a.cols();

    // Exactly-zero columns carry no information; give them weight 0 so that
    // degenerate inputs (an all-zero predictor output) stay exact.
    std::vector<std::size_t> live;
    live.reserve(n);
    for (std::size_t j = 0; j < n; ++j) {
        bool zero = true;
        for (std::size_t i = 0; i < m && zero; ++i) zero = (a(i, j) == 0.0);
        if (!zero) live.push_back(j);
    }

    if (live.empty()) {
        LeastSquaresSolution sol;
        sol.weights.assign(n, 0.0);
        sol.residual_norm = norm2(b);
        return sol;
    }

    const Matrix* sys = &a;
    Matrix reduced;
    if (live.size() != n) {
        if (m < live.size()) throw std::invalid_argument("solve_least_squares: requires rows >= cols");
        reduced = Matrix(m, live.size());
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < live.size(); ++j) reduced(i, j) = a(i, live[j]);
        sys = &reduced;
    }

    bool deficient = false;
    LeastSquaresSolution sol = solve_full_rank(*sys, b, deficient);
    if (deficient) {
        const double norm_a = frobenius_norm(a);
        sol = solve_ridge(*sys, b, 1e-10 * norm_a * norm_a);
    }

    if (live.size() != n) {
        std::vector<double> full(n, 0.0);
        for (std::size_t j = 0; j < live.size(); ++j) full[live[j]] = sol.weights[j];
        sol.weights = std::move(full);
        sol.residual_norm = norm2(residual_vector(a, sol.weights, b));
    }
    return sol;
}

Matrix pearson_correlation_matrix(const std::vector<std::vector<double>>& vectors) {
    const std::size_t k = vectors.size();
    if (k < 2) throw std::invalid_argument("pearson_correlation_matrix: needs >= 2 vectors");
    const std::size_t len = vectors[0].size();
    if (len < 2) throw std::invalid_argument("pearson_correlation_matrix: vectors must have length >= 2");
    for (std::size_t i = 0; i < k; ++i) {
        if (vectors[i].size() != len)
            throw std::invalid_argument("pearson_correlation_matrix: vector " + std::to_string(i) + " has mismatched length");
        require_finite(vectors[i], "pearson_correlation_matrix: vector " + std::to_string(i));
    }

    // Centered copies plus their norms.
    std::vector<std::vector<double>> dev(k);
    std::vector<double> ss(k, 0.0);
    for (std::size_t i = 0; i < k; ++i) {
        double mean = 0.0;
        for (double v : vectors[i]) mean += v;
        mean /= static_cast<double>(len);
        dev[i].resize(len);
        for (std::size_t j = 0; j < len; ++j) dev[i][j] = vectors[i][j] - mean;
        ss[i] = dot(dev[i], dev[i]);
        if (ss[i] == 0.0)
            throw std::invalid_argument("pearson_correlation_matrix: vector " + std::to_string(i) + " has zero variance");
    }

    Matrix c(k, k);
    for (std::size_t i = 0; i < k; ++i) {
        c(i, i) = 1.0;
        for (std::size_t j = i + 1; j < k; ++j) {
            double r = dot(dev[i], dev[j]) / std::sqrt(ss[i] * ss[j]);
            r = std::clamp(r, -1.0, 1.0);
            c(i, j) = r;
            c(j, i) = r;
        }
    }
    return c;
}

namespace {

std::vector<double> apply_sym(const Matrix& c, std::span<const double> v) { return matvec(c, v); }

void orthonormalize_pair(std::vector<double>& v1, std::vector<double>& v2) {
    const double n1 = norm2(v1);
    if (n1 > 0.0) scale(v1, 1.0 / n1);
    const double proj = dot(v2, v1);
    axpy(-proj, v1, v2);
    const double n2 = norm2(v2);
    if (n2 > 0.0) scale(v2, 1.0 / n2);
}

// Deterministic unit vector orthogonal to v: take the basis vector with the
// smallest |v_j| and orthogonalize.
std::vector<double> orthogonal_unit(std::span<const double> v) {
    std::size_t j_min = 0;
    for (std::size_t j = 1; j < v.size(); ++j)
        if (std::abs(v[j]) < std::abs(v[j_min])) j_min = j;
    std::vector<double> u(v.size(), 0.0);
    u[j_min] = 1.0;
    const double proj = dot(u, v);
    for (std::size_t j = 0; j < v.size(); ++j) u[j] -= proj * v[j];
    const double n = norm2(u);
    scale(u, 1.0 / n);
    return u;
}

void fix_sign(std::vector<double>& v) {
    std::size_t j_max = 0;
    for (std::size_t j = 1; j < v.size(); ++j)
        if (std::abs(v[j]) > std::abs(v[j_max])) j_max = j;
    if (v[j_max] < 0.0) scale(v, -1.0);
}

}  // namespace

PcaBasis pca_fit(const std::vector<std::vector<double>>& points) {
    const std::size_t count = points.size();
    if (count < 3) throw std::invalid_argument("pca_fit: needs >= 3 points");
    const std::size_t d = points[0].size();
    if (d < 2) throw std::invalid_argument("pca_fit: ambient dimension must be >= 2");
    for (const auto& p : points) {
        if (p.size() != d) throw std::invalid_argument("pca_fit: point dimension mismatch");
        require_finite(p, "pca_fit: point");
    }

    PcaBasis basis;
    basis.mean.assign(d, 0.0);
    for (const auto& p : points) axpy(1.0, p, basis.mean);
    scale(basis.mean, 1.0 / static_cast<double>(count));

    Matrix cov(d, d);
    for (const auto& p : points) {
        std::vector<double> c(d);
        for (std::size_t j = 0; j < d; ++j) c[j] = p[j] - basis.mean[j];
        for (std::size_t i = 0; i < d; ++i)
            for (std::size_t j = i; j < d; ++j) cov(i, j) += c[i] * c[j];
    }
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = i; j < d; ++j) {
            cov(i, j) /= static_cast<double>(count - 1);
            cov(j, i) = cov(i, j);
        }

    const double cov_norm = frobenius_norm(cov);
    if (cov_norm == 0.0) throw std::invalid_argument("pca_fit: degenerate covariance (all points identical)");

    // Start from the two coordinate axes with the largest diagonal variance.
    std::size_t j1 = 0;
    for (std::size_t j = 1; j < d; ++j)
        if (cov(j, j) > cov(j1, j1)) j1 = j;
    std::size_t j2 = (j1 == 0) ? 1 : 0;
    for (std::size_t j = 0; j < d; ++j)
        if (j != j1 && cov(j, j) > cov(j2, j2)) j2 = j;

    std::vector<double> v1(d, 0.0), v2(d, 0.0);
    v1[j1] = 1.0;
    v2[j2] = 1.0;

    constexpr int kMaxIter = 20000;
    constexpr double kTol = 1e-15;
    for (int iter = 0; iter < kMaxIter; ++iter) {
        std::vector<double> w1 = apply_sym(cov, v1);
        std::vector<double> w2 = apply_sym(cov, v2);
        const double n1 = norm2(w1);
        if (n1 <= kTol * cov_norm) break;  // rank-0 block; keep previous iterate
        scale(w1, 1.0 / n1);
        const double p = dot(w2, w1);
        axpy(-p, w1, w2);
        const double n2 = norm2(w2);
        if (n2 <= kTol * cov_norm)
            w2 = orthogonal_unit(w1);
        else
            scale(w2, 1.0 / n2);

        const double delta = std::max(max_abs_diff(w1, v1), max_abs_diff(w2, v2));
        v1 = std::move(w1);
        v2 = std::move(w2);
        if (delta <= 1e-14 && iter > 0) break;
    }

    // Rayleigh-Ritz on the 2D subspace: eigen-decompose the projected 2x2 matrix.
    const std::vector<double> cv1 = apply_sym(cov, v1);
    const std::vector<double> cv2 = apply_sym(cov, v2);
    const double a11 = dot(v1, cv1), a12 = dot(v1, cv2), a22 = dot(v2, cv2);
    const double tr = a11 + a22;
    const double det = a11 * a22 - a12 * a12;
    const double disc = std::sqrt(std::max(0.0, tr * tr / 4.0 - det));
    const double lam1 = tr / 2.0 + disc;
    const double lam2 = tr / 2.0 - disc;

    std::vector<double> c1(d, 0.0), c2(d, 0.0);
    // Eigenvector of [[a11,a12],[a12,a22]] for lam1 in subspace coordinates.
    double u1, u2;
    if (std::abs(a12) > 1e-300) {
        u1 = lam1 - a22;
        u2 = a12;
    } else if (a11 >= a22) {
        u1 = 1.0;
        u2 = 0.0;
    } else {
        u1 = 0.0;
        u2 = 1.0;
    }
    const double un = std::sqrt(u1 * u1 + u2 * u2);
    u1 /= un;
    u2 /= un;
    for (std::size_t j = 0; j < d; ++j) {
        c1[j] = u1 * v1[j] + u2 * v2[j];
        c2[j] = -u2 * v1[j] + u1 * v2[j];
    }
    orthonormalize_pair(c1, c2);
    fix_sign(c1);
    fix_sign(c2);

    basis.components[0] = std::move(c1);
    basis.components[1] = std::move(c2);
    basis.explained_variance[0] = std::max(0.0, lam1);
    basis.explained_variance[1] = std::max(0.0, lam2);
    return basis;
}

std::pair<double, double> pca_project(const PcaBasis& basis, std::span<const double> point) {
    if (point.size() != basis.mean.size()) throw std::invalid_argument("pca_project: dimension mismatch");
    double p1 = 0.0, p2 = 0.0;
    for (std::size_t j = 0; j < point.size(); ++j) {
        const double c = point[j] - basis.mean[j];
        p1 += c * basis.components[0][j];
        p2 += c * basis.components[1][j];
    }
    return {p1, p2};
}

Matrix cholesky(const Matrix& a) {
    if (a.rows() != a.cols()) throw std::invalid_argument("cholesky: matrix must be square");
    check_matrix_finite(a, "cholesky");
    const std::size_t n = a.rows();
    Matrix l(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            double s = a(i, j);
            for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
            if (i == j) {
                if (s <= 0.0) throw std::invalid_argument("cholesky: matrix not positive definite");
                l(i, i) = std::sqrt(s);
            } else {
                l(i, j) = s / l(j, j);
            }
        }
    }
    return l;
}

std::vector<double> cholesky_solve(const Matrix& l, std::span<const double> b) {
    const std::size_t n = l.rows();
    if (b.size() != n) throw std::invalid_argument("cholesky_solve: dimension mismatch");
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) {
        double s = b[i];
        for (std::size_t k = 0; k < i; ++k) s -= l(i, k) * y[k];
        y[i] = s / l(i, i);
    }
    std::vector<double> x(n);
    for (std::size_t ii = n; ii-- > 0;) {
        double s = y[ii];
        for (std::size_t k = ii + 1; k < n; ++k) s -= l(k, ii) * x[k];
        x[ii] = s / l(ii, ii);
    }
    return x;
}

}  // namespace olss::linalg

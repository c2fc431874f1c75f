#include "specbound/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "specbound/kernels.hpp"

namespace specbound {

bool Matrix::all_finite() const {
    for (double v : data)
        if (!std::isfinite(v)) return false;
    return true;
}

double matrix_norm(const Matrix& m, NormKind kind) {
    if (m.empty()) throw UsageError("matrix_norm: empty matrix");
    switch (kind) {
        case NormKind::frobenius: {
            double s = 0.0;
            for (double v : m.data) s += v * v;
            return std::sqrt(s);
        }
        case NormKind::two_one: {
            double total = 0.0;
            for (std::size_t j = 0; j < m.cols; ++j) {
                double s = 0.0;
                for (std::size_t i = 0; i < m.rows; ++i) s += m(i, j) * m(i, j);
                total += std::sqrt(s);
            }
            return total;
        }
        case NormKind::one_inf: {
            double best = 0.0;
            for (std::size_t i = 0; i < m.rows; ++i) {
                double s = 0.0;
                for (std::size_t j = 0; j < m.cols; ++j) s += std::fabs(m(i, j));
                best = std::max(best, s);
            }
            return best;
        }
    }
    throw UsageError("matrix_norm: unknown norm kind");
}

namespace {

double vec_norm(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

void scale(std::vector<double>& v, double c) {
    for (double& x : v) x *= c;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

// Largest eigenvalue of a small symmetric p x p matrix by cyclic Jacobi.
double small_symmetric_top(std::vector<double>& b, std::size_t p) {
    const double eps = std::numeric_limits<double>::epsilon();
    for (std::size_t sweep = 0; sweep < 64; ++sweep) {
        double off = 0.0, diag = 0.0;
        for (std::size_t i = 0; i < p; ++i) {
            diag += std::fabs(b[i * p + i]);
            for (std::size_t j = i + 1; j < p; ++j) off += std::fabs(b[i * p + j]);
        }
        if (off <= eps * (diag + off)) break;
        for (std::size_t i = 0; i < p; ++i)
            for (std::size_t j = i + 1; j < p; ++j) {
                const double aij = b[i * p + j];
                if (aij == 0.0) continue;
                const double tau = (b[j * p + j] - b[i * p + i]) / (2.0 * aij);
                const double t = (tau >= 0.0 ? 1.0 : -1.0) /
                                 (std::fabs(tau) + std::sqrt(1.0 + tau * tau));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = t * c;
                for (std::size_t k = 0; k < p; ++k) {
                    const double bik = b[i * p + k], bjk = b[j * p + k];
                    b[i * p + k] = c * bik - s * bjk;
                    b[j * p + k] = s * bik + c * bjk;
                }
                for (std::size_t k = 0; k < p; ++k) {
                    const double bki = b[k * p + i], bkj = b[k * p + j];
                    b[k * p + i] = c * bki - s * bkj;
                    b[k * p + j] = s * bki + c * bkj;
                }
            }
    }
    double top = b[0];
    for (std::size_t i = 1; i < p; ++i) top = std::max(top, b[i * p + i]);
    return top;
}

// Orthonormalize the columns in place (modified Gram-Schmidt, two passes).
// Columns that collapse to zero are refilled with deterministic Gaussians so
// the block keeps full rank on rank-deficient operators.
void orthonormalize(std::vector<std::vector<double>>& v, std::uint64_t salt) {
    for (std::size_t j = 0; j < v.size(); ++j) {
        for (int attempt = 0; attempt < 4; ++attempt) {
            const double n0 = vec_norm(v[j]);
            for (int pass = 0; pass < 2; ++pass)
                for (std::size_t k = 0; k < j; ++k) {
                    const double c = dot(v[k], v[j]);
                    for (std::size_t i = 0; i < v[j].size(); ++i)
                        v[j][i] -= c * v[k][i];
                }
            const double n = vec_norm(v[j]);
            // A residual far below the pre-projection norm is rounding
            // noise with no reliable direction, not a usable basis vector.
            if (std::isfinite(n) && n > 1e-8 * n0 && n > 0.0) {
                scale(v[j], 1.0 / n);
                break;
            }
            Rng refill(salt * 1024 + j * 4 + static_cast<std::uint64_t>(attempt) + 1);
            for (double& x : v[j]) x = refill.gaussian();
        }
    }
}

}  // namespace

double spectral_norm(const Matrix& m, double tol, std::size_t max_iter) {
    if (m.empty()) throw InputError("spectral_norm: empty matrix");
    if (tol <= 0.0) throw InputError("spectral_norm: tol must be positive");
    if (!m.all_finite()) throw InputError("spectral_norm: non-finite entries");

    // Zero matrix short-circuit (power iteration cannot leave the origin).
    if (matrix_norm(m, NormKind::frobenius) == 0.0) return 0.0;

    // Below ~25% density the compressed form wins; bitwise-equal results.
    kernels::SparseOp sp;
    bool use_sparse = false;
    if (m.size() >= 4096) {
        sp = kernels::SparseOp::from_dense(m);
        use_sparse = sp.nnz() * 4 <= m.size();
    }

    // Block simultaneous iteration on M^T M with Rayleigh-Ritz extraction.
    // A single power vector converges at rate (s2/s1)^2, which crawls when
    // the top singular values cluster (circulant operators carry conjugate
    // frequency pairs with equal values); a block absorbs the cluster and
    // converges at the rate set by the first value outside the block. The
    // start is a fixed-seed Gaussian block: a structured start (e.g. all
    // ones) is an exact eigenvector of circulant operators and can trap the
    // iteration in the wrong invariant subspace.
    const std::size_t p = std::min<std::size_t>(4, m.cols);
    std::vector<std::vector<double>> v(p, std::vector<double>(m.cols));
    {
        Rng start(0x5eed5eed5eed5eedULL);
        for (auto& col : v)
            for (double& x : col) x = start.gaussian();
        orthonormalize(v, 0);
    }
    std::vector<std::vector<double>> w(p, std::vector<double>(m.cols));
    std::vector<std::vector<double>> mid(p, std::vector<double>(m.rows));
    std::vector<const double*> xv(p), xm(p);
    std::vector<double*> ym(p), yw(p);
    std::vector<double> ritz(p * p);

    double theta_prev = 0.0;
    double change_prev = std::numeric_limits<double>::infinity();
    std::size_t tiny_streak = 0;
    const double eps = std::numeric_limits<double>::epsilon();

    // Aitken extrapolation over samples k iterations apart: once the error
    // decays as a single geometric mode, the spaced differences measure the
    // rate accurately enough to jump to the limit.
    constexpr std::size_t kSpacing = 32;
    std::vector<double> spaced;  // top Ritz value at it = kSpacing, 2*kSpacing, ...
    double aitken_prev = std::numeric_limits<double>::infinity();
    std::size_t aitken_streak = 0;

    for (std::size_t it = 0; it < max_iter; ++it) {
        for (std::size_t j = 0; j < p; ++j) {
            xv[j] = v[j].data();
            ym[j] = mid[j].data();
            xm[j] = mid[j].data();
            yw[j] = w[j].data();
        }
        if (use_sparse) {
            sp.apply_block(xv.data(), ym.data(), p);
            sp.apply_t_block(xm.data(), yw.data(), p);
        } else {
            kernels::matvec_block(m, xv.data(), ym.data(), p);
            kernels::matvec_t_block(m, xm.data(), yw.data(), p);
        }
        // theta = top eigenvalue of V^T (M^T M) V with V orthonormal.
        for (std::size_t i = 0; i < p; ++i)
            for (std::size_t j = i; j < p; ++j) {
                const double bij = dot(v[i], w[j]);
                ritz[i * p + j] = bij;
                ritz[j * p + i] = bij;
            }
        const double theta = small_symmetric_top(ritz, p);
        if (!std::isfinite(theta))
            throw ConvergenceError("spectral_norm: iteration diverged",
                                   std::sqrt(std::max(theta_prev, 0.0)));

        v.swap(w);
        orthonormalize(v, static_cast<std::uint64_t>(it) + 1);

        const double change = std::fabs(theta - theta_prev);
        if (it > 0) {
            // Extrapolate the geometric tail: remaining error ~ change * r/(1-r).
            const double ratio = change_prev > 0.0 ? change / change_prev : 0.0;
            const double remaining =
                (ratio < 1.0) ? change * ratio / (1.0 - ratio)
                              : std::numeric_limits<double>::infinity();
            const bool at_noise_floor = change <= 8.0 * eps * theta;
            // A small change alone is not convergence: a slow geometric tail
            // crawls at ratio -> 1, so the extrapolated tail must also be
            // below tolerance (or the change be pure rounding noise).
            if (change <= tol * theta &&
                (remaining <= tol * theta || at_noise_floor)) {
                if (++tiny_streak >= 2) return std::sqrt(theta);
            } else {
                tiny_streak = 0;
            }
            if ((it + 1) % kSpacing == 0) {
                spaced.push_back(theta);
                const std::size_t n = spaced.size();
                bool stable = false;
                if (n >= 3) {
                    // Widest power-of-two stride with three samples in
                    // history: wider strides shrink the geometric ratio per
                    // step, which keeps the d1 - d2 cancellation above the
                    // rounding floor when the spectral gap is tiny.
                    std::size_t stride = 1;
                    while (4 * stride <= n - 1) stride *= 2;
                    const double d1 =
                        spaced[n - 1 - stride] - spaced[n - 1 - 2 * stride];
                    const double d2 = spaced[n - 1] - spaced[n - 1 - stride];
                    const double denom = d1 - d2;
                    if (denom > 0.0 && d2 > 0.0 && d2 < d1) {
                        const double limit = spaced[n - 1] + d2 * d2 / denom;
                        const double correction = limit - theta;
                        if (correction >= 0.0 && correction <= 0.01 * theta &&
                            std::fabs(limit - aitken_prev) <= 0.02 * tol * theta) {
                            if (++aitken_streak >= 2) return std::sqrt(limit);
                            stable = true;
                        }
                        aitken_prev = limit;
                    }
                }
                if (!stable) aitken_streak = 0;
            }
        }
        theta_prev = theta;
        change_prev = change > 0.0 ? change : eps * theta;
    }
    throw ConvergenceError("spectral_norm: no convergence within max_iter",
                           std::sqrt(std::max(theta_prev, 0.0)));
}

double stable_rank(const Matrix& m, NormKind kind) {
    const double s2 = spectral_norm(m);
    if (s2 <= 0.0) throw InputError("stable_rank: zero matrix");
    const double nb = matrix_norm(m, kind);
    return (nb * nb) / (s2 * s2);
}

Matrix gaussian_matrix(std::size_t rows, std::size_t cols, double sigma, Rng& rng) {
    if (sigma < 0.0) throw InputError("gaussian_matrix: negative sigma");
    Matrix m(rows, cols);
    for (double& v : m.data) v = rng.gaussian(sigma);
    return m;
}

}  // namespace specbound

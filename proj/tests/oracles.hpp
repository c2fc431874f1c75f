#pragma once

// Test-side reference implementations, written independently of the library
// code they check: a dense Jacobi eigensolver for singular values, direct
// circular convolution, and finite-difference derivatives.

#include <cmath>
#include <cstddef>
#include <vector>

#include "specbound/matrix.hpp"
#include "specbound/structured.hpp"

namespace oracle {

// All eigenvalues of a symmetric matrix by cyclic Jacobi rotations.
inline std::vector<double> jacobi_eigenvalues(std::vector<double> a, std::size_t n) {
    for (int sweep = 0; sweep < 200; ++sweep) {
        double off = 0.0;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) off += a[p * n + q] * a[p * n + q];
        if (off <= 1e-300) break;
        double diag = 0.0;
        for (std::size_t p = 0; p < n; ++p) diag += a[p * n + p] * a[p * n + p];
        if (off <= 1e-32 * (diag + 1e-300)) break;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = a[p * n + q];
                if (apq == 0.0) continue;
                const double theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    const double akp = a[k * n + p], akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double apk = a[p * n + k], aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
            }
    }
    std::vector<double> eig(n);
    for (std::size_t p = 0; p < n; ++p) eig[p] = a[p * n + p];
    return eig;
}

// Largest singular value via Jacobi on the smaller Gram matrix.
inline double spectral_norm(const specbound::Matrix& m) {
    const bool use_cols = m.cols <= m.rows;
    const std::size_t n = use_cols ? m.cols : m.rows;
    std::vector<double> g(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            double s = 0.0;
            if (use_cols)
                for (std::size_t k = 0; k < m.rows; ++k) s += m(k, i) * m(k, j);
            else
                for (std::size_t k = 0; k < m.cols; ++k) s += m(i, k) * m(j, k);
            g[i * n + j] = s;
        }
    double best = 0.0;
    for (double e : jacobi_eigenvalues(std::move(g), n)) best = std::max(best, e);
    return std::sqrt(std::max(best, 0.0));
}

// y = conv operator applied to x, by direct summation over output channels,
// sites, input channels, and taps (circular indexing, anchor at offset 0).
inline std::vector<double> circular_conv_apply(const specbound::FilterBank& fb,
                                               const std::vector<double>& x) {
    const specbound::ConvShape& sh = fb.shape;
    const int N = sh.N;
    std::vector<double> y(fb.shape.op_rows(), 0.0);
    if (sh.dims == 1) {
        for (int o = 0; o < sh.b; ++o)
            for (int pos = 0; pos < N; ++pos) {
                double s = 0.0;
                for (int j = 0; j < sh.a; ++j)
                    for (int k = 0; k < sh.q; ++k)
                        s += fb.tap(o, j, k) * x[static_cast<std::size_t>(j) * N + (pos + k) % N];
                y[static_cast<std::size_t>(o) * N + pos] = s;
            }
    } else {
        for (int o = 0; o < sh.b; ++o)
            for (int py = 0; py < N; ++py)
                for (int px = 0; px < N; ++px) {
                    double s = 0.0;
                    for (int j = 0; j < sh.a; ++j)
                        for (int k1 = 0; k1 < sh.q; ++k1)
                            for (int k2 = 0; k2 < sh.q; ++k2)
                                s += fb.tap(o, j, k1 * sh.q + k2) *
                                     x[(static_cast<std::size_t>(j) * N + (py + k1) % N) * N +
                                       (px + k2) % N];
                    y[(static_cast<std::size_t>(o) * N + py) * N + px] = s;
                }
    }
    return y;
}

// Dense materialization of the conv operator, column by column.
inline specbound::Matrix circular_conv_matrix(const specbound::FilterBank& fb) {
    specbound::Matrix m(fb.shape.op_rows(), fb.shape.op_cols());
    std::vector<double> e(fb.shape.op_cols(), 0.0);
    for (std::size_t c = 0; c < m.cols; ++c) {
        e[c] = 1.0;
        const std::vector<double> col = circular_conv_apply(fb, e);
        for (std::size_t r = 0; r < m.rows; ++r) m(r, c) = col[r];
        e[c] = 0.0;
    }
    return m;
}

// central finite difference of f at x along coordinate i
template <typename F>
double central_diff(F&& f, std::vector<double> x, std::size_t i, double h) {
    const double xi = x[i];
    x[i] = xi + h;
    const double fp = f(x);
    x[i] = xi - h;
    const double fm = f(x);
    return (fp - fm) / (2.0 * h);
}

}  // namespace oracle

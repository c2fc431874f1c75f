#pragma once

#include <cstddef>
#include <vector>

#include "specbound/errors.hpp"
#include "specbound/rng.hpp"

namespace specbound {

// Dense real matrix, row-major.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0)
        : rows(r), cols(c), data(r * c, fill) {}

    double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

    bool empty() const { return rows == 0 || cols == 0; }
    std::size_t size() const { return rows * cols; }

    static Matrix identity(std::size_t n) {
        Matrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    Matrix transposed() const {
        Matrix t(cols, rows);
        for (std::size_t i = 0; i < rows; ++i)
            for (std::size_t j = 0; j < cols; ++j) t(j, i) = (*this)(i, j);
        return t;
    }

    bool all_finite() const;
};

enum class NormKind { frobenius, two_one, one_inf };

// frobenius / (2,1) sum of column l2 norms / max row l1 sum
double matrix_norm(const Matrix& m, NormKind kind);

// Largest singular value by block power iteration on M^T M (block size 4,
// Rayleigh-Ritz extraction, deterministic fixed-seed Gaussian start). tol is
// the relative tolerance on the top Ritz value (geometric-tail extrapolation
// decides convergence, so the returned value is accurate to ~tol even when
// the top singular values cluster).
double spectral_norm(const Matrix& m, double tol = 1e-9, std::size_t max_iter = 200000);

// ||m||_kind^2 / ||m||_2^2
double stable_rank(const Matrix& m, NormKind kind = NormKind::frobenius);

// i.i.d. N(0, sigma^2) entries, row-major fill order
Matrix gaussian_matrix(std::size_t rows, std::size_t cols, double sigma, Rng& rng);

}  // namespace specbound

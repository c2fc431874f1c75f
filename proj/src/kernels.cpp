#include "specbound/kernels.hpp"

#include <cstdint>

namespace specbound::kernels {

void matvec_serial(const Matrix& m, const double* x, double* y) {
    const std::size_t r = m.rows, c = m.cols;
    const double* a = m.data.data();
    for (std::size_t i = 0; i < r; ++i) {
        const double* row = a + i * c;
        double s = 0.0;
        for (std::size_t j = 0; j < c; ++j) s += row[j] * x[j];
        y[i] = s;
    }
}

void matvec(const Matrix& m, const double* x, double* y) {
    const std::int64_t r = static_cast<std::int64_t>(m.rows);
    const std::size_t c = m.cols;
    const double* a = m.data.data();
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < r; ++i) {
        const double* row = a + static_cast<std::size_t>(i) * c;
        double s = 0.0;
        for (std::size_t j = 0; j < c; ++j) s += row[j] * x[j];
        y[i] = s;
    }
}

void matvec_t_serial(const Matrix& m, const double* x, double* y) {
    const std::size_t r = m.rows, c = m.cols;
    const double* a = m.data.data();
    for (std::size_t j = 0; j < c; ++j) {
        double s = 0.0;
        for (std::size_t i = 0; i < r; ++i) s += a[i * c + j] * x[i];
        y[j] = s;
    }
}

void matvec_t(const Matrix& m, const double* x, double* y) {
    const std::size_t r = m.rows;
    const std::int64_t c = static_cast<std::int64_t>(m.cols);
    const double* a = m.data.data();
#pragma omp parallel for schedule(static)
    for (std::int64_t j = 0; j < c; ++j) {
        double s = 0.0;
        for (std::size_t i = 0; i < r; ++i) s += a[i * m.cols + static_cast<std::size_t>(j)] * x[i];
        y[j] = s;
    }
}

void matvec_block_serial(const Matrix& m, const double* const* x,
                         double* const* y, std::size_t nvec) {
    const std::size_t r = m.rows, c = m.cols;
    const double* a = m.data.data();
    for (std::size_t i = 0; i < r; ++i) {
        const double* row = a + i * c;
        double s[kMaxBlock] = {0.0};
        for (std::size_t j = 0; j < c; ++j) {
            const double v = row[j];
            for (std::size_t t = 0; t < nvec; ++t) s[t] += v * x[t][j];
        }
        for (std::size_t t = 0; t < nvec; ++t) y[t][i] = s[t];
    }
}

void matvec_block(const Matrix& m, const double* const* x, double* const* y,
                  std::size_t nvec) {
    const std::int64_t r = static_cast<std::int64_t>(m.rows);
    const std::size_t c = m.cols;
    const double* a = m.data.data();
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < r; ++i) {
        const double* row = a + static_cast<std::size_t>(i) * c;
        double s[kMaxBlock] = {0.0};
        for (std::size_t j = 0; j < c; ++j) {
            const double v = row[j];
            for (std::size_t t = 0; t < nvec; ++t) s[t] += v * x[t][j];
        }
        for (std::size_t t = 0; t < nvec; ++t) y[t][i] = s[t];
    }
}

void matvec_t_block_serial(const Matrix& m, const double* const* x,
                           double* const* y, std::size_t nvec) {
    const std::size_t r = m.rows, c = m.cols;
    const double* a = m.data.data();
    for (std::size_t j = 0; j < c; ++j) {
        double s[kMaxBlock] = {0.0};
        for (std::size_t i = 0; i < r; ++i) {
            const double v = a[i * c + j];
            for (std::size_t t = 0; t < nvec; ++t) s[t] += v * x[t][i];
        }
        for (std::size_t t = 0; t < nvec; ++t) y[t][j] = s[t];
    }
}

void matvec_t_block(const Matrix& m, const double* const* x, double* const* y,
                    std::size_t nvec) {
    const std::size_t r = m.rows;
    const std::int64_t c = static_cast<std::int64_t>(m.cols);
    const double* a = m.data.data();
#pragma omp parallel for schedule(static)
    for (std::int64_t j = 0; j < c; ++j) {
        double s[kMaxBlock] = {0.0};
        for (std::size_t i = 0; i < r; ++i) {
            const double v = a[i * m.cols + static_cast<std::size_t>(j)];
            for (std::size_t t = 0; t < nvec; ++t) s[t] += v * x[t][i];
        }
        for (std::size_t t = 0; t < nvec; ++t) y[t][static_cast<std::size_t>(j)] = s[t];
    }
}

SparseOp SparseOp::from_dense(const Matrix& m) {
    SparseOp op;
    op.rows = m.rows;
    op.cols = m.cols;
    op.row_ptr.assign(m.rows + 1, 0);
    op.col_ptr.assign(m.cols + 1, 0);
    for (std::size_t i = 0; i < m.rows; ++i) {
        for (std::size_t j = 0; j < m.cols; ++j) {
            if (m(i, j) != 0.0) {
                ++op.row_ptr[i + 1];
                ++op.col_ptr[j + 1];
            }
        }
    }
    for (std::size_t i = 0; i < m.rows; ++i) op.row_ptr[i + 1] += op.row_ptr[i];
    for (std::size_t j = 0; j < m.cols; ++j) op.col_ptr[j + 1] += op.col_ptr[j];
    const std::size_t nnz = op.row_ptr[m.rows];
    op.col_idx.resize(nnz);
    op.row_val.resize(nnz);
    op.row_idx.resize(nnz);
    op.col_val.resize(nnz);
    std::vector<std::size_t> rfill(op.row_ptr.begin(), op.row_ptr.end() - 1);
    std::vector<std::size_t> cfill(op.col_ptr.begin(), op.col_ptr.end() - 1);
    for (std::size_t i = 0; i < m.rows; ++i) {
        for (std::size_t j = 0; j < m.cols; ++j) {
            const double v = m(i, j);
            if (v != 0.0) {
                op.col_idx[rfill[i]] = j;
                op.row_val[rfill[i]++] = v;
                op.row_idx[cfill[j]] = i;
                op.col_val[cfill[j]++] = v;
            }
        }
    }
    return op;
}

void SparseOp::apply_serial(const double* x, double* y) const {
    for (std::size_t i = 0; i < rows; ++i) {
        double s = 0.0;
        for (std::size_t k = row_ptr[i]; k < row_ptr[i + 1]; ++k) s += row_val[k] * x[col_idx[k]];
        y[i] = s;
    }
}

void SparseOp::apply(const double* x, double* y) const {
    const std::int64_t r = static_cast<std::int64_t>(rows);
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < r; ++i) {
        double s = 0.0;
        for (std::size_t k = row_ptr[i]; k < row_ptr[i + 1]; ++k) s += row_val[k] * x[col_idx[k]];
        y[i] = s;
    }
}

void SparseOp::apply_t_serial(const double* x, double* y) const {
    for (std::size_t j = 0; j < cols; ++j) {
        double s = 0.0;
        for (std::size_t k = col_ptr[j]; k < col_ptr[j + 1]; ++k) s += col_val[k] * x[row_idx[k]];
        y[j] = s;
    }
}

void SparseOp::apply_t(const double* x, double* y) const {
    const std::int64_t c = static_cast<std::int64_t>(cols);
#pragma omp parallel for schedule(static)
    for (std::int64_t j = 0; j < c; ++j) {
        double s = 0.0;
        for (std::size_t k = col_ptr[j]; k < col_ptr[j + 1]; ++k) s += col_val[k] * x[row_idx[k]];
        y[j] = s;
    }
}

void SparseOp::apply_block_serial(const double* const* x, double* const* y,
                                  std::size_t nvec) const {
    for (std::size_t i = 0; i < rows; ++i) {
        double s[kMaxBlock] = {0.0};
        for (std::size_t k = row_ptr[i]; k < row_ptr[i + 1]; ++k) {
            const double v = row_val[k];
            const std::size_t j = col_idx[k];
            for (std::size_t t = 0; t < nvec; ++t) s[t] += v * x[t][j];
        }
        for (std::size_t t = 0; t < nvec; ++t) y[t][i] = s[t];
    }
}

void SparseOp::apply_block(const double* const* x, double* const* y,
                           std::size_t nvec) const {
    const std::int64_t r = static_cast<std::int64_t>(rows);
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < r; ++i) {
        double s[kMaxBlock] = {0.0};
        for (std::size_t k = row_ptr[i]; k < row_ptr[i + 1]; ++k) {
            const double v = row_val[k];
            const std::size_t j = col_idx[k];
            for (std::size_t t = 0; t < nvec; ++t) s[t] += v * x[t][j];
        }
        for (std::size_t t = 0; t < nvec; ++t) y[t][static_cast<std::size_t>(i)] = s[t];
    }
}

void SparseOp::apply_t_block_serial(const double* const* x, double* const* y,
                                    std::size_t nvec) const {
    for (std::size_t j = 0; j < cols; ++j) {
        double s[kMaxBlock] = {0.0};
        for (std::size_t k = col_ptr[j]; k < col_ptr[j + 1]; ++k) {
            const double v = col_val[k];
            const std::size_t i = row_idx[k];
            for (std::size_t t = 0; t < nvec; ++t) s[t] += v * x[t][i];
        }
        for (std::size_t t = 0; t < nvec; ++t) y[t][j] = s[t];
    }
}

void SparseOp::apply_t_block(const double* const* x, double* const* y,
                             std::size_t nvec) const {
    const std::int64_t c = static_cast<std::int64_t>(cols);
#pragma omp parallel for schedule(static)
    for (std::int64_t j = 0; j < c; ++j) {
        double s[kMaxBlock] = {0.0};
        for (std::size_t k = col_ptr[j]; k < col_ptr[j + 1]; ++k) {
            const double v = col_val[k];
            const std::size_t i = row_idx[k];
            for (std::size_t t = 0; t < nvec; ++t) s[t] += v * x[t][i];
        }
        for (std::size_t t = 0; t < nvec; ++t) y[t][static_cast<std::size_t>(j)] = s[t];
    }
}

}  // namespace specbound::kernels

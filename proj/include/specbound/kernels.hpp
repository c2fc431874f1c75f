#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "specbound/matrix.hpp"

// Data-parallel inner kernels. Each exists in an OpenMP variant (default)
// and a serial reference used by the tests and the benchmark. Every output
// element is an independent reduction over a fixed index order, so results
// are identical regardless of thread count.
namespace specbound::kernels {

// y = M x
void matvec(const Matrix& m, const double* x, double* y);
void matvec_serial(const Matrix& m, const double* x, double* y);

// y = M^T x
void matvec_t(const Matrix& m, const double* x, double* y);
void matvec_t_serial(const Matrix& m, const double* x, double* y);

// Blocked variants: y[t] = M x[t] (resp. M^T x[t]) for nvec <= 8 vectors in
// one pass over the matrix. The per-column reduction order matches the
// single-vector kernels, so each output is bitwise identical to nvec
// independent calls; the single pass just amortizes the memory traffic.
void matvec_block(const Matrix& m, const double* const* x, double* const* y,
                  std::size_t nvec);
void matvec_block_serial(const Matrix& m, const double* const* x,
                         double* const* y, std::size_t nvec);
void matvec_t_block(const Matrix& m, const double* const* x, double* const* y,
                    std::size_t nvec);
void matvec_t_block_serial(const Matrix& m, const double* const* x,
                           double* const* y, std::size_t nvec);

// CSR/CSC views of a dense matrix; adding skipped zeros is exact in IEEE
// arithmetic, so the sparse products agree bit-for-bit with the dense ones.
struct SparseOp {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<std::size_t> row_ptr, col_idx;
    std::vector<double> row_val;
    std::vector<std::size_t> col_ptr, row_idx;
    std::vector<double> col_val;

    static SparseOp from_dense(const Matrix& m);
    std::size_t nnz() const { return row_val.size(); }

    void apply(const double* x, double* y) const;          // y = M x
    void apply_t(const double* x, double* y) const;        // y = M^T x
    void apply_serial(const double* x, double* y) const;
    void apply_t_serial(const double* x, double* y) const;

    // Blocked variants, bitwise identical to nvec independent calls.
    void apply_block(const double* const* x, double* const* y,
                     std::size_t nvec) const;
    void apply_block_serial(const double* const* x, double* const* y,
                            std::size_t nvec) const;
    void apply_t_block(const double* const* x, double* const* y,
                       std::size_t nvec) const;
    void apply_t_block_serial(const double* const* x, double* const* y,
                              std::size_t nvec) const;
};

inline constexpr std::size_t kMaxBlock = 8;

}  // namespace specbound::kernels

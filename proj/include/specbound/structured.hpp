#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "specbound/matrix.hpp"
#include "specbound/rng.hpp"

namespace specbound {

// Geometry of a multi-channel circular convolution: q taps per axis,
// a input channels, b output channels, N-point feature map per axis.
struct ConvShape {
    int dims = 1;  // 1 or 2
    int q = 1;     // filter length per axis
    int a = 1;     // input channels
    int b = 1;     // output channels
    int N = 1;     // feature-map length per axis

    void validate() const;
    int taps_per_filter() const { return dims == 2 ? q * q : q; }
    int sites() const { return dims == 2 ? N * N : N; }  // spatial positions
    std::size_t op_rows() const { return static_cast<std::size_t>(b) * sites(); }
    std::size_t op_cols() const { return static_cast<std::size_t>(a) * sites(); }
};

// Real filter taps, indexed [out channel][in channel][tap] with the tap
// coordinate row-major (k1*q + k2) in the 2-d case.
struct FilterBank {
    ConvShape shape;
    std::vector<double> taps;

    FilterBank() = default;
    explicit FilterBank(const ConvShape& s)
        : shape(s),
          taps(static_cast<std::size_t>(s.b) * s.a * s.taps_per_filter(), 0.0) {}

    double& tap(int o, int i, int k) {
        return taps[(static_cast<std::size_t>(o) * shape.a + i) * shape.taps_per_filter() + k];
    }
    double tap(int o, int i, int k) const {
        return taps[(static_cast<std::size_t>(o) * shape.a + i) * shape.taps_per_filter() + k];
    }
};

enum class PerturbKind { conv, locally_connected, sparse_fc, dense_gaussian };

// Structurally-nonzero coordinates of a perturbation matrix.
struct SupportPattern {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<std::pair<std::uint32_t, std::uint32_t>> coords;  // sorted (row, col)
};

struct SupportStats {
    double sigma1;      // max over rows of sqrt(row nonzero count)
    double sigma2;      // max over columns of sqrt(column nonzero count)
    double sigma_star;  // 1 for indicator weights
};

SupportPattern conv_support(const ConvShape& shape);  // same set for locally connected
SupportPattern sparse_fc_support(std::size_t rows, std::size_t cols, std::size_t s);
SupportPattern dense_support(std::size_t rows, std::size_t cols);
SupportStats support_stats(const SupportPattern& p);

// Dense b*N^dims x a*N^dims operator for circular cross-correlation with
// tap anchor at offset 0: row (o,y) sums f^{oj}_k * x_j[(y+k) mod N].
Matrix build_conv_operator(const FilterBank& fb);

// Exact operator norm via DFT block diagonalization: max over the N^dims
// frequencies of the spectral norm of the complex b x a block whose (i,j)
// entry is the N-point DFT of the zero-padded filter f^{ij}. Each block norm
// is computed to machine precision (Jacobi on the Hermitian Gram matrix).
double conv_spectral_norm_exact(const FilterBank& fb);

// i.i.d. N(0, sigma^2) taps
FilterBank sample_conv_perturbation(const ConvShape& shape, double sigma, Rng& rng);
// i.i.d. N(0, sigma^2) exactly on the pattern, zero elsewhere
Matrix sample_pattern_perturbation(const SupportPattern& p, double sigma, Rng& rng);

struct McParams {
    PerturbKind kind = PerturbKind::conv;
    ConvShape shape;                 // conv / locally_connected
    std::size_t fc_rows = 0, fc_cols = 0, fc_s = 0;  // sparse_fc
    std::size_t rows = 0, cols = 0;  // dense_gaussian
};

struct McResult {
    double mean = 0.0;
    double stddev = 0.0;  // sample standard deviation
    std::vector<double> samples;
};

// Independent perturbation draws with per-trial child seeds; trials run in
// parallel but the reduction is done in trial order, so the result does not
// depend on the number of worker threads.
McResult monte_carlo_spectral(const McParams& params, double sigma,
                              std::size_t trials, const Rng& rng);

}  // namespace specbound

#include "specbound/structured.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <string>

namespace specbound {

void ConvShape::validate() const {
    if (dims != 1 && dims != 2) throw InputError("ConvShape: dims must be 1 or 2");
    if (q < 1 || a < 1 || b < 1 || N < 1) throw InputError("ConvShape: counts must be >= 1");
    if (q > N) throw InputError("ConvShape: filter length q exceeds feature map N");
}

SupportPattern conv_support(const ConvShape& shape) {
    shape.validate();
    SupportPattern p;
    p.rows = shape.op_rows();
    p.cols = shape.op_cols();
    const int N = shape.N;
    if (shape.dims == 1) {
        for (int o = 0; o < shape.b; ++o)
            for (int y = 0; y < N; ++y)
                for (int j = 0; j < shape.a; ++j)
                    for (int k = 0; k < shape.q; ++k)
                        p.coords.emplace_back(
                            static_cast<std::uint32_t>(o * N + y),
                            static_cast<std::uint32_t>(j * N + (y + k) % N));
    } else {
        for (int o = 0; o < shape.b; ++o)
            for (int y1 = 0; y1 < N; ++y1)
                for (int y2 = 0; y2 < N; ++y2)
                    for (int j = 0; j < shape.a; ++j)
                        for (int k1 = 0; k1 < shape.q; ++k1)
                            for (int k2 = 0; k2 < shape.q; ++k2)
                                p.coords.emplace_back(
                                    static_cast<std::uint32_t>((o * N + y1) * N + y2),
                                    static_cast<std::uint32_t>(
                                        (j * N + (y1 + k1) % N) * N + (y2 + k2) % N));
    }
    std::sort(p.coords.begin(), p.coords.end());
    return p;
}

SupportPattern sparse_fc_support(std::size_t rows, std::size_t cols, std::size_t s) {
    if (rows == 0 || cols == 0) throw InputError("sparse_fc_support: empty shape");
    if (s > cols) throw InputError("sparse_fc_support: s exceeds column count");
    SupportPattern p;
    p.rows = rows;
    p.cols = cols;
    // circulant band: row i holds columns i..i+s-1 (mod cols), so row and
    // column sparsity both equal s when the matrix is square
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t t = 0; t < s; ++t)
            p.coords.emplace_back(static_cast<std::uint32_t>(i),
                                  static_cast<std::uint32_t>((i + t) % cols));
    std::sort(p.coords.begin(), p.coords.end());
    return p;
}

SupportPattern dense_support(std::size_t rows, std::size_t cols) {
    SupportPattern p;
    p.rows = rows;
    p.cols = cols;
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j)
            p.coords.emplace_back(static_cast<std::uint32_t>(i),
                                  static_cast<std::uint32_t>(j));
    return p;
}

SupportStats support_stats(const SupportPattern& p) {
    if (p.coords.empty()) throw InputError("support_stats: empty pattern");
    std::vector<std::size_t> row_count(p.rows, 0), col_count(p.cols, 0);
    for (const auto& [r, c] : p.coords) {
        ++row_count[r];
        ++col_count[c];
    }
    const std::size_t rmax = *std::max_element(row_count.begin(), row_count.end());
    const std::size_t cmax = *std::max_element(col_count.begin(), col_count.end());
    return {std::sqrt(static_cast<double>(rmax)), std::sqrt(static_cast<double>(cmax)), 1.0};
}

Matrix build_conv_operator(const FilterBank& fb) {
    const ConvShape& s = fb.shape;
    s.validate();
    const std::size_t expected =
        static_cast<std::size_t>(s.b) * s.a * s.taps_per_filter();
    if (fb.taps.size() != expected)
        throw InputError("build_conv_operator: tap count inconsistent with shape");
    for (double t : fb.taps)
        if (!std::isfinite(t)) throw InputError("build_conv_operator: non-finite tap");

    Matrix m(s.op_rows(), s.op_cols());
    const int N = s.N;
    if (s.dims == 1) {
        for (int o = 0; o < s.b; ++o)
            for (int y = 0; y < N; ++y)
                for (int j = 0; j < s.a; ++j)
                    for (int k = 0; k < s.q; ++k)
                        m(static_cast<std::size_t>(o * N + y),
                          static_cast<std::size_t>(j * N + (y + k) % N)) += fb.tap(o, j, k);
    } else {
        for (int o = 0; o < s.b; ++o)
            for (int y1 = 0; y1 < N; ++y1)
                for (int y2 = 0; y2 < N; ++y2)
                    for (int j = 0; j < s.a; ++j)
                        for (int k1 = 0; k1 < s.q; ++k1)
                            for (int k2 = 0; k2 < s.q; ++k2)
                                m(static_cast<std::size_t>((o * N + y1) * N + y2),
                                  static_cast<std::size_t>((j * N + (y1 + k1) % N) * N +
                                                           (y2 + k2) % N)) +=
                                    fb.tap(o, j, k1 * s.q + k2);
    }
    return m;
}

namespace {

// Largest eigenvalue of a symmetric matrix by cyclic Jacobi sweeps.
// Used on the (small) Hermitian Gram matrices of the frequency blocks.
double jacobi_max_eigenvalue(std::vector<double>& a, int n) {
    if (n == 1) return a[0];
    auto at = [&](int i, int j) -> double& { return a[i * n + j]; };
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0, diag = 0.0;
        for (int i = 0; i < n; ++i) {
            diag += std::fabs(at(i, i));
            for (int j = i + 1; j < n; ++j) off += at(i, j) * at(i, j);
        }
        if (off <= 1e-30 * (diag * diag + 1e-300)) break;
        for (int p = 0; p < n - 1; ++p) {
            for (int q = p + 1; q < n; ++q) {
                const double apq = at(p, q);
                if (apq == 0.0) continue;
                const double tau = (at(q, q) - at(p, p)) / (2.0 * apq);
                const double t = (tau >= 0.0 ? 1.0 : -1.0) /
                                 (std::fabs(tau) + std::sqrt(1.0 + tau * tau));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = t * c;
                for (int k = 0; k < n; ++k) {
                    const double akp = at(k, p), akq = at(k, q);
                    at(k, p) = c * akp - s * akq;
                    at(k, q) = s * akp + c * akq;
                }
                for (int k = 0; k < n; ++k) {
                    const double apk = at(p, k), aqk = at(q, k);
                    at(p, k) = c * apk - s * aqk;
                    at(q, k) = s * apk + c * aqk;
                }
            }
        }
    }
    double best = a[0];
    for (int i = 1; i < n; ++i) best = std::max(best, at(i, i));
    return best;
}

// Spectral norm of a complex r x c matrix: Jacobi on the real embedding of
// the smaller Hermitian Gram matrix.
double complex_spectral_norm(const std::vector<std::complex<double>>& b, int r, int c) {
    const bool gram_cols = c <= r;
    const int s = gram_cols ? c : r;
    std::vector<std::complex<double>> g(static_cast<std::size_t>(s) * s);
    for (int i = 0; i < s; ++i) {
        for (int j = 0; j < s; ++j) {
            std::complex<double> sum = 0.0;
            if (gram_cols) {  // G = B^H B
                for (int k = 0; k < r; ++k) sum += std::conj(b[k * c + i]) * b[k * c + j];
            } else {  // G = B B^H
                for (int k = 0; k < c; ++k) sum += b[i * c + k] * std::conj(b[j * c + k]);
            }
            g[i * s + j] = sum;
        }
    }
    // real embedding [Re -Im; Im Re]; eigenvalues of G, each twice
    const int n = 2 * s;
    std::vector<double> e(static_cast<std::size_t>(n) * n);
    for (int i = 0; i < s; ++i) {
        for (int j = 0; j < s; ++j) {
            const double re = g[i * s + j].real(), im = g[i * s + j].imag();
            e[i * n + j] = re;
            e[(i + s) * n + (j + s)] = re;
            e[i * n + (j + s)] = -im;
            e[(i + s) * n + j] = im;
        }
    }
    return std::sqrt(std::max(jacobi_max_eigenvalue(e, n), 0.0));
}

}  // namespace

double conv_spectral_norm_exact(const FilterBank& fb) {
    const ConvShape& s = fb.shape;
    s.validate();
    for (double t : fb.taps)
        if (!std::isfinite(t)) throw InputError("conv_spectral_norm_exact: non-finite tap");

    const int N = s.N;
    constexpr double two_pi = 6.283185307179586476925286766559;
    std::vector<std::complex<double>> twiddle(static_cast<std::size_t>(N) * N);
    for (int n = 0; n < N; ++n)
        for (int k = 0; k < N; ++k)
            twiddle[static_cast<std::size_t>(n) * N + k] =
                std::exp(std::complex<double>(0.0, -two_pi * n * k / N));

    std::vector<std::complex<double>> block(static_cast<std::size_t>(s.b) * s.a);
    double best = 0.0;
    const int freq_count = s.sites();
    for (int n = 0; n < freq_count; ++n) {
        const int n1 = s.dims == 2 ? n / N : n;
        const int n2 = s.dims == 2 ? n % N : 0;
        for (int o = 0; o < s.b; ++o) {
            for (int j = 0; j < s.a; ++j) {
                std::complex<double> lambda = 0.0;
                if (s.dims == 1) {
                    for (int k = 0; k < s.q; ++k)
                        lambda += fb.tap(o, j, k) * twiddle[static_cast<std::size_t>(n1) * N + k];
                } else {
                    for (int k1 = 0; k1 < s.q; ++k1)
                        for (int k2 = 0; k2 < s.q; ++k2)
                            lambda += fb.tap(o, j, k1 * s.q + k2) *
                                      twiddle[static_cast<std::size_t>(n1) * N + k1] *
                                      twiddle[static_cast<std::size_t>(n2) * N + k2];
                }
                block[static_cast<std::size_t>(o) * s.a + j] = lambda;
            }
        }
        best = std::max(best, complex_spectral_norm(block, s.b, s.a));
    }
    return best;
}

FilterBank sample_conv_perturbation(const ConvShape& shape, double sigma, Rng& rng) {
    shape.validate();
    if (sigma < 0.0) throw InputError("sample_conv_perturbation: negative sigma");
    FilterBank fb(shape);
    for (double& t : fb.taps) t = rng.gaussian(sigma);
    return fb;
}

Matrix sample_pattern_perturbation(const SupportPattern& p, double sigma, Rng& rng) {
    if (sigma < 0.0) throw InputError("sample_pattern_perturbation: negative sigma");
    Matrix m(p.rows, p.cols);
    for (const auto& [r, c] : p.coords) m(r, c) = rng.gaussian(sigma);
    return m;
}

McResult monte_carlo_spectral(const McParams& params, double sigma,
                              std::size_t trials, const Rng& rng) {
    if (trials < 1) throw UsageError("monte_carlo_spectral: trials must be >= 1");

    SupportPattern pattern;
    switch (params.kind) {
        case PerturbKind::conv:
            params.shape.validate();
            break;
        case PerturbKind::locally_connected:
            pattern = conv_support(params.shape);
            break;
        case PerturbKind::sparse_fc:
            pattern = sparse_fc_support(params.fc_rows, params.fc_cols, params.fc_s);
            break;
        case PerturbKind::dense_gaussian:
            pattern = dense_support(params.rows, params.cols);
            break;
    }

    McResult result;
    result.samples.assign(trials, 0.0);
    std::vector<std::string> failures(trials);

#pragma omp parallel for schedule(dynamic)
    for (std::int64_t t = 0; t < static_cast<std::int64_t>(trials); ++t) {
        Rng trial_rng = rng.child(static_cast<std::uint64_t>(t));
        try {
            if (params.kind == PerturbKind::conv) {
                FilterBank fb = sample_conv_perturbation(params.shape, sigma, trial_rng);
                result.samples[t] = conv_spectral_norm_exact(fb);
            } else {
                Matrix u = sample_pattern_perturbation(pattern, sigma, trial_rng);
                // sampling noise across trials is ~1e-2 relative; 1e-5 per
                // draw is already far below it and much cheaper than default
                result.samples[t] = spectral_norm(u, 1e-5);
            }
        } catch (const std::exception& e) {
            failures[t] = e.what();
        }
    }
    for (std::size_t t = 0; t < trials; ++t)
        if (!failures[t].empty())
            throw ConvergenceError(
                "monte_carlo_spectral: trial " + std::to_string(t) + ": " + failures[t],
                result.samples[t]);

    // index-ordered reduction: bit-reproducible for any thread count
    double sum = 0.0;
    for (double v : result.samples) sum += v;
    result.mean = sum / static_cast<double>(trials);
    if (trials > 1) {
        double ss = 0.0;
        for (double v : result.samples) ss += (v - result.mean) * (v - result.mean);
        result.stddev = std::sqrt(ss / static_cast<double>(trials - 1));
    }
    return result;
}

}  // namespace specbound

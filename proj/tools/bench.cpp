#include <chrono>
#include <cstdio>
#include <vector>

#include "specbound/kernels.hpp"
#include "specbound/matrix.hpp"
#include "specbound/rng.hpp"
#include "specbound/structured.hpp"

using namespace specbound;
using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

template <typename F>
double time_loop(std::size_t reps, F&& f) {
    const auto t0 = Clock::now();
    for (std::size_t r = 0; r < reps; ++r) f();
    return seconds_since(t0) / static_cast<double>(reps);
}

void bench_matvec(std::size_t n, std::size_t reps) {
    Rng rng(11);
    const Matrix m = gaussian_matrix(n, n, 1.0, rng);
    std::vector<double> x(n, 1.0), y(n);
    const double t_par = time_loop(reps, [&] { kernels::matvec(m, x.data(), y.data()); });
    const double t_ser = time_loop(reps, [&] { kernels::matvec_serial(m, x.data(), y.data()); });
    std::printf("matvec        %5zu x %5zu   openmp %.3e s   serial %.3e s   speedup %.2fx\n", n, n,
                t_par, t_ser, t_ser / t_par);
}

void bench_sparse(std::size_t n, std::size_t reps) {
    // banded conv-like support, ~9% density
    FilterBank fb(ConvShape{1, 9, static_cast<int>(n) / 100, static_cast<int>(n) / 100, 100});
    Rng rng(13);
    for (double& t : fb.taps) t = rng.gaussian();
    const Matrix m = build_conv_operator(fb);
    const kernels::SparseOp sp = kernels::SparseOp::from_dense(m);
    std::vector<double> x(m.cols, 1.0), y(m.rows);
    const double t_par = time_loop(reps, [&] { sp.apply(x.data(), y.data()); });
    const double t_ser = time_loop(reps, [&] { sp.apply_serial(x.data(), y.data()); });
    std::printf("sparse apply  %5zu x %5zu   openmp %.3e s   serial %.3e s   speedup %.2fx\n",
                m.rows, m.cols, t_par, t_ser, t_ser / t_par);
}

void bench_sparse_block(std::size_t n, std::size_t nvec, std::size_t reps) {
    FilterBank fb(ConvShape{1, 9, static_cast<int>(n) / 100, static_cast<int>(n) / 100, 100});
    Rng rng(13);
    for (double& t : fb.taps) t = rng.gaussian();
    const Matrix m = build_conv_operator(fb);
    const kernels::SparseOp sp = kernels::SparseOp::from_dense(m);
    std::vector<std::vector<double>> x(nvec, std::vector<double>(m.cols, 1.0));
    std::vector<std::vector<double>> y(nvec, std::vector<double>(m.rows));
    std::vector<const double*> xp(nvec);
    std::vector<double*> yp(nvec);
    for (std::size_t t = 0; t < nvec; ++t) {
        xp[t] = x[t].data();
        yp[t] = y[t].data();
    }
    const double t_blk = time_loop(reps, [&] { sp.apply_block(xp.data(), yp.data(), nvec); });
    const double t_rep = time_loop(reps, [&] {
        for (std::size_t t = 0; t < nvec; ++t) sp.apply(x[t].data(), y[t].data());
    });
    std::printf(
        "sparse apply_block %zu-vec %5zu x %5zu   blocked %.3e s   repeated %.3e s   speedup %.2fx\n",
        nvec, m.rows, m.cols, t_blk, t_rep, t_rep / t_blk);
}

void bench_spectral(std::size_t n) {
    Rng rng(17);
    const Matrix m = gaussian_matrix(n, n, 1.0, rng);
    const auto t0 = Clock::now();
    const double s = spectral_norm(m);
    std::printf("spectral_norm %5zu x %5zu   %.3e s   (value %.6f)\n", n, n, seconds_since(t0), s);
}

}  // namespace

int main() {
    bench_matvec(500, 200);
    bench_matvec(2000, 20);
    bench_sparse(1600, 50);
    bench_sparse_block(1600, 4, 50);
    bench_spectral(500);
    bench_spectral(1000);
    return 0;
}

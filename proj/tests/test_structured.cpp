#include <algorithm>
#include <cmath>
#include <complex>
#include <map>
#include <vector>

#include "doctest.h"
#include "oracles.hpp"
#include "specbound/structured.hpp"

using namespace specbound;

TEST_CASE("conv shape validation") {
    ConvShape s;
    s.dims = 3;
    CHECK_THROWS_AS(s.validate(), InputError);
    s.dims = 1;
    s.q = 0;
    CHECK_THROWS_AS(s.validate(), InputError);
    s.q = 5;
    s.N = 4;  // filter longer than the map
    CHECK_THROWS_AS(s.validate(), InputError);
    s.N = 8;
    s.a = -1;
    CHECK_THROWS_AS(s.validate(), InputError);
    s.a = 2;
    CHECK_NOTHROW(s.validate());
    CHECK(s.taps_per_filter() == 5);
    s.dims = 2;
    CHECK(s.taps_per_filter() == 25);
    CHECK(s.sites() == 64);
}

TEST_CASE("conv operator matches direct circular convolution") {
    Rng rng(11);
    for (int dims = 1; dims <= 2; ++dims) {
        ConvShape s;
        s.dims = dims;
        s.q = 3;
        s.a = 2;
        s.b = 3;
        s.N = dims == 2 ? 5 : 9;
        FilterBank fb(s);
        for (double& t : fb.taps) t = rng.gaussian();
        const Matrix built = build_conv_operator(fb);
        const Matrix direct = oracle::circular_conv_matrix(fb);
        REQUIRE(built.rows == direct.rows);
        REQUIRE(built.cols == direct.cols);
        for (std::size_t i = 0; i < built.size(); ++i)
            CHECK(built.data[i] == doctest::Approx(direct.data[i]).epsilon(1e-13));
    }
}

TEST_CASE("exact conv spectral norm matches the dense operator") {
    Rng rng(13);
    struct Case { int dims, q, a, b, N; };
    const Case cases[] = {
        {1, 1, 1, 1, 4}, {1, 3, 1, 1, 8}, {1, 3, 2, 3, 7}, {1, 5, 3, 2, 5},
        {2, 1, 2, 2, 3}, {2, 2, 1, 1, 4}, {2, 3, 2, 3, 5},
    };
    for (const Case& c : cases) {
        ConvShape s;
        s.dims = c.dims;
        s.q = c.q;
        s.a = c.a;
        s.b = c.b;
        s.N = c.N;
        FilterBank fb(s);
        for (double& t : fb.taps) t = rng.gaussian();
        const double exact = conv_spectral_norm_exact(fb);
        const double dense = oracle::spectral_norm(build_conv_operator(fb));
        CHECK(exact == doctest::Approx(dense).epsilon(1e-10));
    }
}

TEST_CASE("exact conv spectral norm closed forms") {
    // single tap: the operator is c * permutation, norm |c|
    ConvShape s;
    s.dims = 1;
    s.q = 1;
    s.a = 1;
    s.b = 1;
    s.N = 6;
    FilterBank fb(s);
    fb.tap(0, 0, 0) = -2.5;
    CHECK(conv_spectral_norm_exact(fb) == doctest::Approx(2.5).epsilon(1e-12));

    // single channel pair: norm is the max DFT magnitude of the taps
    s.q = 3;
    s.N = 8;
    FilterBank g(s);
    g.tap(0, 0, 0) = 1.0;
    g.tap(0, 0, 1) = -0.5;
    g.tap(0, 0, 2) = 0.25;
    double max_mag = 0.0;
    for (int n = 0; n < s.N; ++n) {
        std::complex<double> acc = 0.0;
        for (int k = 0; k < s.q; ++k) {
            const double ang = 2.0 * M_PI * n * k / s.N;
            acc += g.tap(0, 0, k) * std::complex<double>(std::cos(ang), std::sin(ang));
        }
        max_mag = std::max(max_mag, std::abs(acc));
    }
    CHECK(conv_spectral_norm_exact(g) == doctest::Approx(max_mag).epsilon(1e-12));
}

TEST_CASE("support patterns have the advertised counts") {
    ConvShape s;
    s.dims = 1;
    s.q = 3;
    s.a = 2;
    s.b = 2;
    s.N = 6;
    const SupportPattern p = conv_support(s);
    CHECK(p.rows == s.op_rows());
    CHECK(p.cols == s.op_cols());
    CHECK(p.coords.size() == static_cast<std::size_t>(s.b) * s.sites() * s.a * s.q);
    CHECK(std::is_sorted(p.coords.begin(), p.coords.end()));

    // recount rows/columns and compare with support_stats
    std::map<std::uint32_t, int> rc, cc;
    for (const auto& [r, c] : p.coords) {
        ++rc[r];
        ++cc[c];
    }
    int rmax = 0, cmax = 0;
    for (const auto& [k, v] : rc) rmax = std::max(rmax, v);
    for (const auto& [k, v] : cc) cmax = std::max(cmax, v);
    const SupportStats st = support_stats(p);
    CHECK(st.sigma1 == doctest::Approx(std::sqrt(double(rmax))));
    CHECK(st.sigma2 == doctest::Approx(std::sqrt(double(cmax))));
    CHECK(st.sigma_star == 1.0);
    // every row touches a*q columns, every column b*q rows
    CHECK(rmax == s.a * s.q);
    CHECK(cmax == s.b * s.q);
}

TEST_CASE("sparse fc support is a circulant band") {
    const SupportPattern p = sparse_fc_support(4, 6, 3);
    CHECK(p.coords.size() == 12);
    for (const auto& [r, c] : p.coords) {
        const std::uint32_t t = (c + 6 - r % 6) % 6;
        CHECK(t < 3);
    }
    const SupportStats st = support_stats(p);
    CHECK(st.sigma1 == doctest::Approx(std::sqrt(3.0)));
    // columns 2 and 3 are hit by three rows each
    CHECK(st.sigma2 == doctest::Approx(std::sqrt(3.0)));
    CHECK_THROWS_AS(sparse_fc_support(4, 6, 7), InputError);
}

TEST_CASE("dense support covers everything") {
    const SupportPattern p = dense_support(3, 5);
    CHECK(p.coords.size() == 15);
    const SupportStats st = support_stats(p);
    CHECK(st.sigma1 == doctest::Approx(std::sqrt(5.0)));
    CHECK(st.sigma2 == doctest::Approx(std::sqrt(3.0)));
}

TEST_CASE("perturbation samplers are deterministic and respect sigma") {
    ConvShape s;
    s.dims = 2;
    s.q = 3;
    s.a = 2;
    s.b = 2;
    s.N = 8;
    Rng r1(5), r2(5);
    const FilterBank f1 = sample_conv_perturbation(s, 0.3, r1);
    const FilterBank f2 = sample_conv_perturbation(s, 0.3, r2);
    CHECK(f1.taps == f2.taps);
    CHECK(f1.taps.size() == static_cast<std::size_t>(s.b) * s.a * s.q * s.q);

    const SupportPattern p = sparse_fc_support(32, 32, 8);
    Rng r3(5), r4(5);
    const Matrix m1 = sample_pattern_perturbation(p, 0.3, r3);
    const Matrix m2 = sample_pattern_perturbation(p, 0.3, r4);
    CHECK(m1.data == m2.data);
    // zeros exactly off the pattern
    std::size_t nz = 0;
    for (double v : m1.data) nz += v != 0.0;
    CHECK(nz == p.coords.size());
}

TEST_CASE("monte carlo spectral statistics are reproducible") {
    McParams params;
    params.kind = PerturbKind::conv;
    params.shape.dims = 1;
    params.shape.q = 3;
    params.shape.a = 2;
    params.shape.b = 2;
    params.shape.N = 16;
    const Rng rng(21);
    const McResult a = monte_carlo_spectral(params, 0.5, 24, rng);
    const McResult b = monte_carlo_spectral(params, 0.5, 24, rng);
    CHECK(a.samples == b.samples);
    REQUIRE(a.samples.size() == 24);

    double mean = 0.0;
    for (double v : a.samples) mean += v;
    mean /= 24.0;
    double var = 0.0;
    for (double v : a.samples) var += (v - mean) * (v - mean);
    var /= 23.0;
    CHECK(a.mean == doctest::Approx(mean).epsilon(1e-13));
    CHECK(a.stddev == doctest::Approx(std::sqrt(var)).epsilon(1e-13));

    // scaling sigma scales every sample
    const McResult c = monte_carlo_spectral(params, 1.0, 24, rng);
    for (std::size_t i = 0; i < 24; ++i)
        CHECK(a.samples[i] == doctest::Approx(0.5 * c.samples[i]).epsilon(1e-6));
}

TEST_CASE("monte carlo pattern kinds run and stay positive") {
    const Rng rng(31);
    McParams lc;
    lc.kind = PerturbKind::locally_connected;
    lc.shape.dims = 1;
    lc.shape.q = 3;
    lc.shape.a = 2;
    lc.shape.b = 2;
    lc.shape.N = 12;
    const McResult r_lc = monte_carlo_spectral(lc, 1.0, 8, rng);
    CHECK(r_lc.mean > 0.0);

    McParams fc;
    fc.kind = PerturbKind::sparse_fc;
    fc.fc_rows = 24;
    fc.fc_cols = 24;
    fc.fc_s = 6;
    const McResult r_fc = monte_carlo_spectral(fc, 1.0, 8, rng);
    CHECK(r_fc.mean > 0.0);

    McParams dg;
    dg.kind = PerturbKind::dense_gaussian;
    dg.rows = 20;
    dg.cols = 30;
    const McResult r_dg = monte_carlo_spectral(dg, 1.0, 8, rng);
    // dense gaussian norms concentrate near sqrt(rows)+sqrt(cols)
    CHECK(r_dg.mean > 0.5 * (std::sqrt(20.0) + std::sqrt(30.0)));
    CHECK(r_dg.mean < 1.5 * (std::sqrt(20.0) + std::sqrt(30.0)));

    // per-trial failures surface after the parallel loop
    CHECK_THROWS_AS(monte_carlo_spectral(dg, -1.0, 8, rng), ConvergenceError);
    CHECK_THROWS_AS(monte_carlo_spectral(dg, 1.0, 0, rng), UsageError);
}

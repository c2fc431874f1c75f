// End-to-end acceptance checks. Each criterion prints one [PASS]/[FAIL]
// line; the process exits nonzero if any criterion fails. Tolerances and
// shapes are pinned here on purpose.

#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "specbound/augment.hpp"
#include "specbound/bounds.hpp"
#include "specbound/io.hpp"
#include "specbound/network.hpp"
#include "specbound/structured.hpp"
#include "specbound/trainer.hpp"

#ifndef SPECBOUND_CLI_PATH
#error "SPECBOUND_CLI_PATH must be defined"
#endif
#ifndef SPECBOUND_DATA_DIR
#error "SPECBOUND_DATA_DIR must be defined"
#endif

using namespace specbound;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string(SPECBOUND_CLI_PATH) + " " + args + " > /dev/null 2>&1";
    const int rc = std::system(cmd.c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

// parse a CSV of doubles, skipping the header line
std::vector<std::vector<double>> parse_csv(const std::string& path) {
    std::ifstream in(path);
    std::vector<std::vector<double>> rows;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (first) {
            first = false;
            continue;
        }
        std::vector<double> row;
        std::istringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) row.push_back(std::strtod(cell.c_str(), nullptr));
        if (!row.empty()) rows.push_back(row);
    }
    return rows;
}

struct Outcome {
    bool pass = true;
    std::string detail;

    void require(bool ok, const std::string& msg) {
        if (!ok) {
            pass = false;
            if (!detail.empty()) detail += "; ";
            detail += msg;
        }
    }
};

void report(int index, const std::string& title, const Outcome& o) {
    std::printf("[%s] criterion %d: %s%s%s\n", o.pass ? "PASS" : "FAIL", index, title.c_str(),
                o.detail.empty() ? "" : " -- ", o.detail.c_str());
    std::fflush(stdout);
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4g", v);
    return buf;
}

fs::path g_tmp;

// ---- criterion 1: monte-carlo means vs the convolutional noise bound ----

Outcome criterion1() {
    Outcome o;
    const auto t0 = Clock::now();
    const std::string conv_csv = (g_tmp / "mc_conv.csv").string();
    const std::string lc_csv = (g_tmp / "mc_lc.csv").string();
    const std::string common =
        " --dims 1 --q 9 --N 100 --a 16 --b 16 --sigma 1 --trials 100 --seed 7 --out ";
    o.require(run_cli("mc-spectral --kind conv" + common + conv_csv) == 0, "conv sweep failed");
    o.require(run_cli("mc-spectral --kind locally_connected" + common + lc_csv) == 0,
              "locally-connected sweep failed");
    if (!o.pass) return o;

    const auto conv = parse_csv(conv_csv);
    const auto lc = parse_csv(lc_csv);
    o.require(conv.size() == 5 && lc.size() == 5, "expected 5 sweep points");
    if (!o.pass) return o;

    // columns: a_tilde, mean, std, theory_conv, theory_lc
    for (std::size_t i = 0; i < conv.size(); ++i) {
        const double at = conv[i][0], mean = conv[i][1], bound = conv[i][3];
        o.require(mean <= bound, "a~=" + fmt(at) + ": mean " + fmt(mean) + " exceeds bound " +
                                     fmt(bound));
        o.require(mean >= 0.4 * bound, "a~=" + fmt(at) + ": mean " + fmt(mean) +
                                           " below 0.4x bound (ratio " + fmt(mean / bound) + ")");
        o.require(lc[i][2] < conv[i][2], "a~=" + fmt(at) + ": lc std " + fmt(lc[i][2]) +
                                             " not below conv std " + fmt(conv[i][2]));
    }
    const double dt = seconds_since(t0);
    o.require(dt <= 120.0, "runtime " + fmt(dt) + "s exceeds 120s");
    if (o.pass) o.detail = "runtime " + fmt(dt) + "s";
    return o;
}

// ---- criterion 2: exact conv norm vs dense power iteration, exhaustive ----

Outcome criterion2() {
    Outcome o;
    const auto t0 = Clock::now();
    int cases = 0;
    double worst = 0.0;
    for (int dims = 1; dims <= 2; ++dims) {
        const int n_max = dims == 1 ? 12 : 8;
        for (int q = 1; q <= 3; ++q)
            for (int N = q; N <= n_max; ++N)
                for (int a = 1; a <= 3; ++a)
                    for (int b = 1; b <= 3; ++b)
                        for (std::uint64_t seed = 0; seed < 5; ++seed) {
                            ConvShape s;
                            s.dims = dims;
                            s.q = q;
                            s.a = a;
                            s.b = b;
                            s.N = N;
                            Rng rng(1000 + seed);
                            const FilterBank fb = sample_conv_perturbation(s, 1.0, rng);
                            const double exact = conv_spectral_norm_exact(fb);
                            const double dense = spectral_norm(build_conv_operator(fb));
                            const double rel = std::fabs(exact - dense) /
                                               std::max(std::fabs(dense), 1e-300);
                            worst = std::max(worst, rel);
                            ++cases;
                        }
    }
    o.require(worst <= 1e-8, "worst relative disagreement " + fmt(worst));
    const double dt = seconds_since(t0);
    o.require(dt <= 60.0, "runtime " + fmt(dt) + "s exceeds 60s");
    if (o.pass)
        o.detail = std::to_string(cases) + " cases, worst rel " + fmt(worst) + ", runtime " +
                   fmt(dt) + "s";
    return o;
}

// ---- criterion 3: architecture constants land at the published scale ----

Outcome criterion3() {
    Outcome o;
    const auto t0 = Clock::now();
    const double baseline_targets[3] = {2.5, 3.5, 4.0};
    const double psi_targets[3] = {2.0, 2.5, 2.5};
    const char* names[3] = {"lenet5", "alexnet", "vgg16"};
    for (int i = 0; i < 3; ++i) {
        const ArchSpec arch = load_arch_spec(std::string(SPECBOUND_DATA_DIR) +
                                             "/architectures/" + names[i] + ".json");
        const double lb = std::log10(baseline_psi(arch.spec.depth(), arch.h));
        o.require(std::fabs(lb - baseline_targets[i]) <= 0.5,
                  std::string(names[i]) + ": log10 baseline " + fmt(lb) + " not within 0.5 of " +
                      fmt(baseline_targets[i]));
        const double lf = std::log10(psi_f(arch.spec, PsiMode::full));
        const double lc = std::log10(psi_f(arch.spec, PsiMode::conv_only));
        const bool ok = std::fabs(lf - psi_targets[i]) <= 1.0 ||
                        std::fabs(lc - psi_targets[i]) <= 1.0;
        o.require(ok, std::string(names[i]) + ": neither psi mode (full " + fmt(lf) +
                          ", conv_only " + fmt(lc) + ") within 1.0 of " + fmt(psi_targets[i]));
    }
    const double dt = seconds_since(t0);
    o.require(dt < 1.0, "runtime " + fmt(dt) + "s exceeds 1s");
    return o;
}

// ---- criterion 4: bounds hold with the advertised exceedance rate ----

Outcome criterion4() {
    Outcome o;
    const auto t0 = Clock::now();
    const double delta = 0.1;
    const std::size_t trials = 200;
    const double max_frac = 0.1 + 3.0 * std::sqrt(0.09 / 200.0);  // ~0.164

    const auto exceedance = [&](const McResult& res, double bound) {
        std::size_t n = 0;
        for (double v : res.samples) n += v > bound;
        return static_cast<double>(n) / static_cast<double>(res.samples.size());
    };

    ConvShape shape;
    shape.dims = 1;
    shape.q = 9;
    shape.a = 4;
    shape.b = 4;
    shape.N = 50;

    McParams conv;
    conv.kind = PerturbKind::conv;
    conv.shape = shape;
    const double f_conv = exceedance(monte_carlo_spectral(conv, 1.0, trials, Rng(201)),
                                     conv_noise_bound(shape, 1.0, delta));
    o.require(f_conv <= max_frac, "conv exceedance " + fmt(f_conv));

    McParams lc;
    lc.kind = PerturbKind::locally_connected;
    lc.shape = shape;
    const double f_lc = exceedance(monte_carlo_spectral(lc, 1.0, trials, Rng(202)),
                                   lc_noise_bound(shape, 1.0, delta, 0.5));
    o.require(f_lc <= max_frac, "locally-connected exceedance " + fmt(f_lc));

    McParams fcp;
    fcp.kind = PerturbKind::sparse_fc;
    fcp.fc_rows = 256;
    fcp.fc_cols = 256;
    fcp.fc_s = 64;
    const double f_fc = exceedance(monte_carlo_spectral(fcp, 1.0, trials, Rng(203)),
                                   fc_noise_bound(64, 1.0, delta));
    o.require(f_fc <= max_frac, "sparse-fc exceedance " + fmt(f_fc));

    McParams dg;
    dg.kind = PerturbKind::dense_gaussian;
    dg.rows = 100;
    dg.cols = 80;
    const double f_dg = exceedance(monte_carlo_spectral(dg, 1.0, trials, Rng(204)),
                                   gaussian_matrix_bound(100, 80, 1.0, delta));
    o.require(f_dg <= max_frac, "dense exceedance " + fmt(f_dg));

    const double dt = seconds_since(t0);
    o.require(dt <= 300.0, "runtime " + fmt(dt) + "s exceeds 300s");
    if (o.pass)
        o.detail = "exceedance conv " + fmt(f_conv) + ", lc " + fmt(f_lc) + ", fc " + fmt(f_fc) +
                   ", dense " + fmt(f_dg) + ", runtime " + fmt(dt) + "s";
    return o;
}

// ---- criterion 5: perturbation stability holds with probability >= 1/2 ----

Outcome criterion5() {
    Outcome o;
    const auto t0 = Clock::now();

    Rng init(101);
    const Network net = make_cifar_tiny(32, 32, 3, 10, init);
    LabeledDataset data;
    Rng drng(102);
    for (int i = 0; i < 256; ++i) {
        Image im(32, 32, 3);
        for (double& v : im.v) v = drng.uniform();
        data.images.push_back(std::move(im));
        data.labels.push_back(static_cast<int>(drng.uniform_int(0, 9)));
    }

    const Network normalized = normalize_weights(net);
    const double beta = layer_spectral_norms(normalized)[0];
    const double B = data.max_l2_norm();
    const NetworkSpec spec = to_network_spec(normalized, B, 10, data.size());

    // pilot run fixes the output-perturbation scale, then gamma = 4 * P90
    const double sigma_pilot = sigma_choice(spec, 1.0, B, beta).sigma;
    const PerturbationReport pilot =
        perturbation_experiment(net, data, sigma_pilot, 20, 1.0, Rng(103));
    std::vector<double> deltas = pilot.deltas;
    std::sort(deltas.begin(), deltas.end());
    const double p90 = deltas[static_cast<std::size_t>(0.9 * (deltas.size() - 1))];
    const double gamma_star = 4.0 * p90;

    const double sigma = sigma_choice(spec, gamma_star, B, beta).sigma;
    const PerturbationReport rep =
        perturbation_experiment(net, data, sigma, 100, gamma_star, Rng(104));

    o.require(rep.fraction_within >= 0.5,
              "fraction within gamma/4 is " + fmt(rep.fraction_within));
    for (std::size_t t = 0; t < rep.deltas.size(); ++t)
        if (rep.admissible[t])
            o.require(rep.deltas[t] <= rep.perturb_bound[t],
                      "trial " + std::to_string(t) + ": delta " + fmt(rep.deltas[t]) +
                          " exceeds perturbation bound " + fmt(rep.perturb_bound[t]));
    if (o.pass)
        o.detail = "fraction " + fmt(rep.fraction_within) + ", sigma " + fmt(sigma) +
                   ", runtime " + fmt(seconds_since(t0)) + "s";
    return o;
}

// ---- criterion 6: spectral-complexity identities ----

Outcome criterion6() {
    Outcome o;
    Rng rng(301);

    // single layer: R_W equals the Frobenius norm
    const Matrix w = gaussian_matrix(24, 18, 1.0, rng);
    const double rw1 = spectral_complexity({w}, ComplexityVariant::rw);
    const double fro = matrix_norm(w, NormKind::frobenius);
    o.require(std::fabs(rw1 - fro) <= 1e-10 * fro,
              "single-layer R_W " + fmt(rw1) + " vs Frobenius " + fmt(fro));

    // rebalancing invariance
    const Matrix w2 = gaussian_matrix(18, 24, 1.0, rng);
    Matrix ws = w, w2s = w2;
    for (double& v : ws.data) v *= 7.0;
    for (double& v : w2s.data) v /= 7.0;
    const double before = spectral_complexity({w, w2}, ComplexityVariant::rw);
    const double after = spectral_complexity({ws, w2s}, ComplexityVariant::rw);
    o.require(std::fabs(after - before) <= 1e-9 * before,
              "rebalanced R_W " + fmt(after) + " vs " + fmt(before));

    // weight normalization preserves the function on random probes
    Rng nrng(302);
    const Network net = make_cifar_tiny(16, 16, 3, 10, nrng, 0.5);
    const Network norm = normalize_weights(net);
    Rng prng(303);
    for (int p = 0; p < 32; ++p) {
        Image x(16, 16, 3);
        for (double& v : x.v) v = prng.gaussian();
        const std::vector<double> y0 = forward(net, x);
        const std::vector<double> y1 = forward(norm, x);
        double diff = 0.0, ref = 0.0;
        for (std::size_t i = 0; i < y0.size(); ++i) {
            diff += (y1[i] - y0[i]) * (y1[i] - y0[i]);
            ref += y0[i] * y0[i];
        }
        o.require(std::sqrt(diff) <= 1e-5 * std::sqrt(ref),
                  "probe " + std::to_string(p) + ": relative output change " +
                      fmt(std::sqrt(diff / std::max(ref, 1e-300))));
    }
    return o;
}

// ---- criterion 7: reverse-mode gradient vs finite differences ----

Outcome criterion7() {
    Outcome o;
    Rng init(401);
    const Network net = make_cifar_tiny(8, 8, 1, 4, init, 0.5);
    LabeledDataset data;
    Rng drng(402);
    for (int i = 0; i < 6; ++i) {
        Image im(8, 8, 1);
        for (double& v : im.v) v = drng.uniform(-1.0, 1.0);
        data.images.push_back(std::move(im));
        data.labels.push_back(i % 4);
    }

    const std::vector<double> g = gradient(net, data);
    const std::vector<double> flat = flatten_params(net);

    const auto loss_at = [&](const std::vector<double>& params) {
        Network n = net;
        set_params(n, params);
        double loss = 0.0;
        for (std::size_t i = 0; i < data.size(); ++i) {
            const std::vector<double> logits = forward(n, data.images[i]);
            double mx = logits[0];
            for (double v : logits) mx = std::max(mx, v);
            double z = 0.0;
            for (double v : logits) z += std::exp(v - mx);
            loss += std::log(z) - (logits[data.labels[i]] - mx);
        }
        return loss / static_cast<double>(data.size());
    };

    Rng crng(403);
    double worst = 0.0;
    for (int k = 0; k < 50; ++k) {
        const std::size_t i = static_cast<std::size_t>(
            crng.uniform_int(0, static_cast<std::int64_t>(flat.size()) - 1));
        std::vector<double> plus = flat, minus = flat;
        const double h = 1e-5;
        plus[i] += h;
        minus[i] -= h;
        const double fd = (loss_at(plus) - loss_at(minus)) / (2.0 * h);
        const double rel = std::fabs(g[i] - fd) / std::max({std::fabs(fd), std::fabs(g[i]), 1e-6});
        worst = std::max(worst, rel);
    }
    o.require(worst <= 1e-4, "worst relative gradient error " + fmt(worst));
    if (o.pass) o.detail = "worst rel " + fmt(worst);
    return o;
}

// ---- criterion 8: deterministic training run + label-preserving augmentation ----

Outcome criterion8() {
    Outcome o;
    const auto t0 = Clock::now();

    // deterministic synthetic dataset in the 3073-byte record format
    const std::string data_bin = (g_tmp / "train_data.bin").string();
    {
        std::ofstream out(data_bin, std::ios::binary);
        for (int r = 0; r < 1200; ++r) {
            const unsigned char label = static_cast<unsigned char>(r % 10);
            out.write(reinterpret_cast<const char*>(&label), 1);
            for (int i = 0; i < 3072; ++i) {
                const unsigned char b =
                    static_cast<unsigned char>((r * 131 + i * 37 + (i >> 5) * r) % 256);
                out.write(reinterpret_cast<const char*>(&b), 1);
            }
        }
    }

    const std::string traj1 = (g_tmp / "traj1.csv").string();
    const std::string traj2 = (g_tmp / "traj2.csv").string();
    const std::string train_args = "train --dataset " + data_bin +
                                   " --train-count 1000 --test-count 200 --lr 0.01 --epochs 20 "
                                   "--batch 32 --seed 11 --out ";
    o.require(run_cli(train_args + traj1) == 0, "training run 1 failed");
    o.require(run_cli(train_args + traj2) == 0, "training run 2 failed");
    if (!o.pass) return o;

    const std::string csv1 = slurp(traj1);
    o.require(csv1 == slurp(traj2), "repeated training runs differ");
    o.require(csv1.rfind("epoch,train_loss,train_acc,test_acc,ge,rw_over_gamma,"
                         "rw21_over_gamma,mean_margin\n", 0) == 0, "trajectory header malformed");
    const auto rows = parse_csv(traj1);
    o.require(rows.size() == 20, "expected 20 epoch records, got " + std::to_string(rows.size()));
    for (const auto& row : rows) {
        o.require(row.size() == 8, "trajectory row has wrong arity");
        for (double v : row) o.require(std::isfinite(v), "non-finite trajectory value");
    }

    // augmentation preserves size and labels at every fraction
    const LabeledDataset base = load_cifar10_binary(data_bin);
    for (const double pct : {0.0, 0.25, 0.5}) {
        const std::string aug_bin =
            (g_tmp / ("aug_" + std::to_string(static_cast<int>(pct * 100)) + ".bin")).string();
        o.require(run_cli("augment --dataset " + data_bin + " --out " + aug_bin +
                          " --pct " + fmt(pct) + " --kind translate --seed 21") == 0,
                  "augment failed at pct " + fmt(pct));
        const LabeledDataset mixed = load_cifar10_binary(aug_bin);
        o.require(mixed.size() == base.size(), "size changed at pct " + fmt(pct));
        const std::size_t n_aug = static_cast<std::size_t>(std::llround(pct * 1200.0));
        const std::size_t n_keep = 1200 - n_aug;
        for (std::size_t i = 0; i < n_keep; ++i)
            o.require(mixed.labels[i] == base.labels[i],
                      "kept-prefix label changed at pct " + fmt(pct));
        // augmented slots: label copied from a retained source, hence in range
        for (std::size_t i = n_keep; i < mixed.size(); ++i)
            o.require(mixed.labels[i] >= 0 && mixed.labels[i] <= 9,
                      "augmented label out of range at pct " + fmt(pct));
        if (pct == 0.0)
            o.require(slurp(aug_bin) == slurp(data_bin), "pct 0 did not return the input bytes");
    }
    if (o.pass) o.detail = "runtime " + fmt(seconds_since(t0)) + "s";
    return o;
}

}  // namespace

int main() {
    g_tmp = fs::temp_directory_path() /
            ("specbound_acceptance_" + std::to_string(::getpid()));
    fs::create_directories(g_tmp);

    struct Item {
        const char* title;
        Outcome (*fn)();
    };
    const Item items[] = {
        {"monte-carlo spectral norms track the convolutional bound", criterion1},
        {"exact conv operator norm matches dense power iteration", criterion2},
        {"architecture constants land at the published scale", criterion3},
        {"concentration bounds hold at the target exceedance rate", criterion4},
        {"output perturbation stays within gamma/4 half the time", criterion5},
        {"spectral-complexity identities", criterion6},
        {"gradient matches finite differences", criterion7},
        {"deterministic training and label-preserving augmentation", criterion8},
    };

    int failures = 0;
    int index = 1;
    for (const Item& item : items) {
        Outcome o;
        try {
            o = item.fn();
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail = std::string("exception: ") + e.what();
        }
        report(index++, item.title, o);
        if (!o.pass) ++failures;
    }

    fs::remove_all(g_tmp);
    return failures == 0 ? 0 : 1;
}

#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "specbound/augment.hpp"
#include "specbound/bounds.hpp"
#include "specbound/errors.hpp"
#include "specbound/io.hpp"
#include "specbound/network.hpp"
#include "specbound/structured.hpp"
#include "specbound/trainer.hpp"

#ifndef SPECBOUND_DATA_DIR
#define SPECBOUND_DATA_DIR "data"
#endif

namespace {

using namespace specbound;

std::ostream& open_out(std::ofstream& file, const std::string& path) {
    if (path.empty()) return std::cout;
    file.open(path);
    if (!file) throw DataError("cannot write file: " + path);
    return file;
}

void emit_row(std::ostream& os, const std::vector<double>& row) {
    for (std::size_t i = 0; i < row.size(); ++i) {
        if (i) os << ",";
        os << format_g17(row[i]);
    }
    os << "\n";
}

int cmd_complexity(const std::string& manifest, const std::string& out_path) {
    const Network net = load_network(manifest);
    const std::vector<LayerNorms> norms = layer_operator_norms(net);
    std::ofstream file;
    std::ostream& os = open_out(file, out_path);
    os << "layer,spectral,frobenius,two_one_t,stable_rank\n";
    for (std::size_t i = 0; i < norms.size(); ++i) {
        os << i << "," << format_g17(norms[i].spectral) << "," << format_g17(norms[i].frobenius)
           << "," << format_g17(norms[i].two_one_t) << ","
           << format_g17(norms[i].frobenius * norms[i].frobenius /
                         (norms[i].spectral * norms[i].spectral))
           << "\n";
    }
    os << "rw," << format_g17(spectral_complexity(norms, ComplexityVariant::rw)) << ",,,\n";
    os << "rw21," << format_g17(spectral_complexity(norms, ComplexityVariant::rw21)) << ",,,\n";
    return 0;
}

int cmd_bound(const std::string& manifest, const std::string& arch_path, double gamma,
              std::size_t m, double B, double delta, const std::string& mode_s,
              const std::string& psi_s, int classes, const std::string& out_path) {
    const BoundMode mode = mode_s == "pac_bayes" ? BoundMode::pac_bayes : BoundMode::simplified;
    const PsiMode psi_mode = psi_s == "conv_only" ? PsiMode::conv_only : PsiMode::full;
    if (mode_s != "pac_bayes" && mode_s != "simplified")
        throw UsageError("bound: --mode must be simplified or pac_bayes");
    if (psi_s != "conv_only" && psi_s != "full")
        throw UsageError("bound: --psi must be full or conv_only");

    NetworkSpec spec;
    std::vector<LayerNorms> norms;
    double wsq = 0.0;
    if (!manifest.empty()) {
        const Network net = load_network(manifest);
        spec = to_network_spec(net, B, classes, m);
        norms = layer_operator_norms(net);
        for (double v : flatten_params(net)) wsq += v * v;
    } else if (!arch_path.empty()) {
        // architecture only: evaluate at unit layer norms, |w| = 0
        spec = load_arch_spec(arch_path).spec;
        spec.input_bound = B;
        spec.classes = classes;
        spec.train_size = m;
        norms.assign(spec.layers.size(), LayerNorms{1.0, 1.0, 1.0});
    } else {
        throw UsageError("bound: need --manifest or --arch");
    }

    const BoundReport rep = ge_bound(spec, norms, wsq, gamma, m, B, delta, mode, psi_mode);
    std::ofstream file;
    std::ostream& os = open_out(file, out_path);
    os << "field,value\n";
    os << "value," << format_g17(rep.value) << "\n";
    os << "mode," << (mode == BoundMode::pac_bayes ? "pac_bayes" : "simplified") << "\n";
    os << "psi_mode," << (psi_mode == PsiMode::conv_only ? "conv_only" : "full") << "\n";
    os << "psi," << format_g17(rep.psi) << "\n";
    os << "rw," << format_g17(rep.rw) << "\n";
    os << "gamma," << format_g17(rep.gamma) << "\n";
    os << "B," << format_g17(rep.B) << "\n";
    os << "m," << rep.m << "\n";
    os << "delta," << format_g17(rep.delta) << "\n";
    if (mode == BoundMode::pac_bayes) {
        os << "sigma," << format_g17(rep.sigma) << "\n";
        os << "kl," << format_g17(rep.kl) << "\n";
        os << "beta_tilde," << format_g17(rep.beta_tilde) << "\n";
        os << "delta_prime," << format_g17(rep.delta_prime) << "\n";
    }
    return 0;
}

int cmd_mc_spectral(const std::string& kind_s, int dims, int q, int N, int a, int b, double sigma,
                    std::size_t trials, std::uint64_t seed, const std::string& out_path) {
    PerturbKind kind;
    if (kind_s == "conv")
        kind = PerturbKind::conv;
    else if (kind_s == "locally_connected")
        kind = PerturbKind::locally_connected;
    else
        throw UsageError("mc-spectral: --kind must be conv or locally_connected");

    std::ofstream file;
    std::ostream& os = open_out(file, out_path);
    os << "a_tilde,empirical_mean,empirical_std,theory_conv,theory_lc\n";
    const Rng rng(seed);
    std::uint64_t sweep = 0;
    for (int at = 1; at <= std::min(a, b); at *= 2) {
        ConvShape shape{dims, q, at, at, N};
        shape.validate();
        McParams params;
        params.kind = kind;
        params.shape = shape;
        const McResult res = monte_carlo_spectral(params, sigma, trials, rng.child(sweep++));
        const double theory_conv = conv_noise_bound(shape, sigma, 0.5, ConvConstant::safe);
        const double theory_lc = lc_noise_bound(shape, sigma, 0.5, 0.5);
        emit_row(os, {static_cast<double>(at), res.mean, res.stddev, theory_conv, theory_lc});
    }
    return 0;
}

int cmd_table2(const std::string& data_dir, const std::string& out_path) {
    std::ofstream file;
    std::ostream& os = open_out(file, out_path);
    os << "name,depth,h,baseline,log10_baseline,psi_full,log10_psi_full,psi_conv,log10_psi_conv\n";
    for (const char* stem : {"lenet5", "alexnet", "vgg16"}) {
        const ArchSpec arch = load_arch_spec(data_dir + "/architectures/" + stem + ".json");
        const double baseline = baseline_psi(arch.spec.depth(), arch.h);
        const double psi_full = psi_f(arch.spec, PsiMode::full);
        const double psi_conv = psi_f(arch.spec, PsiMode::conv_only);
        os << arch.name << "," << arch.spec.depth() << "," << arch.h << ","
           << format_g17(baseline) << "," << format_g17(std::log10(baseline)) << ","
           << format_g17(psi_full) << "," << format_g17(std::log10(psi_full)) << ","
           << format_g17(psi_conv) << "," << format_g17(std::log10(psi_conv)) << "\n";
    }
    return 0;
}

int cmd_perturb_check(const std::string& manifest, const std::string& dataset_path, double gamma,
                      std::size_t trials, std::uint64_t seed, double sigma_flag,
                      const std::string& out_path) {
    const Network net = load_network(manifest);
    const LabeledDataset data = load_cifar10_binary(dataset_path);
    if (data.size() == 0) throw DataError("perturb-check: empty dataset");

    double sigma = sigma_flag;
    if (sigma <= 0.0) {
        const Network normalized = normalize_weights(net);
        const double beta = layer_spectral_norms(normalized)[0];
        const double B = data.max_l2_norm();
        const NetworkSpec spec = to_network_spec(normalized, B, 10, data.size());
        sigma = sigma_choice(spec, gamma, B, beta).sigma;
    }
    const PerturbationReport rep =
        perturbation_experiment(net, data, sigma, trials, gamma, Rng(seed));

    std::ofstream file;
    std::ostream& os = open_out(file, out_path);
    os << "sigma," << format_g17(rep.sigma) << "\n";
    os << "gamma," << format_g17(rep.gamma) << "\n";
    os << "input_bound," << format_g17(rep.input_bound) << "\n";
    os << "beta," << format_g17(rep.beta) << "\n";
    os << "fraction_within_gamma_quarter," << format_g17(rep.fraction_within) << "\n";
    os << "trial,delta,perturb_bound,admissible\n";
    for (std::size_t t = 0; t < rep.deltas.size(); ++t)
        os << t << "," << format_g17(rep.deltas[t]) << "," << format_g17(rep.perturb_bound[t]) << ","
           << (rep.admissible[t] ? 1 : 0) << "\n";
    return 0;
}

int cmd_train(const std::string& dataset_path, std::size_t train_count, std::size_t test_count,
              double lr, int epochs, std::size_t batch, std::uint64_t seed,
              const std::string& out_path) {
    const LabeledDataset full = load_cifar10_binary(dataset_path);
    if (full.size() < train_count + test_count)
        throw DataError("train: dataset holds " + std::to_string(full.size()) +
                        " images, need " + std::to_string(train_count + test_count));
    LabeledDataset train, test;
    for (std::size_t i = 0; i < train_count; ++i) {
        train.images.push_back(full.images[i]);
        train.labels.push_back(full.labels[i]);
    }
    for (std::size_t i = 0; i < test_count; ++i) {
        test.images.push_back(full.images[train_count + i]);
        test.labels.push_back(full.labels[train_count + i]);
    }
    Rng rng(seed);
    Network net = make_cifar_tiny(32, 32, 3, 10, rng);
    GammaRule rule;
    Rng train_rng = rng.child(1);
    const Trajectory traj = sgd_train(net, train, test, lr, epochs, batch, rule, train_rng);

    std::ofstream file;
    std::ostream& os = open_out(file, out_path);
    os << "epoch,train_loss,train_acc,test_acc,ge,rw_over_gamma,rw21_over_gamma,mean_margin\n";
    for (const TrajectoryRecord& r : traj.records)
        emit_row(os, {static_cast<double>(r.epoch), r.train_loss, r.train_acc, r.test_acc, r.ge,
                      r.rw_over_gamma, r.rw21_over_gamma, r.mean_margin});
    return 0;
}

int cmd_augment(const std::string& dataset_path, const std::string& out_path, double pct,
                const std::string& kind_s, const AugmentConfig& cfg) {
    AugmentKind kind;
    if (kind_s == "translate")
        kind = AugmentKind::translate;
    else if (kind_s == "elastic")
        kind = AugmentKind::elastic;
    else
        throw UsageError("augment: --kind must be translate or elastic");
    const LabeledDataset base = load_cifar10_binary(dataset_path);
    const LabeledDataset mixed = build_mixed_dataset(base, pct, kind, cfg);
    save_cifar10_binary(mixed, out_path);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"spectral-complexity generalization-bound toolkit"};
    app.require_subcommand(1);

    std::string manifest, arch_path, dataset_path, out_path, kind_s = "conv";
    std::string mode_s = "simplified", psi_s = "full", fill_s = "zero";
    std::string data_dir = SPECBOUND_DATA_DIR;
    double gamma = 1.0, B = 1.0, delta = 0.05, sigma = 1.0, perturb_sigma = 0.0, pct = 0.0,
           lr = 0.01;
    std::string aug_kind = "translate";
    std::size_t m = 1, trials = 100, train_count = 1000, test_count = 200, batch = 32;
    int dims = 1, q = 9, N = 100, a = 16, b = 16, epochs = 20, classes = 10;
    std::uint64_t seed = 0;

    CLI::App* c_complexity = app.add_subcommand("complexity", "per-layer norms and R_W / R'_W");
    c_complexity->add_option("--manifest", manifest)->required();
    c_complexity->add_option("--out", out_path);

    CLI::App* c_bound = app.add_subcommand("bound", "generalization-error bound report");
    c_bound->add_option("--manifest", manifest);
    c_bound->add_option("--arch", arch_path);
    c_bound->add_option("--gamma", gamma);
    c_bound->add_option("--m", m);
    c_bound->add_option("--B", B);
    c_bound->add_option("--delta", delta);
    c_bound->add_option("--mode", mode_s, "simplified | pac_bayes");
    c_bound->add_option("--psi", psi_s, "full | conv_only");
    c_bound->add_option("--classes", classes);
    c_bound->add_option("--out", out_path);

    CLI::App* c_mc = app.add_subcommand("mc-spectral", "Monte-Carlo perturbation norms vs theory");
    c_mc->add_option("--kind", kind_s, "conv | locally_connected");
    c_mc->add_option("--dims", dims);
    c_mc->add_option("--q", q);
    c_mc->add_option("--N", N);
    c_mc->add_option("--a", a);
    c_mc->add_option("--b", b);
    c_mc->add_option("--sigma", sigma);
    c_mc->add_option("--trials", trials);
    c_mc->add_option("--seed", seed);
    c_mc->add_option("--out", out_path);

    CLI::App* c_table2 = app.add_subcommand("table2", "architecture constants for the built-in nets");
    c_table2->add_option("--data-dir", data_dir);
    c_table2->add_option("--out", out_path);

    CLI::App* c_perturb = app.add_subcommand("perturb-check", "output-perturbation experiment");
    c_perturb->add_option("--manifest", manifest)->required();
    c_perturb->add_option("--dataset", dataset_path)->required();
    c_perturb->add_option("--gamma", gamma);
    c_perturb->add_option("--trials", trials);
    c_perturb->add_option("--sigma", perturb_sigma, "0 = derive from sigma_choice");
    c_perturb->add_option("--seed", seed);
    c_perturb->add_option("--out", out_path);

    CLI::App* c_train = app.add_subcommand("train", "SGD on the built-in small CNN");
    c_train->add_option("--dataset", dataset_path)->required();
    c_train->add_option("--train-count", train_count);
    c_train->add_option("--test-count", test_count);
    c_train->add_option("--lr", lr);
    c_train->add_option("--epochs", epochs);
    c_train->add_option("--batch", batch);
    c_train->add_option("--seed", seed);
    c_train->add_option("--out", out_path);

    AugmentConfig cfg;
    CLI::App* c_augment = app.add_subcommand("augment", "build a mixed base/augmented dataset");
    c_augment->add_option("--dataset", dataset_path)->required();
    c_augment->add_option("--out", out_path)->required();
    c_augment->add_option("--pct", pct);
    c_augment->add_option("--kind", aug_kind, "translate | elastic");
    c_augment->add_option("--t", cfg.t);
    c_augment->add_option("--alpha", cfg.alpha);
    c_augment->add_option("--sigma-e", cfg.sigma_e);
    c_augment->add_option("--fill", fill_s, "zero | wrap");
    c_augment->add_option("--seed", seed);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (c_complexity->parsed()) return cmd_complexity(manifest, out_path);
        if (c_bound->parsed())
            return cmd_bound(manifest, arch_path, gamma, m, B, delta, mode_s, psi_s, classes,
                             out_path);
        if (c_mc->parsed())
            return cmd_mc_spectral(kind_s, dims, q, N, a, b, sigma, trials, seed, out_path);
        if (c_table2->parsed()) return cmd_table2(data_dir, out_path);
        if (c_perturb->parsed())
            return cmd_perturb_check(manifest, dataset_path, gamma, trials, seed, perturb_sigma,
                                     out_path);
        if (c_train->parsed())
            return cmd_train(dataset_path, train_count, test_count, lr, epochs, batch, seed,
                             out_path);
        if (c_augment->parsed()) {
            if (fill_s == "wrap")
                cfg.fill = FillRule::wrap;
            else if (fill_s != "zero")
                throw UsageError("augment: --fill must be zero or wrap");
            cfg.seed = seed;
            return cmd_augment(dataset_path, out_path, pct, aug_kind, cfg);
        }
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 1;
    } catch (const InputError& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return 1;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 1;
}

#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "specbound/bounds.hpp"
#include "specbound/matrix.hpp"
#include "specbound/rng.hpp"

namespace specbound {

// H x W x C image, values in [0,1] for datasets; stored [channel][row][col].
struct Image {
    int h = 0, w = 0, c = 0;
    std::vector<double> v;

    Image() = default;
    Image(int hh, int ww, int cc) : h(hh), w(ww), c(cc), v(static_cast<std::size_t>(hh) * ww * cc, 0.0) {}

    double& at(int ch, int y, int x) { return v[(static_cast<std::size_t>(ch) * h + y) * w + x]; }
    double at(int ch, int y, int x) const { return v[(static_cast<std::size_t>(ch) * h + y) * w + x]; }
    std::size_t size() const { return v.size(); }
    double l2_norm() const;
};

struct LabeledDataset {
    std::vector<Image> images;
    std::vector<int> labels;
    std::vector<std::string> provenance;  // empty or per-sample tag ("base", "translate", ...)

    std::size_t size() const { return images.size(); }
    void validate(int num_classes) const;
    double max_l2_norm() const;
};

// ----- feed-forward ReLU network: conv2d ("same" zero padding, stride 1),
// 2x2 max-pool stride 2, fully connected. ReLU after every parameterized
// layer except the last; biases are off (normalization identities are exact
// only bias-free).

struct ConvLayer {
    int in_ch = 0, out_ch = 0, q = 0;
    std::vector<double> taps;  // [out][in][ky][kx]

    ConvLayer() = default;
    ConvLayer(int ic, int oc, int qq)
        : in_ch(ic), out_ch(oc), q(qq),
          taps(static_cast<std::size_t>(oc) * ic * qq * qq, 0.0) {}

    double& tap(int o, int i, int ky, int kx) {
        return taps[((static_cast<std::size_t>(o) * in_ch + i) * q + ky) * q + kx];
    }
    double tap(int o, int i, int ky, int kx) const {
        return taps[((static_cast<std::size_t>(o) * in_ch + i) * q + ky) * q + kx];
    }
};

struct MaxPool2 {};

struct FcLayer {
    Matrix w;  // rows = outputs, cols = inputs
};

using Layer = std::variant<ConvLayer, MaxPool2, FcLayer>;

struct Network {
    int in_h = 0, in_w = 0, in_c = 0;
    std::vector<Layer> layers;

    std::size_t weight_layer_count() const;
    std::size_t parameter_count() const;
    void validate() const;  // dimension chain + finiteness
};

// input -> 32C3 -> MP2 -> 64C3 -> MP2 -> 10FC, Gaussian init scaled per layer
Network make_cifar_tiny(int in_h, int in_w, int in_c, int classes, Rng& rng, double weight_scale = 0.1);

std::vector<double> forward(const Network& net, const Image& x);

// f[y] - max_{j != y} f[j]
double margin(const std::vector<double>& logits, int y);

// fraction of samples with f[y] <= gamma + max_{j != y} f[j] (ties count as loss)
double empirical_margin_loss(const Network& net, const LabeledDataset& data, double gamma);

// Per weight layer: conv layers use the exact circular-convolution operator
// norm at the layer's input feature-map size; FC layers use power iteration.
std::vector<double> layer_spectral_norms(const Network& net);

// Operator-level norms for the spectral-complexity metrics (circular
// convention for conv layers: each tap appears N^2 times in the operator).
std::vector<LayerNorms> layer_operator_norms(const Network& net);

// W_l <- (beta / ||W_l||_2) W_l with beta the geometric mean of the layer
// spectral norms; logits are unchanged by ReLU/max-pool homogeneity.
Network normalize_weights(const Network& net);

// Architecture description for the bound calculus (N = layer output map size).
NetworkSpec to_network_spec(const Network& net, double input_bound, int classes,
                            std::size_t train_size);

struct PerturbationReport {
    double sigma = 0.0;
    double gamma = 0.0;
    double input_bound = 0.0;             // B = max data l2 norm
    double beta = 0.0;                    // common layer norm after normalization
    std::vector<double> deltas;           // max_x ||f_{w+u}(x) - f_w(x)||_2 per trial
    std::vector<std::vector<double>> layer_noise_norms;  // ||U_l||_2 per trial
    std::vector<double> perturb_bound;        // e^2 B beta^(d-1) sum_l ||U_l||_2
    std::vector<bool> admissible;         // all ||U_l||_2 <= ||W_l||_2 / d
    double fraction_within = 0.0;         // deltas <= gamma / 4
};

// Draws u ~ N(0, sigma^2 I) over all parameters per trial (conv taps
// perturbed as taps) on the weight-normalized network.
PerturbationReport perturbation_experiment(const Network& net, const LabeledDataset& data,
                                           double sigma, std::size_t trials, double gamma,
                                           const Rng& rng);

}  // namespace specbound

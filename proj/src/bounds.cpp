#include "specbound/bounds.hpp"

#include <cmath>

namespace specbound {

double bandeira_bound(double sigma1, double sigma2, double sigma_star,
                      std::size_t dmax, double eps, double delta) {
    if (eps <= 0.0 || eps > 0.5) throw UsageError("bandeira_bound: need 0 < eps <= 1/2");
    if (delta <= 0.0 || delta >= 1.0) throw UsageError("bandeira_bound: need 0 < delta < 1");
    if (sigma_star < 0.0) throw UsageError("bandeira_bound: sigma_star must be >= 0");
    if (sigma_star == 0.0) return (1.0 + eps) * (sigma1 + sigma2);
    const double log_term = 5.0 / std::sqrt(std::log1p(eps)) * sigma_star *
                            std::sqrt(std::log(static_cast<double>(dmax)));
    const double tail = sigma_star * std::sqrt(2.0 * std::log(1.0 / delta));
    return (1.0 + eps) * (sigma1 + sigma2 + log_term) + tail;
}

double conv_noise_bound(const ConvShape& shape, double sigma, double delta, ConvConstant c) {
    shape.validate();
    if (sigma < 0.0) throw InputError("conv_noise_bound: negative sigma");
    if (delta >= 1.0 || delta <= 0.0) throw UsageError("conv_noise_bound: need 0 < delta < 1");
    const double cval = (c == ConvConstant::tight) ? 1.0 : 1.5;
    const double tap_factor = std::sqrt(static_cast<double>(shape.taps_per_filter()));
    const double freq = static_cast<double>(shape.sites());  // N or N^2
    return sigma * (cval * tap_factor * (std::sqrt(static_cast<double>(shape.a)) +
                                         std::sqrt(static_cast<double>(shape.b))) +
                    std::sqrt(2.0 * std::log(2.0 * freq / delta)));
}

double lc_noise_bound(const ConvShape& shape, double sigma, double delta, double eps) {
    shape.validate();
    if (sigma < 0.0) throw InputError("lc_noise_bound: negative sigma");
    const SupportStats st = support_stats(conv_support(shape));
    const std::size_t dmax =
        std::max(static_cast<std::size_t>(shape.a) * shape.sites(),
                 static_cast<std::size_t>(shape.b) * shape.sites());
    return sigma * bandeira_bound(st.sigma1, st.sigma2, st.sigma_star, dmax, eps, delta);
}

double fc_noise_bound(std::size_t s, double sigma, double delta) {
    if (sigma < 0.0) throw InputError("fc_noise_bound: negative sigma");
    if (delta <= 0.0 || delta >= 1.0) throw UsageError("fc_noise_bound: need 0 < delta < 1");
    return sigma * (2.0 * std::sqrt(static_cast<double>(s)) +
                    std::sqrt(2.0 * std::log(1.0 / delta)));
}

double gaussian_matrix_bound(std::size_t rows, std::size_t cols, double sigma, double delta) {
    if (sigma < 0.0) throw InputError("gaussian_matrix_bound: negative sigma");
    if (delta <= 0.0 || delta >= 1.0)
        throw UsageError("gaussian_matrix_bound: need 0 < delta < 1");
    return sigma * (std::sqrt(static_cast<double>(rows)) +
                    std::sqrt(static_cast<double>(cols)) +
                    std::sqrt(2.0 * std::log(1.0 / delta)));
}

double psi_f(const NetworkSpec& net, PsiMode mode) {
    if (net.layers.empty()) throw UsageError("psi_f: empty network");
    double total = 0.0;
    for (const LayerSpec& l : net.layers) {
        if (l.is_conv_like()) {
            total += l.q * std::sqrt(static_cast<double>(l.b));
        } else if (mode == PsiMode::full) {
            total += std::sqrt(static_cast<double>(l.nonzeros()));
        }
    }
    return total;
}

double baseline_psi(std::size_t depth, std::size_t max_width) {
    return static_cast<double>(depth) * std::sqrt(static_cast<double>(max_width));
}

LayerNorms layer_norms_of(const Matrix& w) {
    double two_one_t = 0.0;
    for (std::size_t i = 0; i < w.rows; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < w.cols; ++j) s += w(i, j) * w(i, j);
        two_one_t += std::sqrt(s);
    }
    return {spectral_norm(w), matrix_norm(w, NormKind::frobenius), two_one_t};
}

double spectral_complexity(const std::vector<LayerNorms>& norms, ComplexityVariant v) {
    if (norms.empty()) throw UsageError("spectral_complexity: empty network");
    double product = 1.0, sum = 0.0;
    for (const LayerNorms& n : norms) {
        if (n.spectral <= 0.0) throw InputError("spectral_complexity: zero layer");
        product *= n.spectral;
        if (v == ComplexityVariant::rw) {
            sum += (n.frobenius * n.frobenius) / (n.spectral * n.spectral);
        } else {
            sum += std::pow(n.two_one_t, 2.0 / 3.0) / std::pow(n.spectral, 2.0 / 3.0);
        }
    }
    const double exponent = (v == ComplexityVariant::rw) ? 0.5 : 1.5;
    return product * std::pow(sum, exponent);
}

double spectral_complexity(const std::vector<Matrix>& weights, ComplexityVariant v) {
    std::vector<LayerNorms> norms;
    norms.reserve(weights.size());
    for (const Matrix& w : weights) norms.push_back(layer_norms_of(w));
    return spectral_complexity(norms, v);
}

SigmaChoice sigma_choice(const NetworkSpec& net, double gamma, double B, double beta_tilde) {
    if (net.layers.empty()) throw UsageError("sigma_choice: empty network");
    if (gamma <= 0.0 || B <= 0.0 || beta_tilde <= 0.0)
        throw UsageError("sigma_choice: gamma, B, beta_tilde must be positive");
    const double d = static_cast<double>(net.depth());
    SigmaChoice out;
    out.K.assign(net.layers.size(), 0.0);
    out.J.assign(net.layers.size(), 0.0);
    double denom_sum = 0.0;
    for (std::size_t i = 0; i < net.layers.size(); ++i) {
        const LayerSpec& l = net.layers[i];
        if (l.is_conv_like()) {
            out.K[i] = l.q * (std::sqrt(static_cast<double>(l.a)) +
                              std::sqrt(static_cast<double>(l.b)) +
                              std::sqrt(2.0 * std::log(4.0 * l.N * l.N * d)));
            denom_sum += out.K[i];
        } else {
            out.J[i] = 2.0 * std::sqrt(static_cast<double>(l.nonzeros())) +
                       std::sqrt(2.0 * std::log(2.0 * d));
            denom_sum += out.J[i];
        }
    }
    out.sigma = gamma / (42.0 * B * std::pow(beta_tilde, d - 1.0) * denom_sum);
    return out;
}

double kl_term(double weight_sq_norm, double sigma) {
    if (sigma <= 0.0) throw UsageError("kl_term: sigma must be positive");
    return weight_sq_norm / (2.0 * sigma * sigma);
}

BoundReport ge_bound(const NetworkSpec& net, const std::vector<LayerNorms>& norms,
                     double weight_sq_norm, double gamma, std::size_t m, double B,
                     double delta, BoundMode mode, PsiMode psi_mode) {
    if (m < 2) throw UsageError("ge_bound: need m >= 2");
    if (gamma <= 0.0) throw UsageError("ge_bound: gamma must be positive");
    if (delta <= 0.0 || delta >= 1.0) throw UsageError("ge_bound: need 0 < delta < 1");

    BoundReport r;
    r.mode = mode;
    r.psi_mode = psi_mode;
    r.delta = delta;
    r.gamma = gamma;
    r.B = B;
    r.m = m;
    r.psi = psi_f(net, psi_mode);
    r.rw = spectral_complexity(norms, ComplexityVariant::rw);

    if (mode == BoundMode::simplified) {
        r.value = B * r.psi * r.rw / (gamma * std::sqrt(static_cast<double>(m)));
        return r;
    }

    const double d = static_cast<double>(net.depth());
    double product = 1.0;
    for (const LayerNorms& n : norms) product *= n.spectral;
    r.beta_tilde = std::pow(product, 1.0 / d);

    const SigmaChoice sc = sigma_choice(net, gamma, B, r.beta_tilde);
    r.sigma = sc.sigma;
    r.K = sc.K;
    r.J = sc.J;
    r.kl = kl_term(weight_sq_norm, sc.sigma);
    r.cover_size = d * std::pow(static_cast<double>(m), 1.0 / (2.0 * d));
    r.delta_prime = delta / r.cover_size;
    r.value = std::sqrt((r.kl + std::log(6.0 * static_cast<double>(m) / r.delta_prime)) /
                        (static_cast<double>(m) - 1.0));
    return r;
}

BoundReport ge_bound(const NetworkSpec& net, const std::vector<Matrix>& weights,
                     double gamma, std::size_t m, double B, double delta,
                     BoundMode mode, PsiMode psi_mode) {
    std::vector<LayerNorms> norms;
    norms.reserve(weights.size());
    double wsq = 0.0;
    for (const Matrix& w : weights) {
        norms.push_back(layer_norms_of(w));
        for (double v : w.data) wsq += v * v;
    }
    return ge_bound(net, norms, wsq, gamma, m, B, delta, mode, psi_mode);
}

}  // namespace specbound

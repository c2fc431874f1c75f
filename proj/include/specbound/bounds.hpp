#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "specbound/matrix.hpp"
#include "specbound/structured.hpp"

namespace specbound {

// -------- concentration bounds --------

// Gaussian matrices with structured variance pattern (sigma1/sigma2/sigma*
// are the max row/column l2 norms and max entry of the pattern). Tail level
// t is calibrated so the exceedance probability exp(-t^2 / 2 sigma*^2)
// equals delta; sigma* = 0 degenerates to the deterministic (1+eps)(s1+s2).
double bandeira_bound(double sigma1, double sigma2, double sigma_star,
                      std::size_t dmax, double eps, double delta);

enum class ConvConstant { tight, safe };  // 1.0 / 1.5

// High-probability bound on ||U||_2 for a convolutional perturbation with
// i.i.d. N(0, sigma^2) taps:
//   sigma * ( c * sqrt(tap count) * (sqrt(a)+sqrt(b)) + sqrt(2 ln(2 N^dims / delta)) )
// The frequency count inside the log is N^dims (one DFT axis per dim), and
// sqrt(tap count) = q^(dims/2) so the 2-d case reads c*q*(sqrt a + sqrt b).
double conv_noise_bound(const ConvShape& shape, double sigma, double delta,
                        ConvConstant c = ConvConstant::safe);

// Locally-connected perturbation: the structured-Gaussian bound evaluated on
// the banded support (sigma1/sigma2 from the pattern, sigma* = 1), scaled by sigma.
double lc_noise_bound(const ConvShape& shape, double sigma, double delta, double eps);

// Sparse fully-connected, row and column sparsity s: sigma(2 sqrt(s) + sqrt(2 ln(1/delta)))
double fc_noise_bound(std::size_t s, double sigma, double delta);

// Dense Gaussian: sigma(sqrt(rows) + sqrt(cols) + sqrt(2 ln(1/delta)))
double gaussian_matrix_bound(std::size_t rows, std::size_t cols, double sigma, double delta);

// -------- architecture description --------

enum class LayerKind { conv2d, locally_connected2d, fully_connected };

struct LayerSpec {
    LayerKind kind = LayerKind::fully_connected;
    std::string name;
    // conv2d / locally_connected2d
    int a = 0, b = 0, q = 0, N = 0;
    // fully_connected; s = 0 means dense (rows*cols nonzeros)
    std::size_t rows = 0, cols = 0, s = 0;

    bool is_conv_like() const { return kind != LayerKind::fully_connected; }
    std::size_t nonzeros() const { return s != 0 ? s : rows * cols; }
};

struct NetworkSpec {
    std::vector<LayerSpec> layers;
    double input_bound = 1.0;     // B, uniform bound on ||x||_2
    int classes = 10;             // k
    std::size_t train_size = 1;   // m

    std::size_t depth() const { return layers.size(); }
};

enum class PsiMode { full, conv_only };

// Psi_f = sum_{conv/LC} q_l sqrt(b_l) + sum_{FC} sqrt(s_l); conv_only drops
// the fully-connected sum.
double psi_f(const NetworkSpec& net, PsiMode mode = PsiMode::full);

// d sqrt(h), the dense-layer baseline constant
double baseline_psi(std::size_t depth, std::size_t max_width);

// -------- spectral complexity --------

struct LayerNorms {
    double spectral;    // ||W||_2
    double frobenius;   // ||W||_F
    double two_one_t;   // ||W^T||_{2,1} = sum of row l2 norms of W
};

enum class ComplexityVariant { rw, rw21 };

double spectral_complexity(const std::vector<LayerNorms>& norms, ComplexityVariant v);
double spectral_complexity(const std::vector<Matrix>& weights, ComplexityVariant v);
LayerNorms layer_norms_of(const Matrix& w);

// -------- PAC-Bayes assembly --------

struct SigmaChoice {
    double sigma = 0.0;
    std::vector<double> K;  // per conv/LC layer, 0 for FC slots
    std::vector<double> J;  // per FC layer, 0 for conv slots
};

// sigma = gamma / (42 B beta_tilde^(d-1) [sum K_l + sum J_l]) with
// K_l = q_l(sqrt a_l + sqrt b_l + sqrt(2 ln(4 N_l^2 d))) and
// J_l = 2 sqrt(s_l) + sqrt(2 ln(2d))
SigmaChoice sigma_choice(const NetworkSpec& net, double gamma, double B, double beta_tilde);

// KL(N(w, sigma^2 I) || N(0, sigma^2 I)) <= |w|^2 / (2 sigma^2)
double kl_term(double weight_sq_norm, double sigma);

enum class BoundMode { simplified, pac_bayes };

struct BoundReport {
    double value = 0.0;
    double delta = 0.0;
    BoundMode mode = BoundMode::simplified;
    PsiMode psi_mode = PsiMode::full;
    double psi = 0.0;
    double rw = 0.0;
    double gamma = 0.0;
    double B = 0.0;
    std::size_t m = 0;
    // pac_bayes intermediates
    double sigma = 0.0;
    double kl = 0.0;
    double beta_tilde = 0.0;
    double cover_size = 0.0;
    double delta_prime = 0.0;
    std::vector<double> K, J;
};

// simplified: B * Psi_f * R_W / (gamma sqrt(m))
// pac_bayes:  sqrt((KL + ln(6m/delta')) / (m-1)) with KL = |w|^2/(2 sigma^2),
//             sigma from sigma_choice at beta_tilde = (prod ||W_l||_2)^(1/d),
//             delta' = delta / (d m^(1/2d)) (union bound over the beta cover)
BoundReport ge_bound(const NetworkSpec& net, const std::vector<LayerNorms>& norms,
                     double weight_sq_norm, double gamma, std::size_t m, double B,
                     double delta, BoundMode mode, PsiMode psi_mode = PsiMode::full);

BoundReport ge_bound(const NetworkSpec& net, const std::vector<Matrix>& weights,
                     double gamma, std::size_t m, double B, double delta,
                     BoundMode mode, PsiMode psi_mode = PsiMode::full);

}  // namespace specbound

#include "specbound/network.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>

#include "specbound/structured.hpp"

namespace specbound {

double Image::l2_norm() const {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

void LabeledDataset::validate(int num_classes) const {
    if (images.size() != labels.size())
        throw DataError("dataset: image/label count mismatch");
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] < 0 || labels[i] >= num_classes)
            throw DataError("dataset: label out of range at sample " + std::to_string(i));
        if (i > 0 && (images[i].h != images[0].h || images[i].w != images[0].w ||
                      images[i].c != images[0].c))
            throw DataError("dataset: non-uniform image shape at sample " + std::to_string(i));
    }
}

double LabeledDataset::max_l2_norm() const {
    double best = 0.0;
    for (const Image& im : images) best = std::max(best, im.l2_norm());
    return best;
}

std::size_t Network::weight_layer_count() const {
    std::size_t n = 0;
    for (const Layer& l : layers)
        if (!std::holds_alternative<MaxPool2>(l)) ++n;
    return n;
}

std::size_t Network::parameter_count() const {
    std::size_t n = 0;
    for (const Layer& l : layers) {
        if (const auto* cv = std::get_if<ConvLayer>(&l)) n += cv->taps.size();
        if (const auto* fc = std::get_if<FcLayer>(&l)) n += fc->w.data.size();
    }
    return n;
}

namespace {

struct Shape {
    int h, w, c;
    std::size_t numel() const { return static_cast<std::size_t>(h) * w * c; }
};

Shape shape_after(const Shape& in, const Layer& l) {
    if (const auto* cv = std::get_if<ConvLayer>(&l)) {
        if (cv->in_ch != in.c)
            throw InputError("network: conv input channels mismatch");
        return {in.h, in.w, cv->out_ch};
    }
    if (std::holds_alternative<MaxPool2>(l)) return {in.h / 2, in.w / 2, in.c};
    const auto& fc = std::get<FcLayer>(l);
    if (fc.w.cols != in.numel())
        throw InputError("network: fc input size mismatch");
    return {1, 1, static_cast<int>(fc.w.rows)};
}

}  // namespace

void Network::validate() const {
    if (layers.empty()) throw InputError("network: no layers");
    Shape s{in_h, in_w, in_c};
    for (const Layer& l : layers) {
        s = shape_after(s, l);
        if (const auto* cv = std::get_if<ConvLayer>(&l)) {
            for (double t : cv->taps)
                if (!std::isfinite(t)) throw InputError("network: non-finite conv tap");
        } else if (const auto* fc = std::get_if<FcLayer>(&l)) {
            if (!fc->w.all_finite()) throw InputError("network: non-finite fc weight");
        }
    }
}

Network make_cifar_tiny(int in_h, int in_w, int in_c, int classes, Rng& rng,
                        double weight_scale) {
    Network net;
    net.in_h = in_h;
    net.in_w = in_w;
    net.in_c = in_c;
    ConvLayer c1(in_c, 32, 3);
    for (double& t : c1.taps) t = rng.gaussian(weight_scale / std::sqrt(9.0 * in_c));
    ConvLayer c2(32, 64, 3);
    for (double& t : c2.taps) t = rng.gaussian(weight_scale / std::sqrt(9.0 * 32));
    const std::size_t flat = static_cast<std::size_t>(64) * (in_h / 4) * (in_w / 4);
    FcLayer fc{Matrix(classes, flat)};
    for (double& v : fc.w.data) v = rng.gaussian(weight_scale / std::sqrt(static_cast<double>(flat)));
    net.layers = {std::move(c1), MaxPool2{}, std::move(c2), MaxPool2{}, std::move(fc)};
    return net;
}

namespace {

void conv_same(const ConvLayer& cv, const Image& in, Image& out) {
    const int h = in.h, w = in.w, q = cv.q;
    const int pad = (q - 1) / 2;
    out = Image(h, w, cv.out_ch);
    for (int o = 0; o < cv.out_ch; ++o) {
        for (int i = 0; i < cv.in_ch; ++i) {
            for (int ky = 0; ky < q; ++ky) {
                const int dy = ky - pad;
                const int y0 = std::max(0, -dy), y1 = std::min(h, h - dy);
                for (int kx = 0; kx < q; ++kx) {
                    const int dx = kx - pad;
                    const int x0 = std::max(0, -dx), x1 = std::min(w, w - dx);
                    const double t = cv.tap(o, i, ky, kx);
                    if (t == 0.0) continue;
                    for (int y = y0; y < y1; ++y) {
                        const double* src = &in.v[(static_cast<std::size_t>(i) * h + y + dy) * w + x0 + dx];
                        double* dst = &out.v[(static_cast<std::size_t>(o) * h + y) * w + x0];
                        for (int x = x0; x < x1; ++x) *dst++ += t * *src++;
                    }
                }
            }
        }
    }
}

void maxpool2(const Image& in, Image& out) {
    const int oh = in.h / 2, ow = in.w / 2;
    out = Image(oh, ow, in.c);
    for (int c = 0; c < in.c; ++c)
        for (int y = 0; y < oh; ++y)
            for (int x = 0; x < ow; ++x)
                out.at(c, y, x) = std::max(std::max(in.at(c, 2 * y, 2 * x), in.at(c, 2 * y, 2 * x + 1)),
                                           std::max(in.at(c, 2 * y + 1, 2 * x), in.at(c, 2 * y + 1, 2 * x + 1)));
}

void fc_apply(const FcLayer& fc, const Image& in, Image& out) {
    out = Image(1, 1, static_cast<int>(fc.w.rows));
    for (std::size_t r = 0; r < fc.w.rows; ++r) {
        const double* row = &fc.w.data[r * fc.w.cols];
        double s = 0.0;
        for (std::size_t j = 0; j < fc.w.cols; ++j) s += row[j] * in.v[j];
        out.v[r] = s;
    }
}

void relu_inplace(Image& im) {
    for (double& x : im.v) x = x > 0.0 ? x : 0.0;
}

}  // namespace

std::vector<double> forward(const Network& net, const Image& x) {
    if (x.h != net.in_h || x.w != net.in_w || x.c != net.in_c)
        throw InputError("forward: input shape mismatch");
    Image cur = x, next;
    for (std::size_t li = 0; li < net.layers.size(); ++li) {
        const Layer& l = net.layers[li];
        if (const auto* cv = std::get_if<ConvLayer>(&l)) {
            if (cv->in_ch != cur.c) throw InputError("forward: conv channel mismatch");
            conv_same(*cv, cur, next);
        } else if (std::holds_alternative<MaxPool2>(l)) {
            maxpool2(cur, next);
        } else {
            const auto& fc = std::get<FcLayer>(l);
            if (fc.w.cols != cur.size()) throw InputError("forward: fc size mismatch");
            fc_apply(fc, cur, next);
        }
        const bool last = li + 1 == net.layers.size();
        if (!last && !std::holds_alternative<MaxPool2>(l)) relu_inplace(next);
        cur = std::move(next);
    }
    return cur.v;
}

double margin(const std::vector<double>& logits, int y) {
    if (logits.size() < 2) throw UsageError("margin: need at least 2 classes");
    if (y < 0 || static_cast<std::size_t>(y) >= logits.size())
        throw UsageError("margin: label out of range");
    double best_other = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < logits.size(); ++j)
        if (static_cast<int>(j) != y) best_other = std::max(best_other, logits[j]);
    return logits[y] - best_other;
}

double empirical_margin_loss(const Network& net, const LabeledDataset& data, double gamma) {
    if (data.size() == 0) throw UsageError("empirical_margin_loss: empty dataset");
    if (gamma < 0.0) throw UsageError("empirical_margin_loss: gamma must be >= 0");
    const std::int64_t n = static_cast<std::int64_t>(data.size());
    std::vector<std::uint8_t> lost(data.size(), 0);
#pragma omp parallel for schedule(dynamic)
    for (std::int64_t i = 0; i < n; ++i) {
        const std::vector<double> logits = forward(net, data.images[i]);
        lost[i] = margin(logits, data.labels[i]) <= gamma ? 1 : 0;
    }
    std::size_t count = 0;
    for (std::uint8_t b : lost) count += b;
    return static_cast<double>(count) / static_cast<double>(data.size());
}

namespace {

// circular operator norm of a conv layer at its input feature-map size
double conv_layer_spectral(const ConvLayer& cv, int map_h, int map_w) {
    if (map_h != map_w)
        throw InputError("conv layer norms require square feature maps");
    ConvShape shape{2, cv.q, cv.in_ch, cv.out_ch, map_h};
    FilterBank fb(shape);
    fb.taps = cv.taps;  // identical [b][a][ky*q+kx] layout
    return conv_spectral_norm_exact(fb);
}

template <typename ConvFn, typename FcFn>
void for_each_weight_layer(const Network& net, ConvFn on_conv, FcFn on_fc) {
    Shape s{net.in_h, net.in_w, net.in_c};
    for (const Layer& l : net.layers) {
        if (const auto* cv = std::get_if<ConvLayer>(&l)) on_conv(*cv, s.h, s.w);
        if (const auto* fc = std::get_if<FcLayer>(&l)) on_fc(*fc);
        s = shape_after(s, l);
    }
}

}  // namespace

std::vector<double> layer_spectral_norms(const Network& net) {
    std::vector<double> norms;
    for_each_weight_layer(
        net,
        [&](const ConvLayer& cv, int h, int w) { norms.push_back(conv_layer_spectral(cv, h, w)); },
        [&](const FcLayer& fc) { norms.push_back(spectral_norm(fc.w)); });
    return norms;
}

std::vector<LayerNorms> layer_operator_norms(const Network& net) {
    std::vector<LayerNorms> norms;
    for_each_weight_layer(
        net,
        [&](const ConvLayer& cv, int h, int w) {
            const double spec = conv_layer_spectral(cv, h, w);
            double fro_taps_sq = 0.0;
            for (double t : cv.taps) fro_taps_sq += t * t;
            // circular operator: each tap repeats once per spatial site
            const double sites = static_cast<double>(h) * w;
            double two_one = 0.0;
            for (int o = 0; o < cv.out_ch; ++o) {
                double s = 0.0;
                for (int i = 0; i < cv.in_ch; ++i)
                    for (int k = 0; k < cv.q * cv.q; ++k) {
                        const double t = cv.taps[(static_cast<std::size_t>(o) * cv.in_ch + i) *
                                                     cv.q * cv.q + k];
                        s += t * t;
                    }
                two_one += sites * std::sqrt(s);
            }
            norms.push_back({spec, std::sqrt(sites * fro_taps_sq), two_one});
        },
        [&](const FcLayer& fc) { norms.push_back(layer_norms_of(fc.w)); });
    return norms;
}

Network normalize_weights(const Network& net) {
    const std::vector<double> norms = layer_spectral_norms(net);
    double log_sum = 0.0;
    for (double n : norms) {
        if (n <= 0.0) throw InputError("normalize_weights: zero layer spectral norm");
        log_sum += std::log(n);
    }
    const double beta = std::exp(log_sum / static_cast<double>(norms.size()));
    Network out = net;
    std::size_t idx = 0;
    for (Layer& l : out.layers) {
        if (auto* cv = std::get_if<ConvLayer>(&l)) {
            const double c = beta / norms[idx++];
            for (double& t : cv->taps) t *= c;
        } else if (auto* fc = std::get_if<FcLayer>(&l)) {
            const double c = beta / norms[idx++];
            for (double& v : fc->w.data) v *= c;
        }
    }
    return out;
}

NetworkSpec to_network_spec(const Network& net, double input_bound, int classes,
                            std::size_t train_size) {
    NetworkSpec spec;
    spec.input_bound = input_bound;
    spec.classes = classes;
    spec.train_size = train_size;
    for_each_weight_layer(
        net,
        [&](const ConvLayer& cv, int h, int w) {
            LayerSpec l;
            l.kind = LayerKind::conv2d;
            l.a = cv.in_ch;
            l.b = cv.out_ch;
            l.q = cv.q;
            l.N = h;  // "same" padding keeps the map size
            (void)w;
            spec.layers.push_back(l);
        },
        [&](const FcLayer& fc) {
            LayerSpec l;
            l.kind = LayerKind::fully_connected;
            l.rows = fc.w.rows;
            l.cols = fc.w.cols;
            spec.layers.push_back(l);
        });
    return spec;
}

PerturbationReport perturbation_experiment(const Network& net, const LabeledDataset& data,
                                           double sigma, std::size_t trials, double gamma,
                                           const Rng& rng) {
    if (sigma < 0.0) throw InputError("perturbation_experiment: negative sigma");
    if (trials < 1) throw UsageError("perturbation_experiment: trials must be >= 1");
    if (data.size() == 0) throw UsageError("perturbation_experiment: empty dataset");

    const Network base = normalize_weights(net);
    const std::vector<double> w_norms = layer_spectral_norms(base);
    const std::size_t d = w_norms.size();
    double log_sum = 0.0;
    for (double n : w_norms) log_sum += std::log(n);
    const double beta = std::exp(log_sum / static_cast<double>(d));

    PerturbationReport rep;
    rep.sigma = sigma;
    rep.gamma = gamma;
    rep.beta = beta;
    rep.input_bound = data.max_l2_norm();
    rep.deltas.assign(trials, 0.0);
    rep.perturb_bound.assign(trials, 0.0);
    rep.layer_noise_norms.assign(trials, {});
    rep.admissible.assign(trials, false);

    // base logits, computed once
    std::vector<std::vector<double>> base_logits(data.size());
#pragma omp parallel for schedule(dynamic)
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(data.size()); ++i)
        base_logits[i] = forward(base, data.images[i]);

    std::vector<std::string> failures(trials);
#pragma omp parallel for schedule(dynamic)
    for (std::int64_t t = 0; t < static_cast<std::int64_t>(trials); ++t) {
        try {
            Rng trial_rng = rng.child(static_cast<std::uint64_t>(t));
            Network perturbed = base;
            std::vector<double> u_norms;
            Shape s{base.in_h, base.in_w, base.in_c};
            for (Layer& l : perturbed.layers) {
                if (auto* cv = std::get_if<ConvLayer>(&l)) {
                    ConvShape shape{2, cv->q, cv->in_ch, cv->out_ch, s.h};
                    FilterBank noise(shape);
                    for (double& x : noise.taps) x = trial_rng.gaussian(sigma);
                    u_norms.push_back(conv_spectral_norm_exact(noise));
                    for (std::size_t k = 0; k < cv->taps.size(); ++k)
                        cv->taps[k] += noise.taps[k];
                } else if (auto* fc = std::get_if<FcLayer>(&l)) {
                    Matrix noise(fc->w.rows, fc->w.cols);
                    for (double& x : noise.data) x = trial_rng.gaussian(sigma);
                    u_norms.push_back(sigma > 0.0 ? spectral_norm(noise) : 0.0);
                    for (std::size_t k = 0; k < fc->w.data.size(); ++k)
                        fc->w.data[k] += noise.data[k];
                }
                s = shape_after(s, l);
            }

            double delta_max = 0.0;
            for (std::size_t i = 0; i < data.size(); ++i) {
                const std::vector<double> logits = forward(perturbed, data.images[i]);
                double diff = 0.0;
                for (std::size_t j = 0; j < logits.size(); ++j) {
                    const double e = logits[j] - base_logits[i][j];
                    diff += e * e;
                }
                delta_max = std::max(delta_max, std::sqrt(diff));
            }

            double u_sum = 0.0;
            bool adm = true;
            for (std::size_t li = 0; li < u_norms.size(); ++li) {
                u_sum += u_norms[li];
                adm = adm && u_norms[li] <= w_norms[li] / static_cast<double>(d);
            }
            rep.deltas[t] = delta_max;
            rep.layer_noise_norms[t] = std::move(u_norms);
            rep.perturb_bound[t] = std::exp(2.0) * rep.input_bound *
                               std::pow(beta, static_cast<double>(d) - 1.0) * u_sum;
            rep.admissible[t] = adm;
        } catch (const std::exception& e) {
            failures[t] = e.what();
        }
    }
    for (std::size_t t = 0; t < trials; ++t)
        if (!failures[t].empty())
            throw ConvergenceError(
                "perturbation_experiment: trial " + std::to_string(t) + ": " + failures[t], 0.0);

    std::size_t within = 0;
    for (double dlt : rep.deltas)
        if (dlt <= gamma / 4.0) ++within;
    rep.fraction_within = static_cast<double>(within) / static_cast<double>(trials);
    return rep;
}

}  // namespace specbound

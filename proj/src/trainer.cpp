#include "specbound/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <string>
#include <variant>

namespace specbound {

std::vector<double> flatten_params(const Network& net) {
    std::vector<double> flat;
    flat.reserve(net.parameter_count());
    for (const Layer& l : net.layers) {
        if (const auto* cv = std::get_if<ConvLayer>(&l))
            flat.insert(flat.end(), cv->taps.begin(), cv->taps.end());
        if (const auto* fc = std::get_if<FcLayer>(&l))
            flat.insert(flat.end(), fc->w.data.begin(), fc->w.data.end());
    }
    return flat;
}

void set_params(Network& net, const std::vector<double>& flat) {
    if (flat.size() != net.parameter_count())
        throw InputError("set_params: parameter count mismatch");
    std::size_t off = 0;
    for (Layer& l : net.layers) {
        if (auto* cv = std::get_if<ConvLayer>(&l)) {
            std::copy_n(flat.begin() + off, cv->taps.size(), cv->taps.begin());
            off += cv->taps.size();
        } else if (auto* fc = std::get_if<FcLayer>(&l)) {
            std::copy_n(flat.begin() + off, fc->w.data.size(), fc->w.data.begin());
            off += fc->w.data.size();
        }
    }
}

namespace {

// forward pass keeping every post-activation map (acts[0] = input)
std::vector<Image> forward_cached(const Network& net, const Image& x) {
    std::vector<Image> acts;
    acts.reserve(net.layers.size() + 1);
    acts.push_back(x);
    for (std::size_t li = 0; li < net.layers.size(); ++li) {
        const Layer& l = net.layers[li];
        const Image& in = acts.back();
        Image out;
        if (const auto* cv = std::get_if<ConvLayer>(&l)) {
            const int pad = (cv->q - 1) / 2;
            out = Image(in.h, in.w, cv->out_ch);
            for (int o = 0; o < cv->out_ch; ++o)
                for (int i = 0; i < cv->in_ch; ++i)
                    for (int ky = 0; ky < cv->q; ++ky) {
                        const int dy = ky - pad;
                        const int y0 = std::max(0, -dy), y1 = std::min(in.h, in.h - dy);
                        for (int kx = 0; kx < cv->q; ++kx) {
                            const int dx = kx - pad;
                            const int x0 = std::max(0, -dx), x1 = std::min(in.w, in.w - dx);
                            const double t = cv->tap(o, i, ky, kx);
                            if (t == 0.0) continue;
                            for (int y = y0; y < y1; ++y) {
                                const double* src =
                                    &in.v[(static_cast<std::size_t>(i) * in.h + y + dy) * in.w + x0 + dx];
                                double* dst = &out.v[(static_cast<std::size_t>(o) * in.h + y) * in.w + x0];
                                for (int x = x0; x < x1; ++x) *dst++ += t * *src++;
                            }
                        }
                    }
        } else if (std::holds_alternative<MaxPool2>(l)) {
            out = Image(in.h / 2, in.w / 2, in.c);
            for (int c = 0; c < in.c; ++c)
                for (int y = 0; y < out.h; ++y)
                    for (int x = 0; x < out.w; ++x)
                        out.at(c, y, x) =
                            std::max(std::max(in.at(c, 2 * y, 2 * x), in.at(c, 2 * y, 2 * x + 1)),
                                     std::max(in.at(c, 2 * y + 1, 2 * x), in.at(c, 2 * y + 1, 2 * x + 1)));
        } else {
            const auto& fc = std::get<FcLayer>(l);
            out = Image(1, 1, static_cast<int>(fc.w.rows));
            for (std::size_t r = 0; r < fc.w.rows; ++r) {
                const double* row = &fc.w.data[r * fc.w.cols];
                double s = 0.0;
                for (std::size_t j = 0; j < fc.w.cols; ++j) s += row[j] * in.v[j];
                out.v[r] = s;
            }
        }
        const bool last = li + 1 == net.layers.size();
        if (!last && !std::holds_alternative<MaxPool2>(l))
            for (double& v : out.v) v = v > 0.0 ? v : 0.0;
        acts.push_back(std::move(out));
    }
    return acts;
}

// gradient of -log softmax(logits)[y] w.r.t. all parameters, appended into
// `grad` (same flat layout as flatten_params); returns the sample loss
double backward_sample(const Network& net, const std::vector<Image>& acts, int y,
                       std::vector<double>& grad) {
    const std::vector<double>& logits = acts.back().v;
    const double zmax = *std::max_element(logits.begin(), logits.end());
    double zsum = 0.0;
    for (double z : logits) zsum += std::exp(z - zmax);
    const double loss = -(logits[y] - zmax - std::log(zsum));

    Image g = acts.back();
    for (std::size_t j = 0; j < logits.size(); ++j)
        g.v[j] = std::exp(logits[j] - zmax) / zsum - (static_cast<int>(j) == y ? 1.0 : 0.0);

    // parameter offsets per layer, front to back
    std::vector<std::size_t> offsets(net.layers.size(), 0);
    std::size_t off = 0;
    for (std::size_t li = 0; li < net.layers.size(); ++li) {
        offsets[li] = off;
        if (const auto* cv = std::get_if<ConvLayer>(&net.layers[li])) off += cv->taps.size();
        if (const auto* fc = std::get_if<FcLayer>(&net.layers[li])) off += fc->w.data.size();
    }

    for (std::size_t li = net.layers.size(); li-- > 0;) {
        const Layer& l = net.layers[li];
        const Image& in = acts[li];
        const Image& out = acts[li + 1];
        const bool last = li + 1 == net.layers.size();
        if (!last && !std::holds_alternative<MaxPool2>(l))
            for (std::size_t k = 0; k < g.v.size(); ++k)
                if (out.v[k] <= 0.0) g.v[k] = 0.0;

        Image gin(in.h, in.w, in.c);
        if (const auto* cv = std::get_if<ConvLayer>(&l)) {
            const int pad = (cv->q - 1) / 2;
            double* gw = grad.data() + offsets[li];
            for (int o = 0; o < cv->out_ch; ++o)
                for (int i = 0; i < cv->in_ch; ++i)
                    for (int ky = 0; ky < cv->q; ++ky) {
                        const int dy = ky - pad;
                        const int y0 = std::max(0, -dy), y1 = std::min(in.h, in.h - dy);
                        for (int kx = 0; kx < cv->q; ++kx) {
                            const int dx = kx - pad;
                            const int x0 = std::max(0, -dx), x1 = std::min(in.w, in.w - dx);
                            const double t = cv->tap(o, i, ky, kx);
                            double acc = 0.0;
                            for (int y = y0; y < y1; ++y) {
                                const double* src =
                                    &in.v[(static_cast<std::size_t>(i) * in.h + y + dy) * in.w + x0 + dx];
                                double* gi =
                                    &gin.v[(static_cast<std::size_t>(i) * in.h + y + dy) * in.w + x0 + dx];
                                const double* go = &g.v[(static_cast<std::size_t>(o) * in.h + y) * in.w + x0];
                                for (int x = x0; x < x1; ++x) {
                                    acc += go[x - x0] * src[x - x0];
                                    gi[x - x0] += t * go[x - x0];
                                }
                            }
                            gw[((static_cast<std::size_t>(o) * cv->in_ch + i) * cv->q + ky) * cv->q + kx] += acc;
                        }
                    }
        } else if (std::holds_alternative<MaxPool2>(l)) {
            for (int c = 0; c < in.c; ++c)
                for (int y = 0; y < out.h; ++y)
                    for (int x = 0; x < out.w; ++x) {
                        // route to the first maximal input of the 2x2 window
                        const double m = out.at(c, y, x);
                        for (int sy = 0; sy < 2; ++sy) {
                            bool routed = false;
                            for (int sx = 0; sx < 2; ++sx)
                                if (in.at(c, 2 * y + sy, 2 * x + sx) == m) {
                                    gin.at(c, 2 * y + sy, 2 * x + sx) += g.at(c, y, x);
                                    routed = true;
                                    break;
                                }
                            if (routed) break;
                        }
                    }
        } else {
            const auto& fc = std::get<FcLayer>(l);
            double* gw = grad.data() + offsets[li];
            for (std::size_t r = 0; r < fc.w.rows; ++r) {
                const double gr = g.v[r];
                if (gr == 0.0) continue;
                const double* row = &fc.w.data[r * fc.w.cols];
                double* gwrow = gw + r * fc.w.cols;
                for (std::size_t j = 0; j < fc.w.cols; ++j) {
                    gwrow[j] += gr * in.v[j];
                    gin.v[j] += gr * row[j];
                }
            }
        }
        g = std::move(gin);
    }
    return loss;
}

}  // namespace

std::vector<double> gradient(const Network& net, const LabeledDataset& batch,
                             const std::vector<std::size_t>& indices, double* mean_loss) {
    if (indices.empty()) throw UsageError("gradient: empty batch");
    const std::size_t p = net.parameter_count();
    const std::int64_t n = static_cast<std::int64_t>(indices.size());
    std::vector<std::vector<double>> per_sample(indices.size());
    std::vector<double> losses(indices.size(), 0.0);
#pragma omp parallel for schedule(dynamic)
    for (std::int64_t k = 0; k < n; ++k) {
        const std::size_t i = indices[k];
        per_sample[k].assign(p, 0.0);
        const std::vector<Image> acts = forward_cached(net, batch.images[i]);
        losses[k] = backward_sample(net, acts, batch.labels[i], per_sample[k]);
    }
    std::vector<double> grad(p, 0.0);
    double loss_sum = 0.0;
    for (std::size_t k = 0; k < indices.size(); ++k) {
        loss_sum += losses[k];
        const std::vector<double>& gs = per_sample[k];
        for (std::size_t j = 0; j < p; ++j) grad[j] += gs[j];
    }
    const double inv = 1.0 / static_cast<double>(indices.size());
    for (double& gj : grad) gj *= inv;
    if (mean_loss) *mean_loss = loss_sum * inv;
    return grad;
}

std::vector<double> gradient(const Network& net, const LabeledDataset& batch, double* mean_loss) {
    std::vector<std::size_t> idx(batch.size());
    std::iota(idx.begin(), idx.end(), 0);
    return gradient(net, batch, idx, mean_loss);
}

namespace {

struct EvalStats {
    double loss = 0.0;
    double accuracy = 0.0;
    double mean_margin_correct = 0.0;
    std::vector<double> margins;
};

EvalStats evaluate(const Network& net, const LabeledDataset& data) {
    const std::int64_t n = static_cast<std::int64_t>(data.size());
    std::vector<double> losses(data.size()), margins(data.size());
#pragma omp parallel for schedule(dynamic)
    for (std::int64_t i = 0; i < n; ++i) {
        const std::vector<double> logits = forward(net, data.images[i]);
        const int y = data.labels[i];
        const double zmax = *std::max_element(logits.begin(), logits.end());
        double zsum = 0.0;
        for (double z : logits) zsum += std::exp(z - zmax);
        losses[i] = -(logits[y] - zmax - std::log(zsum));
        margins[i] = margin(logits, y);
    }
    EvalStats st;
    st.margins = margins;
    std::size_t correct = 0;
    double margin_sum = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        st.loss += losses[i];
        if (margins[i] > 0.0) {  // ties count as errors
            ++correct;
            margin_sum += margins[i];
        }
    }
    st.loss /= static_cast<double>(data.size());
    st.accuracy = static_cast<double>(correct) / static_cast<double>(data.size());
    st.mean_margin_correct = correct > 0 ? margin_sum / static_cast<double>(correct) : 0.0;
    return st;
}

double gamma_of(const EvalStats& st, const GammaRule& rule) {
    double g;
    if (rule.kind == GammaRule::Kind::mean_correct) {
        g = st.mean_margin_correct;
    } else {
        std::vector<double> sorted = st.margins;
        std::sort(sorted.begin(), sorted.end());
        const std::size_t idx = static_cast<std::size_t>(
            rule.percentile * static_cast<double>(sorted.size() - 1));
        g = sorted[idx];
    }
    return std::max(g, rule.floor);
}

}  // namespace

Trajectory sgd_train(Network& net, const LabeledDataset& train, const LabeledDataset& test,
                     double lr, int epochs, std::size_t batch_size, const GammaRule& rule,
                     Rng& rng) {
    if (lr < 0.0) throw UsageError("sgd_train: negative learning rate");
    if (batch_size < 1) throw UsageError("sgd_train: batch size must be >= 1");
    if (train.size() == 0 || test.size() == 0) throw UsageError("sgd_train: empty dataset");
    net.validate();

    Trajectory traj;
    std::vector<std::size_t> order(train.size());
    std::iota(order.begin(), order.end(), 0);
    std::vector<double> params = flatten_params(net);

    for (int epoch = 0; epoch < epochs; ++epoch) {
        // seeded Fisher-Yates shuffle
        for (std::size_t i = order.size(); i > 1; --i)
            std::swap(order[i - 1], order[static_cast<std::size_t>(
                                        rng.uniform_int(0, static_cast<std::int64_t>(i) - 1))]);

        for (std::size_t start = 0; start < order.size(); start += batch_size) {
            const std::size_t end = std::min(start + batch_size, order.size());
            std::vector<std::size_t> batch(order.begin() + start, order.begin() + end);
            double batch_loss = 0.0;
            const std::vector<double> grad = gradient(net, train, batch, &batch_loss);
            if (!std::isfinite(batch_loss))
                throw ConvergenceError(
                    "sgd_train: non-finite loss at epoch " + std::to_string(epoch), batch_loss);
            for (std::size_t j = 0; j < params.size(); ++j) params[j] -= lr * grad[j];
            set_params(net, params);
        }

        const EvalStats train_stats = evaluate(net, train);
        const EvalStats test_stats = evaluate(net, test);
        if (!std::isfinite(train_stats.loss))
            throw ConvergenceError("sgd_train: non-finite loss at epoch " + std::to_string(epoch),
                                   train_stats.loss);
        const double gamma = gamma_of(train_stats, rule);
        const std::vector<LayerNorms> norms = layer_operator_norms(net);

        TrajectoryRecord rec;
        rec.epoch = epoch;
        rec.train_loss = train_stats.loss;
        rec.train_acc = train_stats.accuracy;
        rec.test_acc = test_stats.accuracy;
        rec.ge = (1.0 - test_stats.accuracy) - (1.0 - train_stats.accuracy);
        rec.rw_over_gamma = spectral_complexity(norms, ComplexityVariant::rw) / gamma;
        rec.rw21_over_gamma = spectral_complexity(norms, ComplexityVariant::rw21) / gamma;
        rec.mean_margin = train_stats.mean_margin_correct;
        traj.records.push_back(rec);
    }
    return traj;
}

}  // namespace specbound

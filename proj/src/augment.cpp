#include "specbound/augment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "specbound/errors.hpp"

namespace specbound {

void AugmentConfig::validate() const {
    if (t < 0) throw UsageError("augment: translation radius must be >= 0");
    if (alpha < 0.0) throw UsageError("augment: elastic intensity must be >= 0");
    if (sigma_e <= 0.0) throw UsageError("augment: elastic smoothing must be > 0");
}

Image translate(const Image& img, int dx, int dy, FillRule fill) {
    Image out(img.h, img.w, img.c);
    for (int ch = 0; ch < img.c; ++ch)
        for (int y = 0; y < img.h; ++y)
            for (int x = 0; x < img.w; ++x) {
                int sy = y - dy, sx = x - dx;
                if (fill == FillRule::wrap) {
                    sy = ((sy % img.h) + img.h) % img.h;
                    sx = ((sx % img.w) + img.w) % img.w;
                } else if (sy < 0 || sy >= img.h || sx < 0 || sx >= img.w) {
                    continue;  // zero fill
                }
                out.at(ch, y, x) = img.at(ch, sy, sx);
            }
    return out;
}

namespace {

// separable Gaussian smoothing, kernel truncated at 3 sigma, zero boundary
void gaussian_smooth(std::vector<double>& field, int h, int w, double sigma) {
    const int r = static_cast<int>(std::ceil(3.0 * sigma));
    std::vector<double> kernel(2 * r + 1);
    double ksum = 0.0;
    for (int k = -r; k <= r; ++k) {
        kernel[k + r] = std::exp(-0.5 * (k * k) / (sigma * sigma));
        ksum += kernel[k + r];
    }
    for (double& k : kernel) k /= ksum;

    std::vector<double> tmp(field.size(), 0.0);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double s = 0.0;
            for (int k = -r; k <= r; ++k) {
                const int xx = x + k;
                if (xx >= 0 && xx < w) s += kernel[k + r] * field[y * w + xx];
            }
            tmp[y * w + x] = s;
        }
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double s = 0.0;
            for (int k = -r; k <= r; ++k) {
                const int yy = y + k;
                if (yy >= 0 && yy < h) s += kernel[k + r] * tmp[yy * w + x];
            }
            field[y * w + x] = s;
        }
}

double bilinear_zero(const Image& img, int ch, double y, double x) {
    const int y0 = static_cast<int>(std::floor(y));
    const int x0 = static_cast<int>(std::floor(x));
    const double fy = y - y0, fx = x - x0;
    double s = 0.0;
    for (int sy = 0; sy < 2; ++sy)
        for (int sx = 0; sx < 2; ++sx) {
            const int yy = y0 + sy, xx = x0 + sx;
            if (yy < 0 || yy >= img.h || xx < 0 || xx >= img.w) continue;
            const double wgt = (sy ? fy : 1.0 - fy) * (sx ? fx : 1.0 - fx);
            s += wgt * img.at(ch, yy, xx);
        }
    return s;
}

}  // namespace

Image elastic_deform(const Image& img, double alpha, double sigma_e, Rng& rng) {
    if (alpha < 0.0) throw UsageError("elastic_deform: alpha must be >= 0");
    if (sigma_e <= 0.0) throw UsageError("elastic_deform: sigma_e must be > 0");
    const std::size_t pixels = static_cast<std::size_t>(img.h) * img.w;
    std::vector<double> dx(pixels), dy(pixels);
    for (double& v : dx) v = rng.uniform(-1.0, 1.0);
    for (double& v : dy) v = rng.uniform(-1.0, 1.0);
    gaussian_smooth(dx, img.h, img.w, sigma_e);
    gaussian_smooth(dy, img.h, img.w, sigma_e);

    Image out(img.h, img.w, img.c);
    for (int ch = 0; ch < img.c; ++ch)
        for (int y = 0; y < img.h; ++y)
            for (int x = 0; x < img.w; ++x) {
                const double sy = y + alpha * dy[y * img.w + x];
                const double sx = x + alpha * dx[y * img.w + x];
                out.at(ch, y, x) = bilinear_zero(img, ch, sy, sx);
            }
    return out;
}

LabeledDataset build_mixed_dataset(const LabeledDataset& base, double pct_augment,
                                   AugmentKind kind, const AugmentConfig& cfg) {
    cfg.validate();
    if (pct_augment < 0.0 || pct_augment > 0.5)
        throw UsageError("build_mixed_dataset: pct_augment must lie in [0, 0.5]");
    const std::size_t n = base.size();
    std::size_t n_aug =
        static_cast<std::size_t>(std::llround(pct_augment * static_cast<double>(n)));
    n_aug = std::min(n_aug, n / 2);  // rounding never leaves fewer base than augmented
    const std::size_t n_keep = n - n_aug;

    LabeledDataset out;
    out.images.resize(n);
    out.labels.resize(n);
    out.provenance.assign(n, "base");
    for (std::size_t i = 0; i < n_keep; ++i) {
        out.images[i] = base.images[i];
        out.labels[i] = base.labels[i];
    }
    const std::string tag = kind == AugmentKind::translate ? "translate" : "elastic";
    const Rng parent(cfg.seed);
    const std::int64_t n_aug_i = static_cast<std::int64_t>(n_aug);
#pragma omp parallel for schedule(dynamic)
    for (std::int64_t k = 0; k < n_aug_i; ++k) {
        Rng rng = parent.child(static_cast<std::uint64_t>(k));
        const std::size_t src = static_cast<std::size_t>(
            rng.uniform_int(0, static_cast<std::int64_t>(n_keep) - 1));
        const std::size_t slot = n_keep + static_cast<std::size_t>(k);
        if (kind == AugmentKind::translate) {
            const int dx = static_cast<int>(rng.uniform_int(-cfg.t, cfg.t));
            const int dy = static_cast<int>(rng.uniform_int(-cfg.t, cfg.t));
            out.images[slot] = translate(base.images[src], dx, dy, cfg.fill);
        } else {
            out.images[slot] = elastic_deform(base.images[src], cfg.alpha, cfg.sigma_e, rng);
        }
        out.labels[slot] = base.labels[src];
        out.provenance[slot] = tag;
    }
    return out;
}

}  // namespace specbound

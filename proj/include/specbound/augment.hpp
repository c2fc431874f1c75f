#pragma once

#include <cstdint>

#include "specbound/network.hpp"
#include "specbound/rng.hpp"

namespace specbound {

enum class FillRule { zero, wrap };
enum class AugmentKind { translate, elastic };

struct AugmentConfig {
    int t = 4;             // translation radius, pixels
    double alpha = 8.0;    // elastic intensity, pixels
    double sigma_e = 4.0;  // elastic smoothing std, pixels
    FillRule fill = FillRule::zero;
    std::uint64_t seed = 0;

    void validate() const;
};

// output (r, c) = input (r - dy, c - dx), out-of-range per fill rule
Image translate(const Image& img, int dx, int dy, FillRule fill);

// smoothed-random-displacement deformation: i.i.d. uniform[-1,1] per-pixel
// fields (dx field drawn first, then dy, each row-major), Gaussian-smoothed
// (std sigma_e, truncated at 3 sigma_e), scaled by alpha, sampled bilinearly
// with zero boundary
Image elastic_deform(const Image& img, double alpha, double sigma_e, Rng& rng);

// Keeps the first n - n_aug base images and fills the remaining n_aug slots
// with augmentations of uniformly chosen retained images; n_aug = round(pct * n).
LabeledDataset build_mixed_dataset(const LabeledDataset& base, double pct_augment,
                                   AugmentKind kind, const AugmentConfig& cfg);

}  // namespace specbound

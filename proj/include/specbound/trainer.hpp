#pragma once

#include <cstddef>
#include <vector>

#include "specbound/network.hpp"
#include "specbound/rng.hpp"

namespace specbound {

// Per-epoch record of the training trajectory and its GE proxies.
struct TrajectoryRecord {
    int epoch = 0;
    double train_loss = 0.0;
    double train_acc = 0.0;
    double test_acc = 0.0;
    double ge = 0.0;               // test error - train error
    double rw_over_gamma = 0.0;
    double rw21_over_gamma = 0.0;
    double mean_margin = 0.0;
};

struct Trajectory {
    std::vector<TrajectoryRecord> records;
};

struct GammaRule {
    enum class Kind { mean_correct, percentile } kind = Kind::mean_correct;
    double percentile = 0.5;   // used by Kind::percentile
    double floor = 1e-6;
};

// Flat parameter vector in layer order (conv taps, then fc weights row-major).
std::vector<double> flatten_params(const Network& net);
void set_params(Network& net, const std::vector<double>& flat);

// Exact reverse-mode gradient of mean cross-entropy over softmax logits,
// returned in the same shape as the network (mean over the batch). Samples
// are evaluated in parallel; the reduction runs in sample-index order.
std::vector<double> gradient(const Network& net, const LabeledDataset& batch,
                             const std::vector<std::size_t>& indices,
                             double* mean_loss = nullptr);
std::vector<double> gradient(const Network& net, const LabeledDataset& batch,
                             double* mean_loss = nullptr);

// Plain SGD with seeded shuffles; deterministic given the seed.
Trajectory sgd_train(Network& net, const LabeledDataset& train, const LabeledDataset& test,
                     double lr, int epochs, std::size_t batch_size, const GammaRule& rule,
                     Rng& rng);

}  // namespace specbound

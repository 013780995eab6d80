#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "rnnlab/autodiff.hpp"
#include "rnnlab/cells.hpp"
#include "rnnlab/tasks.hpp"

namespace rnnlab {

struct TrainConfig {
    double lr = 0.05;
    double clip_norm = 5.0;
    int epochs = 30;
    int batch_size = 8;
    std::uint64_t seed = 0;       // epoch shuffling
    std::uint64_t init_seed = 0;  // weight initialization

    bool operator==(const TrainConfig&) const = default;
};

struct EpochMetrics {
    int epoch = 0;       // 1-based
    double loss = 0.0;   // mean cross-entropy per labeled frame
    double frame_acc = 0.0;

    bool operator==(const EpochMetrics&) const = default;
};

struct TrainResult {
    StackParams params;
    std::vector<EpochMetrics> history;
};

// Loss and gradient summed over a batch of sequences. Per-sequence results
// are computed independently and reduced in index order, so the outcome is
// deterministic (and safe to parallelize per sequence).
struct BatchResult {
    double loss = 0.0;
    std::size_t counted_frames = 0;
    GradientSet grads;
};
BatchResult batch_bptt(const NetworkConfig& cfg, const StackParams& params,
                       std::span<const ToyDataset::Sequence* const> batch);

// sqrt of the sum of squares over every gradient entry.
double global_norm(const GradientSet& grads);

// One SGD step on the per-frame-normalized batch gradient, rescaled when its
// global norm exceeds clip_norm.
void sgd_update(StackParams& params, const GradientSet& grads, double lr, double clip_norm);

// Full forward evaluation: mean per-frame loss and frame accuracy.
EpochMetrics evaluate(const NetworkConfig& cfg, const StackParams& params,
                      const ToyDataset& data);

// Plain SGD with global-norm clipping and seeded per-epoch shuffling.
// Metrics are evaluated on the full dataset after every epoch. Aborts with a
// std::runtime_error naming epoch and batch if the loss turns non-finite.
TrainResult train(const TrainConfig& cfg, const NetworkConfig& net, const ToyDataset& data);

}  // namespace rnnlab

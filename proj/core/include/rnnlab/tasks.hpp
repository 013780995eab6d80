#pragma once

#include <cstdint>
#include <vector>

#include "rnnlab/linalg.hpp"

namespace rnnlab {

// Synthetic labeled frame sequences standing in for utterances.
struct ToyDataset {
    struct Sequence {
        std::vector<Vector> frames;
        std::vector<int> labels;  // kIgnoreLabel marks uncounted frames
        bool operator==(const Sequence&) const = default;
    };
    std::vector<Sequence> sequences;
    int num_classes = 0;
    std::size_t input_dim = 0;
    std::uint64_t seed = 0;

    std::size_t labeled_frames() const;
    bool operator==(const ToyDataset&) const = default;
};

// Piecewise-stationary class segments: each segment draws a class, holds it
// for a dwell time uniform in [min_dwell, max_dwell], and emits that class's
// fixed unit-norm mean vector plus N(0, noise_std^2) noise. The frame label
// is the current class. Pure function of its arguments.
ToyDataset gen_pseudo_phone_task(int num_seq, int seq_len, int num_classes,
                                 std::size_t input_dim, int min_dwell, int max_dwell,
                                 double noise_std, std::uint64_t seed);

// Recall across a gap: a one-hot symbol at t=0, zero frames for `delay`
// steps, then a query frame showing a random (distracting) symbol. Only the
// query frame is labeled, with the initial symbol. Initial symbols are
// balanced across the dataset.
ToyDataset gen_delayed_recall(int num_seq, int delay, int num_symbols, std::uint64_t seed);

// Fraction of labeled frames claimed by the most frequent label.
double majority_class_accuracy(const ToyDataset& data);

}  // namespace rnnlab

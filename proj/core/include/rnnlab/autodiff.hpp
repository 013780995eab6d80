#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "rnnlab/cells.hpp"

namespace rnnlab {

// Frames labeled with this value carry no loss and no gradient.
inline constexpr int kIgnoreLabel = -1;

// Gradient buffers mirror the parameter layout exactly, so the parameter
// struct doubles as the gradient container.
using GradientSet = StackParams;

GradientSet zeros_like(const StackParams& params);

// Cached forward intermediates, one entry per (layer, time step).
struct Tape {
    struct Step {
        Vector c_prev, m_prev;
        GateRecord gates;
        Vector c, m;
    };
    struct Layer {
        std::vector<Step> steps;
    };
    // inputs[l][t] is what layer l consumed at frame t (the shortcut-combined
    // output of the layer below, or the raw frame for l == 0).
    std::vector<std::vector<Vector>> inputs;
    std::vector<Layer> layers;
    std::vector<Vector> top_outputs;  // what the projection consumed
    std::vector<Vector> logits;
};

// Unrolled forward pass that caches everything backward needs.
Tape forward_with_tape(const NetworkConfig& cfg, const StackParams& params,
                       std::span<const Vector> seq);

// Total softmax cross-entropy over the labeled frames of precomputed logits,
// evaluated in log space.
struct LossResult {
    double total = 0.0;
    std::size_t counted_frames = 0;
};
LossResult sequence_loss(std::span<const Vector> logits, std::span<const int> targets);

struct BpttResult {
    double loss = 0.0;
    std::size_t counted_frames = 0;
    GradientSet grads;
};

// Exact reverse-mode gradients of the total cross-entropy of one sequence
// with respect to every parameter, peephole diagonals and shortcut paths
// included. Throws on length mismatch and on a non-finite per-frame loss
// (naming the first offending step).
BpttResult bptt(const NetworkConfig& cfg, const StackParams& params,
                std::span<const Vector> seq, std::span<const int> targets);

// Central-difference verification of bptt. Builds a seeded random net and
// sequence from cfg, perturbs every scalar parameter by +/-eps, and compares
// against the analytic gradient with relative error
// |a-n| / max(1e-8, |a|+|n|).
struct GradCheckReport {
    double max_rel_err = 0.0;
    std::string offending_param;
    std::size_t offending_index = 0;
    double tolerance = 0.0;
    bool pass = false;
};
GradCheckReport grad_check(const NetworkConfig& cfg, std::uint64_t seed, double eps = 1e-5,
                           double tol = 1e-5, std::size_t time_steps = 8);

}  // namespace rnnlab

#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "rnnlab/cells.hpp"
#include "rnnlab/trace.hpp"

namespace rnnlab {

// --- Activation histograms ------------------------------------------------

struct HistogramReport {
    int layer = 0;
    double lo = 0.0, hi = 0.0;        // binning domain actually used
    double clip = 0.0;                // requested clip bound
    std::vector<double> edges;        // bins + 1, strictly increasing
    struct UnitHistogram {
        std::size_t unit = 0;         // index within the trace vectors
        std::vector<std::int64_t> counts;
    };
    std::vector<UnitHistogram> units;
    std::vector<std::int64_t> pooled; // sum over sampled units
};

// Pools cell values of `units_per_layer` sampled units over all frames of
// all traces for `layer`. For unbounded cells, values beyond +/-clip are set
// to the bound before binning; bounded (gru) cells are binned over exactly
// (-1, 1) regardless of clip.
HistogramReport activation_histogram(const std::vector<StateTrace>& traces, int layer,
                                     int units_per_layer, int bins, double clip,
                                     CellKind kind, std::uint64_t sample_seed = 0);

// --- Temporal trace projection ---------------------------------------------

enum class ProjectionMethod { pca, tsne };

struct TraceProjection {
    int layer = 0;
    ProjectionMethod method = ProjectionMethod::pca;
    std::vector<std::array<double, 2>> points;  // one per frame
    double smoothness = 0.0;                    // full-space metric, see below
};

// 2-D view of a cell trajectory. pca projects onto the top-2 principal
// components of the mean-centered frame-by-unit matrix, with the sign of
// each component fixed by making its largest-magnitude loading positive.
// tsne is the heavier stochastic alternative (exact O(n^2), perplexity 30,
// 1000 iterations, seeded); it is limited to 2000 frames.
TraceProjection project_trace(const StateTrace& trace, ProjectionMethod method,
                              std::uint64_t tsne_seed = 0);

// Normalized step length of the cell trajectory: mean ||c_{t+1} - c_t||
// divided by mean ||c_t - mean(c)||, computed in full unit space. Lower
// means smoother; a constant trace returns 0.
double trace_smoothness(const StateTrace& trace);

// --- Noise-insertion perturbation -------------------------------------------

struct PerturbationReport {
    struct Layer {
        int layer = 0;
        // abs_delta[u][t] = |c_noisy - c_clean| for unit u at aligned frame t.
        std::vector<std::vector<double>> abs_delta;
        // Per unit: frames after the insertion point until |delta| stays
        // below epsilon for 5 consecutive aligned frames.
        std::vector<int> decay_len;
        // Same rule applied to the max over units.
        int layer_decay_len = 0;
    };
    std::vector<Layer> layers;
    int noise_pos = 0;
    int noise_len = 0;
    double noise_std = 0.0;
    double epsilon = 0.0;
};

// Runs the model on `seq` and on `seq` with `noise_len` frames of
// N(0, noise_std^2) inserted at noise_pos, then reports per-layer, per-unit
// |delta c| over aligned frames (clean frame t pairs with noisy frame
// t + noise_len once t >= noise_pos). Frames before the insertion point have
// delta == 0 exactly.
PerturbationReport perturbation_probe(const NetworkConfig& cfg, const StackParams& params,
                                      std::span<const Vector> seq, int noise_pos,
                                      int noise_len, double noise_std, double epsilon,
                                      std::uint64_t noise_seed = 0);

// Median of the per-unit decay lengths of one report layer.
double median_decay_length(const PerturbationReport::Layer& layer);

}  // namespace rnnlab

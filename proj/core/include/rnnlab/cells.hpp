#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "rnnlab/linalg.hpp"

namespace rnnlab {

class StateRecorder;

enum class CellKind { lstm, gru, lazy_lstm };

std::string to_string(CellKind kind);
CellKind cell_kind_from_string(const std::string& s);

// Per-layer state carried across time: cell activation c and unit output m.
struct CellState {
    Vector c;
    Vector m;

    static CellState zeros(std::size_t hidden) { return {Vector(hidden), Vector(hidden)}; }
    bool operator==(const CellState&) const = default;
};

// Gate activations of one step. g is the candidate value after its
// hyperbolic activation; for the GRU, f == 1 - i holds exactly.
struct GateRecord {
    Vector i;
    Vector f;
    Vector o;
    Vector g;

    bool operator==(const GateRecord&) const = default;
};

// Peephole LSTM parameters. W_* are dense (hidden x input for *x, hidden x
// hidden for *m), V_* are the diagonal cell-to-gate connections, b_* biases.
struct LstmParams {
    Matrix W_ix, W_im, W_fx, W_fm, W_cx, W_cm, W_ox, W_om;
    DiagMatrix V_ic, V_fc, V_oc;
    Vector b_i, b_f, b_c, b_o;

    static LstmParams zeros(std::size_t hidden, std::size_t input);
    std::size_t hidden_dim() const { return b_i.dim(); }
    std::size_t input_dim() const { return W_ix.cols; }
    bool operator==(const LstmParams&) const = default;
};

// Coupled-gate GRU parameters: the forget gate is 1 - i, so only input,
// output and candidate weights exist. Cell-to-gate terms are dense here.
struct GruParams {
    Matrix W_ix, W_ic, W_ox, W_oc, W_cx, W_cm;
    Vector b_i, b_o, b_c;

    static GruParams zeros(std::size_t hidden, std::size_t input);
    std::size_t hidden_dim() const { return b_i.dim(); }
    std::size_t input_dim() const { return W_ix.cols; }
    bool operator==(const GruParams&) const = default;
};

using LayerParams = std::variant<LstmParams, GruParams>;

struct OutputProjection {
    Matrix W;
    Vector b;
    bool operator==(const OutputProjection&) const = default;
};

// All parameters of a stacked network: one entry per recurrent layer plus
// the linear output projection.
struct StackParams {
    std::vector<LayerParams> layers;
    OutputProjection proj;
    bool operator==(const StackParams&) const = default;
};

struct NetworkConfig {
    CellKind cell_kind = CellKind::lstm;
    std::size_t layers = 1;
    std::size_t input_dim = 0;
    std::size_t hidden_dim = 0;
    std::size_t output_dim = 0;
    bool residual = false;
    // With cell_kind == lstm, switch only the final layer to the lazy-update
    // step while lower layers stay standard.
    bool lazy_last_layer_only = false;
    // Lazy-update candidate normally reads the freshly computed m_t; this
    // switch makes it read m_{t-1} instead, for comparison.
    bool lazy_candidate_from_prev_output = false;

    bool operator==(const NetworkConfig&) const = default;
};

struct StepResult {
    CellState state;
    GateRecord gates;
};

// One LSTM transition. Order of computation: i and f gates (peepholes from
// c_{t-1}), cell update, o gate (peephole from the new c_t), output
// m_t = o . tanh(c_t).
StepResult lstm_step(const LstmParams& p, const CellState& prev, const Vector& x);

// One step of the coupled-gate GRU: i, f = 1 - i, o from c_{t-1},
// m_t = o . c_{t-1}, and the cell update happens last with the candidate
// reading the fresh m_t.
StepResult gru_step(const GruParams& p, const CellState& prev, const Vector& x);

// Reordered LSTM: all three gates and the output are computed from c_{t-1},
// then the cell is updated as the final step. By default the candidate reads
// the fresh m_t (mirroring gru_step); candidate_from_prev_output switches it
// to m_{t-1}.
StepResult lazy_lstm_step(const LstmParams& p, const CellState& prev, const Vector& x,
                          bool candidate_from_prev_output = false);

// Shortcut connection: elementwise layer_in + layer_out.
Vector residual_combine(const Vector& layer_in, const Vector& layer_out);

// True if layer `layer` of a `cfg` network uses the lazy-update step.
bool layer_uses_lazy_step(const NetworkConfig& cfg, std::size_t layer);
// True if the shortcut wraps layer `layer` (never the first layer when
// input_dim != hidden_dim).
bool layer_has_residual(const NetworkConfig& cfg, std::size_t layer);

// Runs the stacked network over a sequence from all-zero initial states and
// returns per-frame logits. Layer l's output (after the shortcut, when
// enabled) feeds layer l+1; the top output feeds the projection. When a
// recorder is attached it receives every (layer, t) cell state and gate set;
// recording does not perturb the computation.
std::vector<Vector> stack_forward(const NetworkConfig& cfg, const StackParams& params,
                                  std::span<const Vector> seq,
                                  StateRecorder* recorder = nullptr);

// Validates parameter/config consistency; throws std::invalid_argument with
// the offending dimension on mismatch.
void validate_stack(const NetworkConfig& cfg, const StackParams& params);

// Seeded uniform [-1/sqrt(fan_in), +1/sqrt(fan_in)] initialization. Biases
// start at zero except the LSTM forget-gate bias, which starts at 1.
StackParams init_stack_params(const NetworkConfig& cfg, std::uint64_t seed);
LstmParams init_lstm_params(std::size_t hidden, std::size_t input, std::uint64_t seed);
GruParams init_gru_params(std::size_t hidden, std::size_t input, std::uint64_t seed);

}  // namespace rnnlab

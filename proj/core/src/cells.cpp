#include "rnnlab/cells.hpp"

#include <cmath>
#include <stdexcept>

#include "rnnlab/rng.hpp"
#include "rnnlab/trace.hpp"

namespace rnnlab {

std::string to_string(CellKind kind) {
    switch (kind) {
        case CellKind::lstm: return "lstm";
        case CellKind::gru: return "gru";
        case CellKind::lazy_lstm: return "lazy_lstm";
    }
    throw std::invalid_argument("unknown cell kind");
}

CellKind cell_kind_from_string(const std::string& s) {
    if (s == "lstm") return CellKind::lstm;
    if (s == "gru") return CellKind::gru;
    if (s == "lazy_lstm") return CellKind::lazy_lstm;
    throw std::invalid_argument("unknown cell kind '" + s + "'");
}

LstmParams LstmParams::zeros(std::size_t hidden, std::size_t input) {
    LstmParams p;
    p.W_ix = Matrix(hidden, input);
    p.W_im = Matrix(hidden, hidden);
    p.W_fx = Matrix(hidden, input);
    p.W_fm = Matrix(hidden, hidden);
    p.W_cx = Matrix(hidden, input);
    p.W_cm = Matrix(hidden, hidden);
    p.W_ox = Matrix(hidden, input);
    p.W_om = Matrix(hidden, hidden);
    p.V_ic = DiagMatrix(hidden);
    p.V_fc = DiagMatrix(hidden);
    p.V_oc = DiagMatrix(hidden);
    p.b_i = Vector(hidden);
    p.b_f = Vector(hidden);
    p.b_c = Vector(hidden);
    p.b_o = Vector(hidden);
    return p;
}

GruParams GruParams::zeros(std::size_t hidden, std::size_t input) {
    GruParams p;
    p.W_ix = Matrix(hidden, input);
    p.W_ic = Matrix(hidden, hidden);
    p.W_ox = Matrix(hidden, input);
    p.W_oc = Matrix(hidden, hidden);
    p.W_cx = Matrix(hidden, input);
    p.W_cm = Matrix(hidden, hidden);
    p.b_i = Vector(hidden);
    p.b_o = Vector(hidden);
    p.b_c = Vector(hidden);
    return p;
}

namespace {

void check_step_dims(std::size_t hidden, std::size_t input, const CellState& prev,
                     const Vector& x, const char* op) {
    if (prev.c.dim() != hidden || prev.m.dim() != hidden) {
        throw std::invalid_argument(std::string(op) + ": state dim " +
                                    std::to_string(prev.c.dim()) + " != hidden " +
                                    std::to_string(hidden));
    }
    if (x.dim() != input) {
        throw std::invalid_argument(std::string(op) + ": input dim " +
                                    std::to_string(x.dim()) + " != expected " +
                                    std::to_string(input));
    }
}

}  // namespace

StepResult lstm_step(const LstmParams& p, const CellState& prev, const Vector& x) {
    check_step_dims(p.hidden_dim(), p.input_dim(), prev, x, "lstm_step");

    Vector i = sigmoid(add(add(add(matvec(p.W_ix, x), matvec(p.W_im, prev.m)),
                               apply(p.V_ic, prev.c)),
                           p.b_i));
    Vector f = sigmoid(add(add(add(matvec(p.W_fx, x), matvec(p.W_fm, prev.m)),
                               apply(p.V_fc, prev.c)),
                           p.b_f));
    Vector g = tanh(add(add(matvec(p.W_cx, x), matvec(p.W_cm, prev.m)), p.b_c));
    Vector c = add(hadamard(f, prev.c), hadamard(i, g));
    Vector o = sigmoid(add(add(add(matvec(p.W_ox, x), matvec(p.W_om, prev.m)),
                               apply(p.V_oc, c)),
                           p.b_o));
    Vector m = hadamard(o, tanh(c));

    return {{std::move(c), std::move(m)},
            {std::move(i), std::move(f), std::move(o), std::move(g)}};
}

StepResult gru_step(const GruParams& p, const CellState& prev, const Vector& x) {
    check_step_dims(p.hidden_dim(), p.input_dim(), prev, x, "gru_step");

    Vector i = sigmoid(add(add(matvec(p.W_ix, x), matvec(p.W_ic, prev.c)), p.b_i));
    Vector f(i.dim());
    for (std::size_t k = 0; k < i.dim(); ++k) f[k] = 1.0 - i[k];
    Vector o = sigmoid(add(add(matvec(p.W_ox, x), matvec(p.W_oc, prev.c)), p.b_o));
    Vector m = hadamard(o, prev.c);
    // Cell update is the final step; the candidate reads the fresh m_t.
    Vector g = tanh(add(add(matvec(p.W_cx, x), matvec(p.W_cm, m)), p.b_c));
    Vector c = add(hadamard(f, prev.c), hadamard(i, g));

    return {{std::move(c), std::move(m)},
            {std::move(i), std::move(f), std::move(o), std::move(g)}};
}

StepResult lazy_lstm_step(const LstmParams& p, const CellState& prev, const Vector& x,
                          bool candidate_from_prev_output) {
    check_step_dims(p.hidden_dim(), p.input_dim(), prev, x, "lazy_lstm_step");

    Vector i = sigmoid(add(add(add(matvec(p.W_ix, x), matvec(p.W_im, prev.m)),
                               apply(p.V_ic, prev.c)),
                           p.b_i));
    Vector f = sigmoid(add(add(add(matvec(p.W_fx, x), matvec(p.W_fm, prev.m)),
                               apply(p.V_fc, prev.c)),
                           p.b_f));
    // Output gate peeks at c_{t-1}, not the updated cell.
    Vector o = sigmoid(add(add(add(matvec(p.W_ox, x), matvec(p.W_om, prev.m)),
                               apply(p.V_oc, prev.c)),
                           p.b_o));
    Vector m = hadamard(o, tanh(prev.c));
    const Vector& cand_src = candidate_from_prev_output ? prev.m : m;
    Vector g = tanh(add(add(matvec(p.W_cx, x), matvec(p.W_cm, cand_src)), p.b_c));
    Vector c = add(hadamard(f, prev.c), hadamard(i, g));

    return {{std::move(c), std::move(m)},
            {std::move(i), std::move(f), std::move(o), std::move(g)}};
}

Vector residual_combine(const Vector& layer_in, const Vector& layer_out) {
    if (layer_in.dim() != layer_out.dim()) {
        throw std::invalid_argument("residual_combine: dim mismatch, " +
                                    std::to_string(layer_in.dim()) + " vs " +
                                    std::to_string(layer_out.dim()));
    }
    return add(layer_in, layer_out);
}

bool layer_uses_lazy_step(const NetworkConfig& cfg, std::size_t layer) {
    if (cfg.cell_kind == CellKind::lazy_lstm) return true;
    if (cfg.cell_kind == CellKind::lstm && cfg.lazy_last_layer_only)
        return layer + 1 == cfg.layers;
    return false;
}

bool layer_has_residual(const NetworkConfig& cfg, std::size_t layer) {
    if (!cfg.residual) return false;
    if (layer == 0) return cfg.input_dim == cfg.hidden_dim;
    return true;
}

void validate_stack(const NetworkConfig& cfg, const StackParams& params) {
    if (cfg.layers == 0) throw std::invalid_argument("network needs at least one layer");
    if (params.layers.size() != cfg.layers) {
        throw std::invalid_argument("param count " + std::to_string(params.layers.size()) +
                                    " != configured layers " + std::to_string(cfg.layers));
    }
    for (std::size_t l = 0; l < cfg.layers; ++l) {
        const std::size_t want_in = l == 0 ? cfg.input_dim : cfg.hidden_dim;
        const bool is_gru = cfg.cell_kind == CellKind::gru;
        if (is_gru != std::holds_alternative<GruParams>(params.layers[l])) {
            throw std::invalid_argument("layer " + std::to_string(l) +
                                        " parameter type does not match cell kind " +
                                        to_string(cfg.cell_kind));
        }
        const std::size_t hid = is_gru ? std::get<GruParams>(params.layers[l]).hidden_dim()
                                       : std::get<LstmParams>(params.layers[l]).hidden_dim();
        const std::size_t in = is_gru ? std::get<GruParams>(params.layers[l]).input_dim()
                                      : std::get<LstmParams>(params.layers[l]).input_dim();
        if (hid != cfg.hidden_dim || in != want_in) {
            throw std::invalid_argument("layer " + std::to_string(l) + " dims " +
                                        std::to_string(hid) + "x" + std::to_string(in) +
                                        " != expected " + std::to_string(cfg.hidden_dim) +
                                        "x" + std::to_string(want_in));
        }
    }
    if (params.proj.W.rows != cfg.output_dim || params.proj.W.cols != cfg.hidden_dim ||
        params.proj.b.dim() != cfg.output_dim) {
        throw std::invalid_argument("output projection " + std::to_string(params.proj.W.rows) +
                                    "x" + std::to_string(params.proj.W.cols) +
                                    " != expected " + std::to_string(cfg.output_dim) + "x" +
                                    std::to_string(cfg.hidden_dim));
    }
}

std::vector<Vector> stack_forward(const NetworkConfig& cfg, const StackParams& params,
                                  std::span<const Vector> seq, StateRecorder* recorder) {
    validate_stack(cfg, params);
    if (seq.empty()) throw std::invalid_argument("stack_forward: empty sequence");

    std::vector<Vector> layer_in(seq.begin(), seq.end());
    for (std::size_t l = 0; l < cfg.layers; ++l) {
        const bool lazy = layer_uses_lazy_step(cfg, l);
        const bool shortcut = layer_has_residual(cfg, l);
        CellState state = CellState::zeros(cfg.hidden_dim);
        std::vector<Vector> layer_out;
        layer_out.reserve(layer_in.size());
        for (std::size_t t = 0; t < layer_in.size(); ++t) {
            StepResult r;
            if (cfg.cell_kind == CellKind::gru) {
                r = gru_step(std::get<GruParams>(params.layers[l]), state, layer_in[t]);
            } else if (lazy) {
                r = lazy_lstm_step(std::get<LstmParams>(params.layers[l]), state, layer_in[t],
                                   cfg.lazy_candidate_from_prev_output);
            } else {
                r = lstm_step(std::get<LstmParams>(params.layers[l]), state, layer_in[t]);
            }
            if (recorder) recorder->record(static_cast<int>(l), static_cast<int>(t), r.state, r.gates);
            layer_out.push_back(shortcut ? residual_combine(layer_in[t], r.state.m)
                                         : r.state.m);
            state = std::move(r.state);
        }
        layer_in = std::move(layer_out);
    }

    std::vector<Vector> logits;
    logits.reserve(layer_in.size());
    for (const Vector& h : layer_in) logits.push_back(add(matvec(params.proj.W, h), params.proj.b));
    return logits;
}

namespace {

Matrix random_matrix(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(cols));
    std::uniform_real_distribution<double> dist(-bound, bound);
    Matrix m(rows, cols);
    for (double& x : m.data) x = dist(rng);
    return m;
}

DiagMatrix random_diag(std::size_t n, std::mt19937_64& rng) {
    // A peephole row has a single incoming connection, so fan_in is 1.
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    DiagMatrix d(n);
    for (double& x : d.diag) x = dist(rng);
    return d;
}

}  // namespace

LstmParams init_lstm_params(std::size_t hidden, std::size_t input, std::uint64_t seed) {
    auto rng = make_rng(seed, 1);
    LstmParams p = LstmParams::zeros(hidden, input);
    p.W_ix = random_matrix(hidden, input, rng);
    p.W_im = random_matrix(hidden, hidden, rng);
    p.W_fx = random_matrix(hidden, input, rng);
    p.W_fm = random_matrix(hidden, hidden, rng);
    p.W_cx = random_matrix(hidden, input, rng);
    p.W_cm = random_matrix(hidden, hidden, rng);
    p.W_ox = random_matrix(hidden, input, rng);
    p.W_om = random_matrix(hidden, hidden, rng);
    p.V_ic = random_diag(hidden, rng);
    p.V_fc = random_diag(hidden, rng);
    p.V_oc = random_diag(hidden, rng);
    // Forget gate starts open so early training can carry memory.
    p.b_f = Vector(hidden, 1.0);
    return p;
}

GruParams init_gru_params(std::size_t hidden, std::size_t input, std::uint64_t seed) {
    auto rng = make_rng(seed, 2);
    GruParams p = GruParams::zeros(hidden, input);
    p.W_ix = random_matrix(hidden, input, rng);
    p.W_ic = random_matrix(hidden, hidden, rng);
    p.W_ox = random_matrix(hidden, input, rng);
    p.W_oc = random_matrix(hidden, hidden, rng);
    p.W_cx = random_matrix(hidden, input, rng);
    p.W_cm = random_matrix(hidden, hidden, rng);
    return p;
}

StackParams init_stack_params(const NetworkConfig& cfg, std::uint64_t seed) {
    if (cfg.layers == 0 || cfg.input_dim == 0 || cfg.hidden_dim == 0 || cfg.output_dim == 0) {
        throw std::invalid_argument("init_stack_params: all dims and layer count must be positive");
    }
    StackParams params;
    for (std::size_t l = 0; l < cfg.layers; ++l) {
        const std::size_t in = l == 0 ? cfg.input_dim : cfg.hidden_dim;
        const std::uint64_t layer_seed = derive_seed(seed, 100 + l);
        if (cfg.cell_kind == CellKind::gru) {
            params.layers.emplace_back(init_gru_params(cfg.hidden_dim, in, layer_seed));
        } else {
            params.layers.emplace_back(init_lstm_params(cfg.hidden_dim, in, layer_seed));
        }
    }
    auto rng = make_rng(seed, 3);
    params.proj.W = random_matrix(cfg.output_dim, cfg.hidden_dim, rng);
    params.proj.b = Vector(cfg.output_dim);
    return params;
}

}  // namespace rnnlab

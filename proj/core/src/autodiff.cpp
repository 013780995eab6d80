#include "rnnlab/autodiff.hpp"

#include <cmath>
#include <stdexcept>

#include "rnnlab/param_visit.hpp"
#include "rnnlab/rng.hpp"

namespace rnnlab {

GradientSet zeros_like(const StackParams& params) {
    GradientSet g = params;
    for_each_array(g, [](const std::string&, std::vector<double>& arr) {
        std::fill(arr.begin(), arr.end(), 0.0);
    });
    return g;
}

Tape forward_with_tape(const NetworkConfig& cfg, const StackParams& params,
                       std::span<const Vector> seq) {
    validate_stack(cfg, params);
    if (seq.empty()) throw std::invalid_argument("forward_with_tape: empty sequence");

    Tape tape;
    tape.inputs.resize(cfg.layers);
    tape.layers.resize(cfg.layers);

    std::vector<Vector> layer_in(seq.begin(), seq.end());
    for (std::size_t l = 0; l < cfg.layers; ++l) {
        const bool lazy = layer_uses_lazy_step(cfg, l);
        const bool shortcut = layer_has_residual(cfg, l);
        tape.inputs[l] = layer_in;
        tape.layers[l].steps.reserve(layer_in.size());

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
            Tape::Step s;
            s.c_prev = state.c;
            s.m_prev = state.m;
            s.gates = r.gates;
            s.c = r.state.c;
            s.m = r.state.m;
            tape.layers[l].steps.push_back(std::move(s));

            layer_out.push_back(shortcut ? residual_combine(layer_in[t], r.state.m)
                                         : r.state.m);
            state = std::move(r.state);
        }
        layer_in = std::move(layer_out);
    }

    tape.top_outputs = layer_in;
    tape.logits.reserve(layer_in.size());
    for (const Vector& h : tape.top_outputs)
        tape.logits.push_back(add(matvec(params.proj.W, h), params.proj.b));
    return tape;
}

namespace {

double log_sum_exp(const Vector& z) {
    double zmax = z[0];
    for (std::size_t k = 1; k < z.dim(); ++k) zmax = std::max(zmax, z[k]);
    double s = 0.0;
    for (std::size_t k = 0; k < z.dim(); ++k) s += std::exp(z[k] - zmax);
    return zmax + std::log(s);
}

}  // namespace

LossResult sequence_loss(std::span<const Vector> logits, std::span<const int> targets) {
    if (logits.size() != targets.size()) {
        throw std::invalid_argument("sequence_loss: " + std::to_string(targets.size()) +
                                    " targets for " + std::to_string(logits.size()) +
                                    " frames");
    }
    LossResult r;
    for (std::size_t t = 0; t < logits.size(); ++t) {
        const int label = targets[t];
        if (label == kIgnoreLabel) continue;
        if (label < 0 || static_cast<std::size_t>(label) >= logits[t].dim()) {
            throw std::invalid_argument("sequence_loss: label " + std::to_string(label) +
                                        " out of range at frame " + std::to_string(t));
        }
        const double frame_loss = log_sum_exp(logits[t]) - logits[t][label];
        if (!std::isfinite(frame_loss)) {
            throw std::runtime_error("non-finite loss at frame " + std::to_string(t));
        }
        r.total += frame_loss;
        ++r.counted_frames;
    }
    return r;
}

namespace {

// dst += M^T * v
void acc_matvec_transposed(Vector& dst, const Matrix& m, const Vector& v) {
    for (std::size_t i = 0; i < m.rows; ++i) {
        const double* row = m.data.data() + i * m.cols;
        const double vi = v[i];
        for (std::size_t j = 0; j < m.cols; ++j) dst[j] += vi * row[j];
    }
}

Vector sigmoid_backward(const Vector& d_out, const Vector& gate) {
    Vector d(gate.dim());
    for (std::size_t k = 0; k < gate.dim(); ++k)
        d[k] = d_out[k] * gate[k] * (1.0 - gate[k]);
    return d;
}

Vector tanh_backward(const Vector& d_out, const Vector& activated) {
    Vector d(activated.dim());
    for (std::size_t k = 0; k < activated.dim(); ++k)
        d[k] = d_out[k] * (1.0 - activated[k] * activated[k]);
    return d;
}

// Reverse of lstm_step. Consumes d_m and d_c for this step's outputs and
// yields gradients for the entering state and the layer input frame.
void lstm_step_backward(const LstmParams& p, LstmParams& g, const Tape::Step& s,
                        const Vector& x, const Vector& d_m, const Vector& d_c_in,
                        Vector& d_c_prev, Vector& d_m_prev, Vector& d_x) {
    const std::size_t H = p.hidden_dim();
    Vector tanh_c = tanh(s.c);

    // Output gate first: both m and the o-gate peephole feed back into c_t.
    Vector d_o = hadamard(d_m, tanh_c);
    Vector d_ao = sigmoid_backward(d_o, s.gates.o);

    Vector d_c = d_c_in;
    for (std::size_t k = 0; k < H; ++k) {
        d_c[k] += d_m[k] * s.gates.o[k] * (1.0 - tanh_c[k] * tanh_c[k]);
        d_c[k] += d_ao[k] * p.V_oc.diag[k];
    }

    acc_add_outer(g.W_ox, d_ao, x);
    acc_add_outer(g.W_om, d_ao, s.m_prev);
    acc_add_hadamard(g.V_oc.diag, d_ao, s.c);
    acc_add(g.b_o, d_ao);

    Vector d_f = hadamard(d_c, s.c_prev);
    Vector d_i = hadamard(d_c, s.gates.g);
    Vector d_g = hadamard(d_c, s.gates.i);
    Vector d_af = sigmoid_backward(d_f, s.gates.f);
    Vector d_ai = sigmoid_backward(d_i, s.gates.i);
    Vector d_ag = tanh_backward(d_g, s.gates.g);

    d_c_prev = hadamard(d_c, s.gates.f);
    for (std::size_t k = 0; k < H; ++k) {
        d_c_prev[k] += d_af[k] * p.V_fc.diag[k] + d_ai[k] * p.V_ic.diag[k];
    }

    acc_add_outer(g.W_ix, d_ai, x);
    acc_add_outer(g.W_im, d_ai, s.m_prev);
    acc_add_hadamard(g.V_ic.diag, d_ai, s.c_prev);
    acc_add(g.b_i, d_ai);
    acc_add_outer(g.W_fx, d_af, x);
    acc_add_outer(g.W_fm, d_af, s.m_prev);
    acc_add_hadamard(g.V_fc.diag, d_af, s.c_prev);
    acc_add(g.b_f, d_af);
    acc_add_outer(g.W_cx, d_ag, x);
    acc_add_outer(g.W_cm, d_ag, s.m_prev);
    acc_add(g.b_c, d_ag);

    d_m_prev = Vector(H);
    acc_matvec_transposed(d_m_prev, p.W_om, d_ao);
    acc_matvec_transposed(d_m_prev, p.W_im, d_ai);
    acc_matvec_transposed(d_m_prev, p.W_fm, d_af);
    acc_matvec_transposed(d_m_prev, p.W_cm, d_ag);

    acc_matvec_transposed(d_x, p.W_ox, d_ao);
    acc_matvec_transposed(d_x, p.W_ix, d_ai);
    acc_matvec_transposed(d_x, p.W_fx, d_af);
    acc_matvec_transposed(d_x, p.W_cx, d_ag);
}

// Reverse of gru_step. The recurrent carry is c only; m is consumed inside
// the step (candidate) and by the layer output.
void gru_step_backward(const GruParams& p, GruParams& g, const Tape::Step& s,
                       const Vector& x, const Vector& d_m, const Vector& d_c_in,
                       Vector& d_c_prev, Vector& d_x) {
    const std::size_t H = p.hidden_dim();

    // c = (1-i).c_prev + i.g
    Vector d_i(H);
    for (std::size_t k = 0; k < H; ++k)
        d_i[k] = d_c_in[k] * (s.gates.g[k] - s.c_prev[k]);
    Vector d_g = hadamard(d_c_in, s.gates.i);
    d_c_prev = hadamard(d_c_in, s.gates.f);

    Vector d_ag = tanh_backward(d_g, s.gates.g);
    acc_add_outer(g.W_cx, d_ag, x);
    acc_add_outer(g.W_cm, d_ag, s.m);
    acc_add(g.b_c, d_ag);

    // The candidate read the fresh m_t, so its gradient joins the external one.
    Vector d_m_total = d_m;
    acc_matvec_transposed(d_m_total, p.W_cm, d_ag);

    // m = o.c_prev
    Vector d_o = hadamard(d_m_total, s.c_prev);
    acc_add(d_c_prev, hadamard(d_m_total, s.gates.o));

    Vector d_ao = sigmoid_backward(d_o, s.gates.o);
    acc_add_outer(g.W_ox, d_ao, x);
    acc_add_outer(g.W_oc, d_ao, s.c_prev);
    acc_add(g.b_o, d_ao);

    Vector d_ai = sigmoid_backward(d_i, s.gates.i);
    acc_add_outer(g.W_ix, d_ai, x);
    acc_add_outer(g.W_ic, d_ai, s.c_prev);
    acc_add(g.b_i, d_ai);

    acc_matvec_transposed(d_c_prev, p.W_oc, d_ao);
    acc_matvec_transposed(d_c_prev, p.W_ic, d_ai);
    acc_matvec_transposed(d_x, p.W_ox, d_ao);
    acc_matvec_transposed(d_x, p.W_ix, d_ai);
    acc_matvec_transposed(d_x, p.W_cx, d_ag);
}

// Reverse of lazy_lstm_step. All gates and the output read c_{t-1}; the
// candidate reads m_t (or m_{t-1} under the comparison variant).
void lazy_lstm_step_backward(const LstmParams& p, LstmParams& g, const Tape::Step& s,
                             const Vector& x, bool candidate_from_prev_output,
                             const Vector& d_m, const Vector& d_c_in, Vector& d_c_prev,
                             Vector& d_m_prev, Vector& d_x) {
    const std::size_t H = p.hidden_dim();
    Vector tanh_c_prev = tanh(s.c_prev);

    Vector d_f = hadamard(d_c_in, s.c_prev);
    Vector d_i = hadamard(d_c_in, s.gates.g);
    Vector d_g = hadamard(d_c_in, s.gates.i);
    d_c_prev = hadamard(d_c_in, s.gates.f);

    Vector d_ag = tanh_backward(d_g, s.gates.g);
    const Vector& cand_src = candidate_from_prev_output ? s.m_prev : s.m;
    acc_add_outer(g.W_cx, d_ag, x);
    acc_add_outer(g.W_cm, d_ag, cand_src);
    acc_add(g.b_c, d_ag);

    d_m_prev = Vector(H);
    Vector d_m_total = d_m;
    if (candidate_from_prev_output) {
        acc_matvec_transposed(d_m_prev, p.W_cm, d_ag);
    } else {
        acc_matvec_transposed(d_m_total, p.W_cm, d_ag);
    }

    // m = o.tanh(c_prev)
    Vector d_o = hadamard(d_m_total, tanh_c_prev);
    for (std::size_t k = 0; k < H; ++k) {
        d_c_prev[k] += d_m_total[k] * s.gates.o[k] * (1.0 - tanh_c_prev[k] * tanh_c_prev[k]);
    }

    Vector d_ao = sigmoid_backward(d_o, s.gates.o);
    Vector d_af = sigmoid_backward(d_f, s.gates.f);
    Vector d_ai = sigmoid_backward(d_i, s.gates.i);
    for (std::size_t k = 0; k < H; ++k) {
        d_c_prev[k] += d_ao[k] * p.V_oc.diag[k] + d_af[k] * p.V_fc.diag[k] +
                       d_ai[k] * p.V_ic.diag[k];
    }

    acc_add_outer(g.W_ox, d_ao, x);
    acc_add_outer(g.W_om, d_ao, s.m_prev);
    acc_add_hadamard(g.V_oc.diag, d_ao, s.c_prev);
    acc_add(g.b_o, d_ao);
    acc_add_outer(g.W_ix, d_ai, x);
    acc_add_outer(g.W_im, d_ai, s.m_prev);
    acc_add_hadamard(g.V_ic.diag, d_ai, s.c_prev);
    acc_add(g.b_i, d_ai);
    acc_add_outer(g.W_fx, d_af, x);
    acc_add_outer(g.W_fm, d_af, s.m_prev);
    acc_add_hadamard(g.V_fc.diag, d_af, s.c_prev);
    acc_add(g.b_f, d_af);

    acc_matvec_transposed(d_m_prev, p.W_om, d_ao);
    acc_matvec_transposed(d_m_prev, p.W_im, d_ai);
    acc_matvec_transposed(d_m_prev, p.W_fm, d_af);

    acc_matvec_transposed(d_x, p.W_ox, d_ao);
    acc_matvec_transposed(d_x, p.W_ix, d_ai);
    acc_matvec_transposed(d_x, p.W_fx, d_af);
    acc_matvec_transposed(d_x, p.W_cx, d_ag);
}

}  // namespace

BpttResult bptt(const NetworkConfig& cfg, const StackParams& params,
                std::span<const Vector> seq, std::span<const int> targets) {
    if (seq.size() != targets.size()) {
        throw std::invalid_argument("bptt: " + std::to_string(targets.size()) +
                                    " targets for " + std::to_string(seq.size()) + " frames");
    }
    Tape tape = forward_with_tape(cfg, params, seq);
    const LossResult loss = sequence_loss(tape.logits, targets);
    const std::size_t T = seq.size();
    const std::size_t H = cfg.hidden_dim;

    BpttResult result;
    result.loss = loss.total;
    result.counted_frames = loss.counted_frames;
    result.grads = zeros_like(params);

    // d(loss)/d(logits) = softmax - onehot on labeled frames.
    std::vector<Vector> d_top(T, Vector(H));
    for (std::size_t t = 0; t < T; ++t) {
        if (targets[t] == kIgnoreLabel) continue;
        const Vector& z = tape.logits[t];
        const double lse = log_sum_exp(z);
        Vector d_z(z.dim());
        for (std::size_t k = 0; k < z.dim(); ++k) d_z[k] = std::exp(z[k] - lse);
        d_z[static_cast<std::size_t>(targets[t])] -= 1.0;

        acc_add_outer(result.grads.proj.W, d_z, tape.top_outputs[t]);
        acc_add(result.grads.proj.b, d_z);
        acc_matvec_transposed(d_top[t], params.proj.W, d_z);
    }

    // Walk layers top-down; within a layer, time-reversed.
    std::vector<Vector> d_out = std::move(d_top);
    for (std::size_t li = cfg.layers; li-- > 0;) {
        const bool lazy = layer_uses_lazy_step(cfg, li);
        const bool shortcut = layer_has_residual(cfg, li);
        const std::size_t in_dim = li == 0 ? cfg.input_dim : cfg.hidden_dim;

        std::vector<Vector> d_in(T, Vector(in_dim));
        if (shortcut) {
            for (std::size_t t = 0; t < T; ++t) d_in[t] = d_out[t];
        }

        Vector d_c_carry(H);
        Vector d_m_carry(H);
        for (std::size_t t = T; t-- > 0;) {
            const Tape::Step& s = tape.layers[li].steps[t];
            const Vector& x = tape.inputs[li][t];
            Vector d_m = d_out[t];
            acc_add(d_m, d_m_carry);
            Vector d_c_prev(H), d_m_prev(H);
            if (cfg.cell_kind == CellKind::gru) {
                gru_step_backward(std::get<GruParams>(params.layers[li]),
                                  std::get<GruParams>(result.grads.layers[li]), s, x, d_m,
                                  d_c_carry, d_c_prev, d_in[t]);
            } else if (lazy) {
                lazy_lstm_step_backward(std::get<LstmParams>(params.layers[li]),
                                        std::get<LstmParams>(result.grads.layers[li]), s, x,
                                        cfg.lazy_candidate_from_prev_output, d_m, d_c_carry,
                                        d_c_prev, d_m_prev, d_in[t]);
            } else {
                lstm_step_backward(std::get<LstmParams>(params.layers[li]),
                                   std::get<LstmParams>(result.grads.layers[li]), s, x, d_m,
                                   d_c_carry, d_c_prev, d_m_prev, d_in[t]);
            }
            d_c_carry = std::move(d_c_prev);
            d_m_carry = std::move(d_m_prev);
        }
        d_out = std::move(d_in);
    }
    return result;
}

namespace {

// Extended-precision loss evaluation for the finite-difference reference.
// The subtraction L+ - L- cancels almost all common bits, so at plain double
// the quotient noise floor is ~ulp(L)/(2 eps) ~ 1e-10, which drowns genuinely
// small gradient entries. Accumulating in long double pushes the floor to
// ~1e-13 and keeps the check meaningful at every parameter.
using LD = long double;

std::vector<LD> to_ld(const std::vector<double>& v) {
    return std::vector<LD>(v.begin(), v.end());
}

void add_matvec_ld(std::vector<LD>& out, const Matrix& m, const std::vector<LD>& v) {
    for (std::size_t i = 0; i < m.rows; ++i) {
        LD s = 0.0L;
        const double* row = m.data.data() + i * m.cols;
        for (std::size_t j = 0; j < m.cols; ++j) s += static_cast<LD>(row[j]) * v[j];
        out[i] += s;
    }
}

std::vector<LD> gate_ld(std::vector<LD> pre, bool logistic) {
    for (LD& x : pre) x = logistic ? 1.0L / (1.0L + std::exp(-x)) : std::tanh(x);
    return pre;
}

LD loss_ld(const NetworkConfig& cfg, const StackParams& params,
           std::span<const Vector> seq, std::span<const int> targets) {
    const std::size_t H = cfg.hidden_dim;
    std::vector<std::vector<LD>> layer_in;
    layer_in.reserve(seq.size());
    for (const Vector& f : seq) layer_in.push_back(to_ld(f.data));

    for (std::size_t l = 0; l < cfg.layers; ++l) {
        const bool lazy = layer_uses_lazy_step(cfg, l);
        const bool shortcut = layer_has_residual(cfg, l);
        std::vector<LD> c(H, 0.0L), m(H, 0.0L);
        std::vector<std::vector<LD>> layer_out;
        layer_out.reserve(layer_in.size());

        for (const auto& x : layer_in) {
            std::vector<LD> new_c(H), new_m(H);
            if (cfg.cell_kind == CellKind::gru) {
                const auto& p = std::get<GruParams>(params.layers[l]);
                std::vector<LD> a_i = to_ld(p.b_i.data), a_o = to_ld(p.b_o.data);
                add_matvec_ld(a_i, p.W_ix, x);
                add_matvec_ld(a_i, p.W_ic, c);
                add_matvec_ld(a_o, p.W_ox, x);
                add_matvec_ld(a_o, p.W_oc, c);
                auto i = gate_ld(std::move(a_i), true);
                auto o = gate_ld(std::move(a_o), true);
                for (std::size_t k = 0; k < H; ++k) new_m[k] = o[k] * c[k];
                std::vector<LD> a_g = to_ld(p.b_c.data);
                add_matvec_ld(a_g, p.W_cx, x);
                add_matvec_ld(a_g, p.W_cm, new_m);
                auto g = gate_ld(std::move(a_g), false);
                for (std::size_t k = 0; k < H; ++k)
                    new_c[k] = (1.0L - i[k]) * c[k] + i[k] * g[k];
            } else {
                const auto& p = std::get<LstmParams>(params.layers[l]);
                std::vector<LD> a_i = to_ld(p.b_i.data), a_f = to_ld(p.b_f.data),
                                a_o = to_ld(p.b_o.data);
                add_matvec_ld(a_i, p.W_ix, x);
                add_matvec_ld(a_i, p.W_im, m);
                add_matvec_ld(a_f, p.W_fx, x);
                add_matvec_ld(a_f, p.W_fm, m);
                add_matvec_ld(a_o, p.W_ox, x);
                add_matvec_ld(a_o, p.W_om, m);
                for (std::size_t k = 0; k < H; ++k) {
                    a_i[k] += static_cast<LD>(p.V_ic.diag[k]) * c[k];
                    a_f[k] += static_cast<LD>(p.V_fc.diag[k]) * c[k];
                }
                auto i = gate_ld(std::move(a_i), true);
                auto f = gate_ld(std::move(a_f), true);
                if (lazy) {
                    for (std::size_t k = 0; k < H; ++k)
                        a_o[k] += static_cast<LD>(p.V_oc.diag[k]) * c[k];
                    auto o = gate_ld(std::move(a_o), true);
                    for (std::size_t k = 0; k < H; ++k) new_m[k] = o[k] * std::tanh(c[k]);
                    std::vector<LD> a_g = to_ld(p.b_c.data);
                    add_matvec_ld(a_g, p.W_cx, x);
                    add_matvec_ld(a_g, p.W_cm,
                                  cfg.lazy_candidate_from_prev_output ? m : new_m);
                    auto g = gate_ld(std::move(a_g), false);
                    for (std::size_t k = 0; k < H; ++k)
                        new_c[k] = f[k] * c[k] + i[k] * g[k];
                } else {
                    std::vector<LD> a_g = to_ld(p.b_c.data);
                    add_matvec_ld(a_g, p.W_cx, x);
                    add_matvec_ld(a_g, p.W_cm, m);
                    auto g = gate_ld(std::move(a_g), false);
                    for (std::size_t k = 0; k < H; ++k)
                        new_c[k] = f[k] * c[k] + i[k] * g[k];
                    for (std::size_t k = 0; k < H; ++k)
                        a_o[k] += static_cast<LD>(p.V_oc.diag[k]) * new_c[k];
                    auto o = gate_ld(std::move(a_o), true);
                    for (std::size_t k = 0; k < H; ++k)
                        new_m[k] = o[k] * std::tanh(new_c[k]);
                }
            }
            c = std::move(new_c);
            m = new_m;
            if (shortcut) {
                const auto& x_in = x;
                for (std::size_t k = 0; k < H; ++k) new_m[k] += x_in[k];
            }
            layer_out.push_back(std::move(new_m));
        }
        layer_in = std::move(layer_out);
    }

    LD total = 0.0L;
    for (std::size_t t = 0; t < seq.size(); ++t) {
        if (targets[t] == kIgnoreLabel) continue;
        std::vector<LD> z = to_ld(params.proj.b.data);
        add_matvec_ld(z, params.proj.W, layer_in[t]);
        LD zmax = z[0];
        for (LD v : z) zmax = std::max(zmax, v);
        LD s = 0.0L;
        for (LD v : z) s += std::exp(v - zmax);
        total += zmax + std::log(s) - z[static_cast<std::size_t>(targets[t])];
    }
    return total;
}

}  // namespace

GradCheckReport grad_check(const NetworkConfig& cfg, std::uint64_t seed, double eps,
                           double tol, std::size_t time_steps) {
    if (eps < 1e-7 || eps > 1e-3) {
        throw std::invalid_argument("grad_check: eps must lie in [1e-7, 1e-3]");
    }
    if (cfg.hidden_dim > 8 || time_steps > 10) {
        throw std::invalid_argument("grad_check: keep hidden_dim <= 8 and steps <= 10");
    }

    StackParams params = init_stack_params(cfg, seed);
    auto rng = make_rng(seed, 7);
    std::uniform_real_distribution<double> input_dist(-1.0, 1.0);
    std::uniform_int_distribution<int> label_dist(0, static_cast<int>(cfg.output_dim) - 1);
    std::vector<Vector> seq(time_steps, Vector(cfg.input_dim));
    std::vector<int> targets(time_steps);
    for (auto& frame : seq)
        for (double& v : frame.data) v = input_dist(rng);
    for (int& y : targets) y = label_dist(rng);

    const BpttResult analytic = bptt(cfg, params, seq, targets);

    GradCheckReport report;
    report.tolerance = tol;

    std::vector<std::pair<std::string, std::vector<double>*>> param_arrays;
    for_each_array(params, [&](const std::string& name, std::vector<double>& arr) {
        param_arrays.emplace_back(name, &arr);
    });
    std::vector<std::pair<std::string, const std::vector<double>*>> grad_arrays;
    for_each_array(const_cast<const GradientSet&>(analytic.grads),
                   [&](const std::string& name, const std::vector<double>& arr) {
                       grad_arrays.emplace_back(name, &arr);
                   });

    for (std::size_t a = 0; a < param_arrays.size(); ++a) {
        std::vector<double>& arr = *param_arrays[a].second;
        const std::vector<double>& grad = *grad_arrays[a].second;
        for (std::size_t k = 0; k < arr.size(); ++k) {
            const double saved = arr[k];
            arr[k] = saved + eps;
            const double theta_plus = arr[k];
            const LD loss_plus = loss_ld(cfg, params, seq, targets);
            arr[k] = saved - eps;
            const double theta_minus = arr[k];
            const LD loss_minus = loss_ld(cfg, params, seq, targets);
            arr[k] = saved;

            // Divide by the spacing actually realized in double precision.
            const double numeric = static_cast<double>(
                (loss_plus - loss_minus) /
                (static_cast<LD>(theta_plus) - static_cast<LD>(theta_minus)));
            const double analytic_g = grad[k];
            const double rel = std::abs(analytic_g - numeric) /
                               std::max(1e-8, std::abs(analytic_g) + std::abs(numeric));
            if (rel > report.max_rel_err) {
                report.max_rel_err = rel;
                report.offending_param = param_arrays[a].first;
                report.offending_index = k;
            }
        }
    }
    report.pass = report.max_rel_err <= tol;
    return report;
}

}  // namespace rnnlab

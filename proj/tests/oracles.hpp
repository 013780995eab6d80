#pragma once

#include <vector>

// Independent reference implementations used only by tests. Everything here
// is written as plain scalar loops over flat arrays, on purpose: these are
// the second route the library implementations are checked against, so they
// share no code with rnnlab.

namespace oracle {

struct LstmWeights {
    int hidden = 0;
    int input = 0;
    // row-major hidden x input
    std::vector<double> W_ix, W_fx, W_cx, W_ox;
    // row-major hidden x hidden
    std::vector<double> W_im, W_fm, W_cm, W_om;
    // diagonals, length hidden
    std::vector<double> V_ic, V_fc, V_oc;
    std::vector<double> b_i, b_f, b_c, b_o;
};

struct GruWeights {
    int hidden = 0;
    int input = 0;
    std::vector<double> W_ix, W_ox, W_cx;  // hidden x input
    std::vector<double> W_ic, W_oc, W_cm;  // hidden x hidden
    std::vector<double> b_i, b_o, b_c;
};

struct StepOut {
    std::vector<double> c, m, i, f, o, g;
};

StepOut lstm_step(const LstmWeights& w, const std::vector<double>& c_prev,
                  const std::vector<double>& m_prev, const std::vector<double>& x);

StepOut gru_step(const GruWeights& w, const std::vector<double>& c_prev,
                 const std::vector<double>& x);

StepOut lazy_lstm_step(const LstmWeights& w, const std::vector<double>& c_prev,
                       const std::vector<double>& m_prev, const std::vector<double>& x,
                       bool candidate_from_prev_output);

// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, sorted
// descending.
std::vector<double> jacobi_eigenvalues(std::vector<std::vector<double>> a);

}  // namespace oracle

#pragma once

#include <random>
#include <vector>

#include "oracles.hpp"
#include "rnnlab/cells.hpp"

namespace testutil {

inline oracle::LstmWeights to_oracle(const rnnlab::LstmParams& p) {
    oracle::LstmWeights w;
    w.hidden = static_cast<int>(p.hidden_dim());
    w.input = static_cast<int>(p.input_dim());
    w.W_ix = p.W_ix.data;
    w.W_fx = p.W_fx.data;
    w.W_cx = p.W_cx.data;
    w.W_ox = p.W_ox.data;
    w.W_im = p.W_im.data;
    w.W_fm = p.W_fm.data;
    w.W_cm = p.W_cm.data;
    w.W_om = p.W_om.data;
    w.V_ic = p.V_ic.diag;
    w.V_fc = p.V_fc.diag;
    w.V_oc = p.V_oc.diag;
    w.b_i = p.b_i.data;
    w.b_f = p.b_f.data;
    w.b_c = p.b_c.data;
    w.b_o = p.b_o.data;
    return w;
}

inline oracle::GruWeights to_oracle(const rnnlab::GruParams& p) {
    oracle::GruWeights w;
    w.hidden = static_cast<int>(p.hidden_dim());
    w.input = static_cast<int>(p.input_dim());
    w.W_ix = p.W_ix.data;
    w.W_ox = p.W_ox.data;
    w.W_cx = p.W_cx.data;
    w.W_ic = p.W_ic.data;
    w.W_oc = p.W_oc.data;
    w.W_cm = p.W_cm.data;
    w.b_i = p.b_i.data;
    w.b_o = p.b_o.data;
    w.b_c = p.b_c.data;
    return w;
}

inline rnnlab::Vector random_vector(std::size_t n, std::mt19937_64& rng, double lo = -1.0,
                                    double hi = 1.0) {
    std::uniform_real_distribution<double> dist(lo, hi);
    rnnlab::Vector v(n);
    for (double& x : v.data) x = dist(rng);
    return v;
}

inline double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double m = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k)
        m = std::max(m, std::abs(a[k] - b[k]));
    return m;
}

}  // namespace testutil

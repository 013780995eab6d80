#pragma once

#include <string>
#include <variant>

#include "rnnlab/cells.hpp"

namespace rnnlab {

// Visits every flat parameter array of a tensor struct as
// fn(name, std::vector<double>&). The names are stable and double as the
// serialization keys.

template <class P, class Fn>
void for_each_array(P& p, Fn&& fn)
    requires std::is_same_v<std::remove_const_t<P>, LstmParams>
{
    fn("W_ix", p.W_ix.data);
    fn("W_im", p.W_im.data);
    fn("W_fx", p.W_fx.data);
    fn("W_fm", p.W_fm.data);
    fn("W_cx", p.W_cx.data);
    fn("W_cm", p.W_cm.data);
    fn("W_ox", p.W_ox.data);
    fn("W_om", p.W_om.data);
    fn("V_ic", p.V_ic.diag);
    fn("V_fc", p.V_fc.diag);
    fn("V_oc", p.V_oc.diag);
    fn("b_i", p.b_i.data);
    fn("b_f", p.b_f.data);
    fn("b_c", p.b_c.data);
    fn("b_o", p.b_o.data);
}

template <class P, class Fn>
void for_each_array(P& p, Fn&& fn)
    requires std::is_same_v<std::remove_const_t<P>, GruParams>
{
    fn("W_ix", p.W_ix.data);
    fn("W_ic", p.W_ic.data);
    fn("W_ox", p.W_ox.data);
    fn("W_oc", p.W_oc.data);
    fn("W_cx", p.W_cx.data);
    fn("W_cm", p.W_cm.data);
    fn("b_i", p.b_i.data);
    fn("b_o", p.b_o.data);
    fn("b_c", p.b_c.data);
}

template <class SP, class Fn>
void for_each_array(SP& sp, Fn&& fn)
    requires std::is_same_v<std::remove_const_t<SP>, StackParams>
{
    for (std::size_t l = 0; l < sp.layers.size(); ++l) {
        const std::string prefix = "layer" + std::to_string(l) + ".";
        std::visit(
            [&](auto& lp) {
                for_each_array(lp, [&](const char* name, auto& arr) { fn(prefix + name, arr); });
            },
            sp.layers[l]);
    }
    fn(std::string("proj.W"), sp.proj.W.data);
    fn(std::string("proj.b"), sp.proj.b.data);
}

}  // namespace rnnlab

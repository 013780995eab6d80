#include <doctest.h>

#include <stdexcept>

#include <cmath>
#include <random>

#include "helpers.hpp"
#include "rnnlab/autodiff.hpp"
#include "rnnlab/param_visit.hpp"

using namespace rnnlab;

namespace {

NetworkConfig small_net(CellKind kind, bool residual = false) {
    NetworkConfig cfg;
    cfg.cell_kind = kind;
    cfg.layers = 2;
    cfg.input_dim = 5;
    cfg.hidden_dim = 5;
    cfg.output_dim = 4;
    cfg.residual = residual;
    return cfg;
}

std::vector<Vector> random_seq(std::size_t T, std::size_t dim, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::vector<Vector> seq;
    for (std::size_t t = 0; t < T; ++t) seq.push_back(testutil::random_vector(dim, rng));
    return seq;
}

}  // namespace

TEST_SUITE("autodiff") {

TEST_CASE("uniform logits give loss T*ln(K) with finite gradients") {
    NetworkConfig cfg = small_net(CellKind::lstm);
    StackParams params;
    params.layers.emplace_back(LstmParams::zeros(5, 5));
    params.layers.emplace_back(LstmParams::zeros(5, 5));
    params.proj.W = Matrix(4, 5);
    params.proj.b = Vector(4);

    auto seq = random_seq(6, 5, 1);
    std::vector<int> targets = {0, 1, 2, 3, 0, 1};
    BpttResult r = bptt(cfg, params, seq, targets);

    CHECK(r.loss == doctest::Approx(6.0 * std::log(4.0)).epsilon(1e-12));
    CHECK(r.counted_frames == 6);
    for_each_array(r.grads, [](const std::string&, const std::vector<double>& a) {
        for (double v : a) CHECK(std::isfinite(v));
    });
}

TEST_CASE("zero output projection blocks every recurrent gradient") {
    NetworkConfig cfg = small_net(CellKind::gru);
    StackParams params = init_stack_params(cfg, 4);
    params.proj.W = Matrix(4, 5);
    params.proj.b = Vector(4);

    auto seq = random_seq(7, 5, 2);
    std::vector<int> targets(7, 2);
    BpttResult r = bptt(cfg, params, seq, targets);

    for (const auto& layer : r.grads.layers) {
        std::visit(
            [](const auto& g) {
                for_each_array(g, [](const char*, const std::vector<double>& a) {
                    for (double v : a) CHECK(std::abs(v) <= 1e-12);
                });
            },
            layer);
    }
}

TEST_CASE("bptt matches central finite differences on a small lstm net") {
    NetworkConfig cfg;
    cfg.cell_kind = CellKind::lstm;
    cfg.layers = 1;
    cfg.input_dim = 3;
    cfg.hidden_dim = 5;
    cfg.output_dim = 3;
    GradCheckReport report = grad_check(cfg, 0, 1e-5, 1e-5, 7);
    CAPTURE(report.offending_param);
    CAPTURE(report.max_rel_err);
    CHECK(report.pass);
}

TEST_CASE("grad_check passes for every cell kind") {
    for (CellKind kind : {CellKind::lstm, CellKind::gru, CellKind::lazy_lstm}) {
        NetworkConfig cfg = small_net(kind);
        GradCheckReport report = grad_check(cfg, static_cast<std::uint64_t>(kind), 1e-5, 1e-5);
        CAPTURE(to_string(kind));
        CAPTURE(report.offending_param);
        CHECK(report.pass);
    }
}

TEST_CASE("grad_check covers the residual path and the lazy variant switch") {
    NetworkConfig cfg = small_net(CellKind::lazy_lstm, /*residual=*/true);
    GradCheckReport r1 = grad_check(cfg, 2, 1e-5, 1e-5);
    CAPTURE(r1.offending_param);
    CHECK(r1.pass);

    cfg.lazy_candidate_from_prev_output = true;
    GradCheckReport r2 = grad_check(cfg, 2, 1e-5, 1e-5);
    CAPTURE(r2.offending_param);
    CHECK(r2.pass);

    NetworkConfig mixed = small_net(CellKind::lstm, /*residual=*/true);
    mixed.lazy_last_layer_only = true;
    GradCheckReport r3 = grad_check(mixed, 3, 1e-5, 1e-5);
    CAPTURE(r3.offending_param);
    CHECK(r3.pass);
}

TEST_CASE("ignore-labeled frames contribute nothing") {
    NetworkConfig cfg = small_net(CellKind::lstm);
    StackParams params = init_stack_params(cfg, 5);
    auto seq = random_seq(6, 5, 3);

    std::vector<int> all_ignored(6, kIgnoreLabel);
    BpttResult r0 = bptt(cfg, params, seq, all_ignored);
    CHECK(r0.loss == 0.0);
    CHECK(r0.counted_frames == 0);
    for_each_array(r0.grads, [](const std::string&, const std::vector<double>& a) {
        for (double v : a) CHECK(v == 0.0);
    });

    // A labeled prefix is unaffected by trailing ignored frames.
    std::vector<int> labeled = {1, 2, kIgnoreLabel, kIgnoreLabel, kIgnoreLabel, kIgnoreLabel};
    std::vector<int> shorter = {1, 2};
    BpttResult full = bptt(cfg, params, seq, labeled);
    BpttResult cut = bptt(cfg, params, std::span(seq).first(2), shorter);
    CHECK(full.loss == doctest::Approx(cut.loss).epsilon(1e-15));
}

TEST_CASE("batch gradients are the sum of per-sequence gradients") {
    NetworkConfig cfg = small_net(CellKind::gru);
    StackParams params = init_stack_params(cfg, 6);
    auto seq_a = random_seq(5, 5, 10);
    auto seq_b = random_seq(8, 5, 11);
    std::vector<int> tgt_a = {0, 1, 2, 3, 0};
    std::vector<int> tgt_b = {3, 2, 1, 0, 3, 2, 1, 0};

    BpttResult ra = bptt(cfg, params, seq_a, tgt_a);
    BpttResult rb = bptt(cfg, params, seq_b, tgt_b);

    std::vector<const std::vector<double>*> a_arrays, b_arrays;
    for_each_array(const_cast<const GradientSet&>(ra.grads),
                   [&](const std::string&, const std::vector<double>& a) { a_arrays.push_back(&a); });
    for_each_array(const_cast<const GradientSet&>(rb.grads),
                   [&](const std::string&, const std::vector<double>& a) { b_arrays.push_back(&a); });

    // The batch path reduces per-sequence results in order, so the sum is
    // what a 2-sequence batch must produce.
    std::size_t idx = 0;
    double worst = 0.0;
    GradientSet summed = ra.grads;
    for_each_array(summed, [&](const std::string&, std::vector<double>& a) {
        for (std::size_t k = 0; k < a.size(); ++k) {
            const double expect = (*a_arrays[idx])[k] + (*b_arrays[idx])[k];
            a[k] += (*b_arrays[idx])[k];
            worst = std::max(worst, std::abs(a[k] - expect));
        }
        ++idx;
    });
    CHECK(worst <= 1e-12);
}

TEST_CASE("bptt rejects mismatched lengths and flags non-finite loss") {
    NetworkConfig cfg = small_net(CellKind::lstm);
    StackParams params = init_stack_params(cfg, 7);
    auto seq = random_seq(4, 5, 12);
    std::vector<int> too_few = {0, 1};
    CHECK_THROWS_AS(bptt(cfg, params, seq, too_few), std::invalid_argument);

    std::vector<int> bad_label = {0, 1, 99, 0};
    CHECK_THROWS_AS(bptt(cfg, params, seq, bad_label), std::invalid_argument);
}

TEST_CASE("grad_check enforces its preconditions") {
    NetworkConfig cfg = small_net(CellKind::lstm);
    CHECK_THROWS_AS(grad_check(cfg, 0, 1e-2, 1e-5), std::invalid_argument);
    NetworkConfig big = cfg;
    big.hidden_dim = 16;
    CHECK_THROWS_AS(grad_check(big, 0, 1e-5, 1e-5), std::invalid_argument);
    CHECK_THROWS_AS(grad_check(cfg, 0, 1e-5, 1e-5, 12), std::invalid_argument);
}

}  // TEST_SUITE

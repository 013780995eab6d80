#include <benchmark/benchmark.h>

#include <random>

#include "rnnlab/autodiff.hpp"
#include "rnnlab/cells.hpp"
#include "rnnlab/probes.hpp"
#include "rnnlab/trace.hpp"

using namespace rnnlab;

namespace {

Vector random_vector(std::size_t n, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    Vector v(n);
    for (double& x : v.data) x = dist(rng);
    return v;
}

void BM_LstmStep(benchmark::State& state) {
    const std::size_t H = state.range(0);
    LstmParams p = init_lstm_params(H, H, 0);
    std::mt19937_64 rng(1);
    Vector x = random_vector(H, rng);
    CellState s = CellState::zeros(H);
    for (auto _ : state) {
        auto r = lstm_step(p, s, x);
        benchmark::DoNotOptimize(r.state.c.data.data());
    }
    state.SetItemsProcessed(state.iterations());
}

void BM_GruStep(benchmark::State& state) {
    const std::size_t H = state.range(0);
    GruParams p = init_gru_params(H, H, 0);
    std::mt19937_64 rng(2);
    Vector x = random_vector(H, rng);
    CellState s = CellState::zeros(H);
    for (auto _ : state) {
        auto r = gru_step(p, s, x);
        benchmark::DoNotOptimize(r.state.c.data.data());
    }
    state.SetItemsProcessed(state.iterations());
}

void BM_LazyLstmStep(benchmark::State& state) {
    const std::size_t H = state.range(0);
    LstmParams p = init_lstm_params(H, H, 0);
    std::mt19937_64 rng(3);
    Vector x = random_vector(H, rng);
    CellState s = CellState::zeros(H);
    for (auto _ : state) {
        auto r = lazy_lstm_step(p, s, x);
        benchmark::DoNotOptimize(r.state.c.data.data());
    }
    state.SetItemsProcessed(state.iterations());
}

void BM_Bptt(benchmark::State& state) {
    const std::size_t H = state.range(0);
    NetworkConfig cfg;
    cfg.cell_kind = CellKind::lstm;
    cfg.layers = 1;
    cfg.input_dim = H;
    cfg.hidden_dim = H;
    cfg.output_dim = 8;
    StackParams params = init_stack_params(cfg, 0);
    std::mt19937_64 rng(4);
    std::vector<Vector> seq;
    std::vector<int> targets;
    for (int t = 0; t < 50; ++t) {
        seq.push_back(random_vector(H, rng));
        targets.push_back(t % 8);
    }
    for (auto _ : state) {
        auto r = bptt(cfg, params, seq, targets);
        benchmark::DoNotOptimize(r.loss);
    }
    state.SetItemsProcessed(state.iterations() * 50);
}

void BM_PcaProjection(benchmark::State& state) {
    const std::size_t H = state.range(0);
    std::mt19937_64 rng(5);
    StateTrace trace;
    for (int t = 0; t < 300; ++t) {
        StateTrace::Step s;
        s.t = t;
        s.c = random_vector(H, rng);
        s.m = Vector(H);
        s.i = Vector(H);
        s.f = Vector(H);
        s.o = Vector(H);
        trace.steps.push_back(std::move(s));
    }
    for (auto _ : state) {
        auto proj = project_trace(trace, ProjectionMethod::pca);
        benchmark::DoNotOptimize(proj.points.data());
    }
}

}  // namespace

BENCHMARK(BM_LstmStep)->Arg(16)->Arg(64)->Arg(256);
BENCHMARK(BM_GruStep)->Arg(16)->Arg(64)->Arg(256);
BENCHMARK(BM_LazyLstmStep)->Arg(16)->Arg(64)->Arg(256);
BENCHMARK(BM_Bptt)->Arg(16)->Arg(32);
BENCHMARK(BM_PcaProjection)->Arg(64)->Arg(256);
BENCHMARK_MAIN();

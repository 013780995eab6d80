#include "rnnlab/trace.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include <json.hpp>

#include "rnnlab/rng.hpp"

namespace rnnlab {

using nlohmann::json;

StateRecorder::StateRecorder(std::size_t num_layers, SamplingPolicy policy)
    : num_layers_(num_layers), policy_(policy), units_(num_layers) {
    if (num_layers == 0) throw std::invalid_argument("recorder needs at least one layer");
    begin_sequence(0);
}

void StateRecorder::begin_sequence(int seq_id) {
    current_seq_ = seq_id;
    sequence_open_ = true;
    next_t_.assign(num_layers_, 0);
    trace_index_.assign(num_layers_, -1);
}

const std::vector<std::size_t>& StateRecorder::units_for(std::size_t layer,
                                                         std::size_t hidden) const {
    auto& ids = units_[layer];
    if (!ids.empty()) return ids;
    if (policy_.all_units || policy_.sample_size >= hidden) {
        ids.resize(hidden);
        std::iota(ids.begin(), ids.end(), 0);
    } else {
        // Draw once per layer; every sequence of the run sees the same set.
        std::vector<std::size_t> pool(hidden);
        std::iota(pool.begin(), pool.end(), 0);
        auto rng = make_rng(policy_.seed, 40 + layer);
        std::shuffle(pool.begin(), pool.end(), rng);
        ids.assign(pool.begin(), pool.begin() + policy_.sample_size);
        std::sort(ids.begin(), ids.end());
    }
    return ids;
}

const std::vector<std::size_t>& StateRecorder::sampled_units(std::size_t layer) const {
    if (layer >= num_layers_) throw std::invalid_argument("sampled_units: no such layer");
    if (units_[layer].empty())
        throw std::logic_error("sampled_units: layer has not recorded yet");
    return units_[layer];
}

namespace {

Vector take(const Vector& v, const std::vector<std::size_t>& ids) {
    Vector out(ids.size());
    for (std::size_t k = 0; k < ids.size(); ++k) out[k] = v[ids[k]];
    return out;
}

}  // namespace

void StateRecorder::record(int layer, int t, const CellState& state, const GateRecord& gates) {
    if (layer < 0 || static_cast<std::size_t>(layer) >= num_layers_) {
        throw std::invalid_argument("record: layer " + std::to_string(layer) +
                                    " out of range (layers=" + std::to_string(num_layers_) + ")");
    }
    if (!sequence_open_) begin_sequence(current_seq_);
    if (t != next_t_[layer]) {
        throw std::invalid_argument("record: out-of-order t=" + std::to_string(t) +
                                    " for layer " + std::to_string(layer) + ", expected " +
                                    std::to_string(next_t_[layer]));
    }
    next_t_[layer] = t + 1;

    if (trace_index_[layer] < 0) {
        trace_index_[layer] = static_cast<int>(traces_.size());
        StateTrace trace;
        trace.seq_id = current_seq_;
        trace.layer = layer;
        traces_.push_back(std::move(trace));
    }
    const auto& ids = units_for(layer, state.c.dim());
    StateTrace::Step step;
    step.t = t;
    step.c = take(state.c, ids);
    step.m = take(state.m, ids);
    step.i = take(gates.i, ids);
    step.f = take(gates.f, ids);
    step.o = take(gates.o, ids);
    traces_[trace_index_[layer]].steps.push_back(std::move(step));
    ++record_count_;
}

namespace {

void write_trace_lines(std::ostream& out, const StateTrace& trace) {
    for (const auto& s : trace.steps) {
        json line = {{"seq", trace.seq_id}, {"layer", trace.layer}, {"t", s.t},
                     {"c", s.c.data},       {"m", s.m.data},        {"i", s.i.data},
                     {"f", s.f.data},       {"o", s.o.data}};
        out << line.dump() << '\n';
    }
}

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
    return out;
}

}  // namespace

void export_trace(const StateTrace& trace, const std::filesystem::path& path) {
    if (trace.steps.empty())
        throw std::invalid_argument("export_trace: refusing to write an empty trace");
    auto out = open_out(path);
    write_trace_lines(out, trace);
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

void export_traces(const std::vector<StateTrace>& traces, const std::filesystem::path& path) {
    if (traces.empty()) throw std::invalid_argument("export_traces: no traces to write");
    auto out = open_out(path);
    for (const auto& t : traces) write_trace_lines(out, t);
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

std::vector<StateTrace> import_traces(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open trace file: " + path.string());
    std::vector<StateTrace> traces;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            throw std::runtime_error(path.string() + ":" + std::to_string(lineno) +
                                     ": bad trace line: " + e.what());
        }
        const int seq = j.at("seq").get<int>();
        const int layer = j.at("layer").get<int>();
        StateTrace* trace = nullptr;
        for (auto& t : traces) {
            if (t.seq_id == seq && t.layer == layer) {
                trace = &t;
                break;
            }
        }
        if (!trace) {
            traces.emplace_back();
            trace = &traces.back();
            trace->seq_id = seq;
            trace->layer = layer;
        }
        StateTrace::Step step;
        step.t = j.at("t").get<int>();
        step.c.data = j.at("c").get<std::vector<double>>();
        step.m.data = j.at("m").get<std::vector<double>>();
        step.i.data = j.at("i").get<std::vector<double>>();
        step.f.data = j.at("f").get<std::vector<double>>();
        step.o.data = j.at("o").get<std::vector<double>>();
        trace->steps.push_back(std::move(step));
    }
    return traces;
}

}  // namespace rnnlab

#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "rnnlab/cells.hpp"
#include "rnnlab/linalg.hpp"

namespace rnnlab {

// Time-indexed record of one layer's internal states over one sequence.
// Field names match the JSONL export schema.
struct StateTrace {
    int seq_id = 0;
    int layer = 0;

    struct Step {
        int t = 0;
        Vector c, m, i, f, o;
        bool operator==(const Step&) const = default;
    };
    std::vector<Step> steps;

    std::size_t unit_count() const { return steps.empty() ? 0 : steps.front().c.dim(); }
    bool operator==(const StateTrace&) const = default;
};

// Which units a recorder keeps: everything, or a seeded random subset whose
// index set is drawn once and reused for every sequence of the run.
struct SamplingPolicy {
    bool all_units = true;
    std::size_t sample_size = 0;
    std::uint64_t seed = 0;

    static SamplingPolicy all() { return {}; }
    static SamplingPolicy random_subset(std::size_t k, std::uint64_t seed) {
        return {false, k, seed};
    }
};

// Collects per-step cell states during a forward pass; one recorder serves
// one sequence at a time (begin_sequence switches). Not safe to share
// across concurrent workers.
class StateRecorder {
  public:
    explicit StateRecorder(std::size_t num_layers, SamplingPolicy policy = SamplingPolicy::all());

    void begin_sequence(int seq_id);
    // Appends one step. Steps of a layer must arrive in order t = 0,1,2,...;
    // anything else throws.
    void record(int layer, int t, const CellState& state, const GateRecord& gates);

    const std::vector<StateTrace>& traces() const { return traces_; }
    std::vector<StateTrace> take_traces() { return std::move(traces_); }
    std::size_t record_count() const { return record_count_; }
    // Index set actually recorded for a layer (identity when not sampling).
    const std::vector<std::size_t>& sampled_units(std::size_t layer) const;

  private:
    std::size_t num_layers_;
    SamplingPolicy policy_;
    int current_seq_ = 0;
    bool sequence_open_ = false;
    std::size_t record_count_ = 0;
    std::vector<int> next_t_;                          // per layer
    std::vector<int> trace_index_;                     // per layer, into traces_
    mutable std::vector<std::vector<std::size_t>> units_;  // per layer, lazily drawn
    std::vector<StateTrace> traces_;

    const std::vector<std::size_t>& units_for(std::size_t layer, std::size_t hidden) const;
};

// Writes one trace as JSONL, one time step per line:
//   {"seq":i,"layer":l,"t":t,"c":[...],"m":[...],"i":[...],"f":[...],"o":[...]}
// Round-trips losslessly. An empty trace is an error, not an empty file.
void export_trace(const StateTrace& trace, const std::filesystem::path& path);
// Same format, several traces into one file.
void export_traces(const std::vector<StateTrace>& traces, const std::filesystem::path& path);
// Reads a JSONL trace file back, grouping lines by (seq, layer) in file order.
std::vector<StateTrace> import_traces(const std::filesystem::path& path);

}  // namespace rnnlab

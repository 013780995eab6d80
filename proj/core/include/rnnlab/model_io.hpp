#pragma once

#include <filesystem>
#include <map>
#include <string>

#include "rnnlab/cells.hpp"
#include "rnnlab/tasks.hpp"
#include "rnnlab/training.hpp"

namespace rnnlab {

// Task half of an experiment config. `kind` selects which parameter block
// applies.
struct TaskSpec {
    enum class Kind { phones, recall } kind = Kind::phones;
    // phones
    int num_seq = 64;
    int seq_len = 60;
    int num_classes = 8;
    std::size_t input_dim = 8;
    int min_dwell = 10;
    int max_dwell = 25;
    double noise_std = 0.3;
    // recall
    int delay = 5;
    int num_symbols = 4;

    std::uint64_t seed = 0;
    bool operator==(const TaskSpec&) const = default;
};

ToyDataset generate(const TaskSpec& task);

// Probe settings carried alongside an experiment so a result directory is
// reproducible from its config alone.
struct ProbeSpec {
    int units_per_layer = 50;
    int bins = 40;
    double clip = 10.0;
    std::uint64_t sample_seed = 0;
    std::string method = "pca";
    std::uint64_t tsne_seed = 0;
    int noise_pos = 20;
    int noise_len = 10;
    double noise_std = 1.0;
    double epsilon = 0.01;
    std::uint64_t noise_seed = 0;
    bool operator==(const ProbeSpec&) const = default;
};

// One self-contained experiment: every seed explicit, reruns reproduce
// byte-identical outputs on the same platform/build.
struct ExperimentConfig {
    NetworkConfig network;
    TrainConfig train;
    TaskSpec task;
    ProbeSpec probe;
    bool operator==(const ExperimentConfig&) const = default;
};

// --- JSON files -------------------------------------------------------------
// Model files are JSON, format_version 1, with every tensor as a named
// row-major array serialized at full precision (parameters round-trip
// bit-exactly). Distinct errors for version mismatch, schema violations and
// dimension mismatches.

void save_model(const StackParams& params, const NetworkConfig& cfg,
                const std::filesystem::path& path,
                const std::map<std::string, std::string>& metadata = {});

struct LoadedModel {
    StackParams params;
    NetworkConfig config;
    std::map<std::string, std::string> metadata;
};
LoadedModel load_model(const std::filesystem::path& path);

void save_dataset(const ToyDataset& data, const std::string& task_name,
                  const std::filesystem::path& path);
ToyDataset load_dataset(const std::filesystem::path& path);

ExperimentConfig load_experiment_config(const std::filesystem::path& path);
void save_experiment_config(const ExperimentConfig& cfg, const std::filesystem::path& path);
std::string experiment_config_to_json(const ExperimentConfig& cfg);
ExperimentConfig experiment_config_from_json(const std::string& text);

}  // namespace rnnlab

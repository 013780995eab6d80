#include "rnnlab/model_io.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "rnnlab/param_visit.hpp"

namespace rnnlab {

using nlohmann::json;

namespace {

constexpr int kFormatVersion = 1;

json parse_file(const std::filesystem::path& path, const char* what) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error(std::string(what) + ": cannot open " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw std::runtime_error(std::string(what) + ": schema error in " + path.string() +
                                 ": " + e.what());
    }
    return j;
}

void write_file(const json& j, const std::filesystem::path& path, const char* what) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error(std::string(what) + ": cannot open " + path.string());
    out << j.dump(2) << '\n';
    if (!out) throw std::runtime_error(std::string(what) + ": write failed " + path.string());
}

json network_to_json(const NetworkConfig& cfg) {
    return {{"cell_kind", to_string(cfg.cell_kind)},
            {"layers", cfg.layers},
            {"input_dim", cfg.input_dim},
            {"hidden_dim", cfg.hidden_dim},
            {"output_dim", cfg.output_dim},
            {"residual", cfg.residual},
            {"lazy_last_layer_only", cfg.lazy_last_layer_only},
            {"lazy_candidate_from_prev_output", cfg.lazy_candidate_from_prev_output}};
}

NetworkConfig network_from_json(const json& j) {
    NetworkConfig cfg;
    try {
        cfg.cell_kind = cell_kind_from_string(j.at("cell_kind").get<std::string>());
        cfg.layers = j.at("layers").get<std::size_t>();
        cfg.input_dim = j.at("input_dim").get<std::size_t>();
        cfg.hidden_dim = j.at("hidden_dim").get<std::size_t>();
        cfg.output_dim = j.at("output_dim").get<std::size_t>();
        cfg.residual = j.value("residual", false);
        cfg.lazy_last_layer_only = j.value("lazy_last_layer_only", false);
        cfg.lazy_candidate_from_prev_output = j.value("lazy_candidate_from_prev_output", false);
    } catch (const json::exception& e) {
        throw std::runtime_error(std::string("network config: schema error: ") + e.what());
    }
    return cfg;
}

}  // namespace

void save_model(const StackParams& params, const NetworkConfig& cfg,
                const std::filesystem::path& path,
                const std::map<std::string, std::string>& metadata) {
    validate_stack(cfg, params);
    json j;
    j["format_version"] = kFormatVersion;
    j["network"] = network_to_json(cfg);
    j["layer_params"] = json::array();
    for (std::size_t l = 0; l < params.layers.size(); ++l) {
        json tensors;
        std::visit(
            [&](const auto& lp) {
                for_each_array(lp, [&](const char* name, const std::vector<double>& arr) {
                    tensors[name] = arr;
                });
            },
            params.layers[l]);
        j["layer_params"].push_back(std::move(tensors));
    }
    j["output_projection"] = {{"W", params.proj.W.data}, {"b", params.proj.b.data}};
    j["metadata"] = metadata;
    write_file(j, path, "save_model");
}

LoadedModel load_model(const std::filesystem::path& path) {
    const json j = parse_file(path, "load_model");

    if (!j.contains("format_version") || !j["format_version"].is_number_integer()) {
        throw std::runtime_error("load_model: schema error: missing format_version");
    }
    const int version = j["format_version"].get<int>();
    if (version != kFormatVersion) {
        throw std::runtime_error("load_model: format version " + std::to_string(version) +
                                 " not supported (expected " +
                                 std::to_string(kFormatVersion) + ")");
    }
    if (!j.contains("network") || !j.contains("layer_params") ||
        !j.contains("output_projection")) {
        throw std::runtime_error("load_model: schema error: missing network/layer_params/output_projection");
    }

    LoadedModel model;
    model.config = network_from_json(j["network"]);
    const NetworkConfig& cfg = model.config;

    const json& lp = j["layer_params"];
    if (!lp.is_array() || lp.size() != cfg.layers) {
        throw std::runtime_error("load_model: dim mismatch: " + std::to_string(lp.size()) +
                                 " layer param blocks for " + std::to_string(cfg.layers) +
                                 " layers");
    }
    for (std::size_t l = 0; l < cfg.layers; ++l) {
        const std::size_t in = l == 0 ? cfg.input_dim : cfg.hidden_dim;
        LayerParams layer = cfg.cell_kind == CellKind::gru
                                ? LayerParams(GruParams::zeros(cfg.hidden_dim, in))
                                : LayerParams(LstmParams::zeros(cfg.hidden_dim, in));
        std::visit(
            [&](auto& p) {
                for_each_array(p, [&](const char* name, std::vector<double>& arr) {
                    if (!lp[l].contains(name)) {
                        throw std::runtime_error("load_model: schema error: layer " +
                                                 std::to_string(l) + " missing tensor " + name);
                    }
                    std::vector<double> values;
                    try {
                        values = lp[l][name].get<std::vector<double>>();
                    } catch (const json::exception& e) {
                        throw std::runtime_error("load_model: schema error: layer " +
                                                 std::to_string(l) + " tensor " + name + ": " +
                                                 e.what());
                    }
                    if (values.size() != arr.size()) {
                        throw std::runtime_error(
                            "load_model: dim mismatch: layer " + std::to_string(l) +
                            " tensor " + name + " has " + std::to_string(values.size()) +
                            " values, expected " + std::to_string(arr.size()));
                    }
                    arr = std::move(values);
                });
            },
            layer);
        model.params.layers.push_back(std::move(layer));
    }

    const json& proj = j["output_projection"];
    model.params.proj.W = Matrix(cfg.output_dim, cfg.hidden_dim);
    try {
        std::vector<double> w = proj.at("W").get<std::vector<double>>();
        std::vector<double> b = proj.at("b").get<std::vector<double>>();
        if (w.size() != cfg.output_dim * cfg.hidden_dim || b.size() != cfg.output_dim) {
            throw std::runtime_error("load_model: dim mismatch: output projection has " +
                                     std::to_string(w.size()) + "+" + std::to_string(b.size()) +
                                     " values, expected " +
                                     std::to_string(cfg.output_dim * cfg.hidden_dim) + "+" +
                                     std::to_string(cfg.output_dim));
        }
        model.params.proj.W.data = std::move(w);
        model.params.proj.b.data = std::move(b);
    } catch (const json::exception& e) {
        throw std::runtime_error(std::string("load_model: schema error: output_projection: ") +
                                 e.what());
    }

    if (j.contains("metadata")) {
        for (const auto& [key, value] : j["metadata"].items()) {
            model.metadata[key] = value.is_string() ? value.get<std::string>() : value.dump();
        }
    }

    validate_stack(model.config, model.params);
    for (const auto& layer : model.params.layers) {
        std::visit(
            [&](const auto& p) {
                for_each_array(p, [&](const char* name, const std::vector<double>& arr) {
                    for (double v : arr) {
                        if (!std::isfinite(v)) {
                            throw std::runtime_error(
                                std::string("load_model: non-finite value in tensor ") + name);
                        }
                    }
                });
            },
            layer);
    }
    return model;
}

void save_dataset(const ToyDataset& data, const std::string& task_name,
                  const std::filesystem::path& path) {
    json j;
    j["task"] = task_name;
    j["num_classes"] = data.num_classes;
    j["input_dim"] = data.input_dim;
    j["seed"] = data.seed;
    j["ignore_label"] = -1;
    j["sequences"] = json::array();
    for (const auto& s : data.sequences) {
        json frames = json::array();
        for (const auto& f : s.frames) frames.push_back(f.data);
        j["sequences"].push_back({{"frames", std::move(frames)}, {"labels", s.labels}});
    }
    write_file(j, path, "save_dataset");
}

ToyDataset load_dataset(const std::filesystem::path& path) {
    const json j = parse_file(path, "load_dataset");
    ToyDataset data;
    try {
        data.num_classes = j.at("num_classes").get<int>();
        data.input_dim = j.at("input_dim").get<std::size_t>();
        data.seed = j.value("seed", 0ull);
        for (const auto& s : j.at("sequences")) {
            ToyDataset::Sequence seq;
            for (const auto& f : s.at("frames")) {
                Vector frame;
                frame.data = f.get<std::vector<double>>();
                if (frame.dim() != data.input_dim) {
                    throw std::runtime_error("load_dataset: dim mismatch: frame has " +
                                             std::to_string(frame.dim()) +
                                             " entries, expected " +
                                             std::to_string(data.input_dim));
                }
                seq.frames.push_back(std::move(frame));
            }
            seq.labels = s.at("labels").get<std::vector<int>>();
            if (seq.labels.size() != seq.frames.size()) {
                throw std::runtime_error("load_dataset: dim mismatch: " +
                                         std::to_string(seq.labels.size()) + " labels for " +
                                         std::to_string(seq.frames.size()) + " frames");
            }
            data.sequences.push_back(std::move(seq));
        }
    } catch (const json::exception& e) {
        throw std::runtime_error(std::string("load_dataset: schema error: ") + e.what());
    }
    return data;
}

ToyDataset generate(const TaskSpec& task) {
    if (task.kind == TaskSpec::Kind::phones) {
        return gen_pseudo_phone_task(task.num_seq, task.seq_len, task.num_classes,
                                     task.input_dim, task.min_dwell, task.max_dwell,
                                     task.noise_std, task.seed);
    }
    return gen_delayed_recall(task.num_seq, task.delay, task.num_symbols, task.seed);
}

namespace {

json task_to_json(const TaskSpec& t) {
    json j;
    j["kind"] = t.kind == TaskSpec::Kind::phones ? "phones" : "recall";
    j["seed"] = t.seed;
    if (t.kind == TaskSpec::Kind::phones) {
        j["num_seq"] = t.num_seq;
        j["seq_len"] = t.seq_len;
        j["num_classes"] = t.num_classes;
        j["input_dim"] = t.input_dim;
        j["min_dwell"] = t.min_dwell;
        j["max_dwell"] = t.max_dwell;
        j["noise_std"] = t.noise_std;
    } else {
        j["num_seq"] = t.num_seq;
        j["delay"] = t.delay;
        j["num_symbols"] = t.num_symbols;
    }
    return j;
}

TaskSpec task_from_json(const json& j) {
    TaskSpec t;
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "phones") {
        t.kind = TaskSpec::Kind::phones;
        t.num_seq = j.value("num_seq", t.num_seq);
        t.seq_len = j.value("seq_len", t.seq_len);
        t.num_classes = j.value("num_classes", t.num_classes);
        t.input_dim = j.value("input_dim", t.input_dim);
        t.min_dwell = j.value("min_dwell", t.min_dwell);
        t.max_dwell = j.value("max_dwell", t.max_dwell);
        t.noise_std = j.value("noise_std", t.noise_std);
    } else if (kind == "recall") {
        t.kind = TaskSpec::Kind::recall;
        t.num_seq = j.value("num_seq", t.num_seq);
        t.delay = j.value("delay", t.delay);
        t.num_symbols = j.value("num_symbols", t.num_symbols);
    } else {
        throw std::runtime_error("experiment config: unknown task kind '" + kind + "'");
    }
    t.seed = j.value("seed", 0ull);
    return t;
}

json experiment_to_json_impl(const ExperimentConfig& cfg) {
    json j;
    j["network"] = network_to_json(cfg.network);
    j["train"] = {{"lr", cfg.train.lr},
                  {"clip_norm", cfg.train.clip_norm},
                  {"epochs", cfg.train.epochs},
                  {"batch_size", cfg.train.batch_size},
                  {"seed", cfg.train.seed},
                  {"init_seed", cfg.train.init_seed}};
    j["task"] = task_to_json(cfg.task);
    j["probe"] = {{"units_per_layer", cfg.probe.units_per_layer},
                  {"bins", cfg.probe.bins},
                  {"clip", cfg.probe.clip},
                  {"sample_seed", cfg.probe.sample_seed},
                  {"method", cfg.probe.method},
                  {"tsne_seed", cfg.probe.tsne_seed},
                  {"noise_pos", cfg.probe.noise_pos},
                  {"noise_len", cfg.probe.noise_len},
                  {"noise_std", cfg.probe.noise_std},
                  {"epsilon", cfg.probe.epsilon},
                  {"noise_seed", cfg.probe.noise_seed}};
    return j;
}

ExperimentConfig experiment_from_json_impl(const json& j) {
    ExperimentConfig cfg;
    try {
        cfg.network = network_from_json(j.at("network"));
        const json& t = j.at("train");
        cfg.train.lr = t.at("lr").get<double>();
        cfg.train.clip_norm = t.at("clip_norm").get<double>();
        cfg.train.epochs = t.at("epochs").get<int>();
        cfg.train.batch_size = t.at("batch_size").get<int>();
        cfg.train.seed = t.at("seed").get<std::uint64_t>();
        cfg.train.init_seed = t.value("init_seed", cfg.train.seed);
        cfg.task = task_from_json(j.at("task"));
    } catch (const json::exception& e) {
        throw std::runtime_error(std::string("experiment config: schema error: ") + e.what());
    }
    return cfg;
}

}  // namespace

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
    return experiment_from_json_impl(parse_file(path, "experiment config"));
}

void save_experiment_config(const ExperimentConfig& cfg, const std::filesystem::path& path) {
    write_file(experiment_to_json_impl(cfg), path, "experiment config");
}

std::string experiment_config_to_json(const ExperimentConfig& cfg) {
    return experiment_to_json_impl(cfg).dump(2);
}

ExperimentConfig experiment_config_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw std::runtime_error(std::string("experiment config: schema error: ") + e.what());
    }
    return experiment_from_json_impl(j);
}

}  // namespace rnnlab

#include "cli_app.hpp"

#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "rnnlab/autodiff.hpp"
#include "rnnlab/model_io.hpp"
#include "rnnlab/probes.hpp"
#include "rnnlab/trace.hpp"
#include "rnnlab/training.hpp"

namespace rnnlab {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::ofstream open_out(const fs::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
    return out;
}

// Every artifact gets the resolved settings written next to it.
void write_provenance(const fs::path& out_path, const json& resolved) {
    fs::path p = out_path;
    p += ".config.json";
    auto out = open_out(p);
    out << resolved.dump(2) << '\n';
}

fs::path sidecar(const fs::path& out_path, const char* suffix) {
    fs::path p = out_path;
    p.replace_extension();
    p += suffix;
    p += out_path.has_extension() ? out_path.extension() : fs::path(".csv");
    return p;
}

std::vector<StateTrace> capture_traces(const NetworkConfig& cfg, const StackParams& params,
                                       const ToyDataset& data, int only_seq = -1) {
    StateRecorder rec(cfg.layers);
    for (std::size_t s = 0; s < data.sequences.size(); ++s) {
        if (only_seq >= 0 && static_cast<std::size_t>(only_seq) != s) continue;
        rec.begin_sequence(static_cast<int>(s));
        stack_forward(cfg, params, data.sequences[s].frames, &rec);
    }
    return rec.take_traces();
}

struct ProbeFlags {
    std::string model_path;
    std::string data_path;
    std::string out_path;
    int seq = 0;
    // hist
    int layer = -1;
    int units = 50;
    int bins = 40;
    double clip = 10.0;
    std::uint64_t sample_seed = 0;
    // trace
    std::string method = "pca";
    std::uint64_t tsne_seed = 0;
    // perturb
    int noise_pos = 0;
    int noise_len = 0;
    double noise_std = 1.0;
    double epsilon = 0.01;
    std::uint64_t noise_seed = 0;
};

json probe_provenance(const ProbeFlags& f, const char* which) {
    return {{"probe", which},       {"model", f.model_path},    {"data", f.data_path},
            {"seq", f.seq},         {"layer", f.layer},         {"units", f.units},
            {"bins", f.bins},       {"clip", f.clip},           {"sample_seed", f.sample_seed},
            {"method", f.method},   {"tsne_seed", f.tsne_seed}, {"noise_pos", f.noise_pos},
            {"noise_len", f.noise_len}, {"noise_std", f.noise_std}, {"epsilon", f.epsilon},
            {"noise_seed", f.noise_seed}};
}

void run_probe_hist(const ProbeFlags& f) {
    LoadedModel model = load_model(f.model_path);
    ToyDataset data = load_dataset(f.data_path);
    auto traces = capture_traces(model.config, model.params, data);

    auto out = open_out(f.out_path);
    out << "layer,unit,bin_lo,bin_hi,count\n";
    for (std::size_t l = 0; l < model.config.layers; ++l) {
        if (f.layer >= 0 && static_cast<std::size_t>(f.layer) != l) continue;
        HistogramReport report =
            activation_histogram(traces, static_cast<int>(l), f.units, f.bins, f.clip,
                                 model.config.cell_kind, f.sample_seed);
        for (const auto& unit : report.units) {
            for (int b = 0; b < f.bins; ++b) {
                out << l << ',' << unit.unit << ',' << fmt(report.edges[b]) << ','
                    << fmt(report.edges[b + 1]) << ',' << unit.counts[b] << '\n';
            }
        }
        // Pooled per-layer histogram carries unit = -1.
        for (int b = 0; b < f.bins; ++b) {
            out << l << ",-1," << fmt(report.edges[b]) << ',' << fmt(report.edges[b + 1])
                << ',' << report.pooled[b] << '\n';
        }
    }
    write_provenance(f.out_path, probe_provenance(f, "hist"));
}

void run_probe_trace(const ProbeFlags& f) {
    LoadedModel model = load_model(f.model_path);
    ToyDataset data = load_dataset(f.data_path);
    if (f.seq < 0 || static_cast<std::size_t>(f.seq) >= data.sequences.size()) {
        throw std::invalid_argument("probe trace: no sequence " + std::to_string(f.seq));
    }
    const ProjectionMethod method = f.method == "tsne" ? ProjectionMethod::tsne
                                                       : ProjectionMethod::pca;
    auto traces = capture_traces(model.config, model.params, data, f.seq);

    auto out = open_out(f.out_path);
    out << "layer,t,x,y\n";
    auto side = open_out(sidecar(f.out_path, "_smoothness"));
    side << "layer,smoothness\n";
    for (const auto& trace : traces) {
        TraceProjection proj = project_trace(trace, method, f.tsne_seed);
        for (std::size_t t = 0; t < proj.points.size(); ++t) {
            out << trace.layer << ',' << trace.steps[t].t << ',' << fmt(proj.points[t][0])
                << ',' << fmt(proj.points[t][1]) << '\n';
        }
        side << trace.layer << ',' << fmt(proj.smoothness) << '\n';
    }
    write_provenance(f.out_path, probe_provenance(f, "trace"));
}

void run_probe_perturb(const ProbeFlags& f) {
    LoadedModel model = load_model(f.model_path);
    ToyDataset data = load_dataset(f.data_path);
    if (f.seq < 0 || static_cast<std::size_t>(f.seq) >= data.sequences.size()) {
        throw std::invalid_argument("probe perturb: no sequence " + std::to_string(f.seq));
    }
    PerturbationReport report = perturbation_probe(
        model.config, model.params, data.sequences[f.seq].frames, f.noise_pos, f.noise_len,
        f.noise_std, f.epsilon, f.noise_seed);

    auto out = open_out(f.out_path);
    out << "layer,unit,t_aligned,abs_delta\n";
    auto side = open_out(sidecar(f.out_path, "_decay"));
    side << "layer,unit,decay_len\n";
    for (const auto& layer : report.layers) {
        for (std::size_t u = 0; u < layer.abs_delta.size(); ++u) {
            for (std::size_t t = 0; t < layer.abs_delta[u].size(); ++t) {
                out << layer.layer << ',' << u << ',' << t << ','
                    << fmt(layer.abs_delta[u][t]) << '\n';
            }
            side << layer.layer << ',' << u << ',' << layer.decay_len[u] << '\n';
        }
    }
    write_provenance(f.out_path, probe_provenance(f, "perturb"));
}

void run_train(const std::string& config_path, const std::string& model_out,
               const std::string& metrics_out) {
    ExperimentConfig cfg = load_experiment_config(config_path);
    ToyDataset data = generate(cfg.task);
    TrainResult result = train(cfg.train, cfg.network, data);

    std::map<std::string, std::string> meta = {
        {"train_seed", std::to_string(cfg.train.seed)},
        {"init_seed", std::to_string(cfg.train.init_seed)},
        {"task_seed", std::to_string(cfg.task.seed)},
        {"epochs", std::to_string(cfg.train.epochs)}};
    save_model(result.params, cfg.network, model_out, meta);
    const json resolved = json::parse(experiment_config_to_json(cfg));
    write_provenance(model_out, resolved);

    if (!metrics_out.empty()) {
        auto out = open_out(metrics_out);
        out << "epoch,loss,frame_acc\n";
        for (const auto& m : result.history) {
            out << m.epoch << ',' << fmt(m.loss) << ',' << fmt(m.frame_acc) << '\n';
        }
        write_provenance(metrics_out, resolved);
    }
    if (!result.history.empty()) {
        std::cout << "final loss " << fmt(result.history.back().loss) << ", frame_acc "
                  << fmt(result.history.back().frame_acc) << "\n";
    }
}

int run_gradcheck(const std::string& cell, bool residual, bool lazy_variant,
                  std::uint64_t seed, double eps, double tol) {
    NetworkConfig cfg;
    cfg.cell_kind = cell_kind_from_string(cell);
    cfg.layers = 2;
    cfg.input_dim = 6;
    cfg.hidden_dim = 6;
    cfg.output_dim = 4;
    cfg.residual = residual;
    cfg.lazy_candidate_from_prev_output = lazy_variant;

    GradCheckReport report = grad_check(cfg, seed, eps, tol);
    std::cout << "gradcheck cell=" << cell << " residual=" << (residual ? 1 : 0)
              << " seed=" << seed << " max_rel_err=" << fmt(report.max_rel_err)
              << " worst=" << report.offending_param << "[" << report.offending_index
              << "] -> " << (report.pass ? "PASS" : "FAIL") << "\n";
    return report.pass ? 0 : 1;
}

void run_gen_data(const TaskSpec& task, const std::string& out_path) {
    ToyDataset data = generate(task);
    save_dataset(data, task.kind == TaskSpec::Kind::phones ? "phones" : "recall", out_path);

    json resolved = {{"task", task.kind == TaskSpec::Kind::phones ? "phones" : "recall"},
                     {"num_seq", task.num_seq},
                     {"seed", task.seed}};
    if (task.kind == TaskSpec::Kind::phones) {
        resolved["seq_len"] = task.seq_len;
        resolved["num_classes"] = task.num_classes;
        resolved["input_dim"] = task.input_dim;
        resolved["min_dwell"] = task.min_dwell;
        resolved["max_dwell"] = task.max_dwell;
        resolved["noise_std"] = task.noise_std;
    } else {
        resolved["delay"] = task.delay;
        resolved["num_symbols"] = task.num_symbols;
    }
    write_provenance(out_path, resolved);
}

void run_compare(const std::string& model_a, const std::string& model_b,
                 const std::string& probe, const ProbeFlags& f) {
    LoadedModel a = load_model(model_a);
    LoadedModel b = load_model(model_b);
    ToyDataset data = load_dataset(f.data_path);
    if (f.seq < 0 || static_cast<std::size_t>(f.seq) >= data.sequences.size()) {
        throw std::invalid_argument("compare: no sequence " + std::to_string(f.seq));
    }

    auto out = open_out(f.out_path);
    out << "probe,layer,metric,model_a,model_b\n";
    std::cout << "probe,layer,metric,model_a,model_b\n";
    auto emit = [&](int layer, const char* metric, double va, double vb) {
        out << probe << ',' << layer << ',' << metric << ',' << fmt(va) << ',' << fmt(vb)
            << '\n';
        std::cout << probe << ',' << layer << ',' << metric << ',' << fmt(va) << ','
                  << fmt(vb) << '\n';
    };

    if (probe == "trace") {
        auto ta = capture_traces(a.config, a.params, data, f.seq);
        auto tb = capture_traces(b.config, b.params, data, f.seq);
        for (const auto& trace : ta) {
            for (const auto& other : tb) {
                if (other.layer != trace.layer) continue;
                emit(trace.layer, "smoothness", trace_smoothness(trace),
                     trace_smoothness(other));
            }
        }
    } else if (probe == "perturb") {
        auto ra = perturbation_probe(a.config, a.params, data.sequences[f.seq].frames,
                                     f.noise_pos, f.noise_len, f.noise_std, f.epsilon,
                                     f.noise_seed);
        auto rb = perturbation_probe(b.config, b.params, data.sequences[f.seq].frames,
                                     f.noise_pos, f.noise_len, f.noise_std, f.epsilon,
                                     f.noise_seed);
        const std::size_t layers = std::min(ra.layers.size(), rb.layers.size());
        for (std::size_t l = 0; l < layers; ++l) {
            emit(static_cast<int>(l), "median_decay_len", median_decay_length(ra.layers[l]),
                 median_decay_length(rb.layers[l]));
            emit(static_cast<int>(l), "layer_decay_len", ra.layers[l].layer_decay_len,
                 rb.layers[l].layer_decay_len);
        }
    } else {
        throw std::invalid_argument("compare: unknown probe '" + probe + "'");
    }

    json resolved = probe_provenance(f, "compare");
    resolved["model_a"] = model_a;
    resolved["model_b"] = model_b;
    resolved["compared_probe"] = probe;
    write_provenance(f.out_path, resolved);
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
    CLI::App app{"gated recurrent cell laboratory"};
    app.require_subcommand(1);

    // train
    auto* train_cmd = app.add_subcommand("train", "train a model from an experiment config");
    std::string train_config, train_model_out, train_metrics_out;
    train_cmd->add_option("--config", train_config, "experiment config JSON")->required();
    train_cmd->add_option("--out", train_model_out, "model file to write")->required();
    train_cmd->add_option("--metrics", train_metrics_out, "metrics CSV to write");

    // gradcheck
    auto* gc_cmd = app.add_subcommand("gradcheck", "finite-difference gradient verification");
    std::string gc_cell = "lstm";
    bool gc_residual = false, gc_lazy_variant = false;
    std::uint64_t gc_seed = 0;
    double gc_eps = 1e-5, gc_tol = 1e-5;
    gc_cmd->add_option("--cell", gc_cell, "lstm|gru|lazy_lstm")->required();
    gc_cmd->add_flag("--residual", gc_residual, "wrap layers with shortcut connections");
    gc_cmd->add_flag("--lazy-variant", gc_lazy_variant,
                     "lazy candidate reads m_{t-1} instead of m_t");
    gc_cmd->add_option("--seed", gc_seed, "net/data seed");
    gc_cmd->add_option("--eps", gc_eps, "central difference step");
    gc_cmd->add_option("--tol", gc_tol, "max relative error to pass");

    // gen-data
    auto* gen_cmd = app.add_subcommand("gen-data", "generate a toy dataset file");
    TaskSpec task;
    std::string gen_task = "phones", gen_out;
    gen_cmd->add_option("--task", gen_task, "phones|recall")->required();
    gen_cmd->add_option("--num-seq", task.num_seq, "sequences to generate");
    gen_cmd->add_option("--seq-len", task.seq_len, "frames per sequence (phones)");
    gen_cmd->add_option("--num-classes", task.num_classes, "classes (phones)");
    gen_cmd->add_option("--input-dim", task.input_dim, "frame dimension (phones)");
    gen_cmd->add_option("--min-dwell", task.min_dwell, "min segment length (phones)");
    gen_cmd->add_option("--max-dwell", task.max_dwell, "max segment length (phones)");
    gen_cmd->add_option("--noise-std", task.noise_std, "frame noise (phones)");
    gen_cmd->add_option("--delay", task.delay, "gap length (recall)");
    gen_cmd->add_option("--num-symbols", task.num_symbols, "alphabet size (recall)");
    gen_cmd->add_option("--seed", task.seed, "dataset seed");
    gen_cmd->add_option("--out", gen_out, "dataset file to write")->required();

    // probe hist|trace|perturb
    auto* probe_cmd = app.add_subcommand("probe", "run a probe against a model");
    probe_cmd->require_subcommand(1);
    ProbeFlags pf;
    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--model", pf.model_path, "model file")->required();
        cmd->add_option("--data", pf.data_path, "dataset file")->required();
        cmd->add_option("--out", pf.out_path, "CSV to write")->required();
    };
    auto* hist_cmd = probe_cmd->add_subcommand("hist", "activation histograms");
    add_common(hist_cmd);
    hist_cmd->add_option("--layer", pf.layer, "layer to report (-1 = all)");
    hist_cmd->add_option("--units", pf.units, "units sampled per layer");
    hist_cmd->add_option("--bins", pf.bins, "histogram bins");
    hist_cmd->add_option("--clip", pf.clip, "clip bound for unbounded cells");
    hist_cmd->add_option("--sample-seed", pf.sample_seed, "unit sampling seed");

    auto* trace_cmd = probe_cmd->add_subcommand("trace", "2-D temporal trace + smoothness");
    add_common(trace_cmd);
    trace_cmd->add_option("--seq", pf.seq, "sequence index");
    trace_cmd->add_option("--method", pf.method, "pca|tsne")
        ->check(CLI::IsMember({"pca", "tsne"}));
    trace_cmd->add_option("--tsne-seed", pf.tsne_seed, "tsne init seed");

    auto* perturb_cmd = probe_cmd->add_subcommand("perturb", "noise-insertion decay");
    add_common(perturb_cmd);
    perturb_cmd->add_option("--seq", pf.seq, "sequence index");
    perturb_cmd->add_option("--noise-pos", pf.noise_pos, "insertion frame")->required();
    perturb_cmd->add_option("--noise-len", pf.noise_len, "inserted frames")->required();
    perturb_cmd->add_option("--noise-std", pf.noise_std, "noise stddev");
    perturb_cmd->add_option("--epsilon", pf.epsilon, "decay threshold");
    perturb_cmd->add_option("--noise-seed", pf.noise_seed, "noise seed");

    // compare
    auto* cmp_cmd = app.add_subcommand("compare", "side-by-side probe of two models");
    std::string cmp_a, cmp_b, cmp_probe;
    cmp_cmd->add_option("--model-a", cmp_a, "first model")->required();
    cmp_cmd->add_option("--model-b", cmp_b, "second model")->required();
    cmp_cmd->add_option("--probe", cmp_probe, "trace|perturb")
        ->required()
        ->check(CLI::IsMember({"trace", "perturb"}));
    cmp_cmd->add_option("--data", pf.data_path, "dataset file")->required();
    cmp_cmd->add_option("--out", pf.out_path, "report CSV")->required();
    cmp_cmd->add_option("--seq", pf.seq, "sequence index");
    cmp_cmd->add_option("--noise-pos", pf.noise_pos, "insertion frame (perturb)");
    cmp_cmd->add_option("--noise-len", pf.noise_len, "inserted frames (perturb)");
    cmp_cmd->add_option("--noise-std", pf.noise_std, "noise stddev (perturb)");
    cmp_cmd->add_option("--epsilon", pf.epsilon, "decay threshold (perturb)");
    cmp_cmd->add_option("--noise-seed", pf.noise_seed, "noise seed (perturb)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (*train_cmd) {
            run_train(train_config, train_model_out, train_metrics_out);
        } else if (*gc_cmd) {
            return run_gradcheck(gc_cell, gc_residual, gc_lazy_variant, gc_seed, gc_eps,
                                 gc_tol);
        } else if (*gen_cmd) {
            task.kind = gen_task == "recall" ? TaskSpec::Kind::recall : TaskSpec::Kind::phones;
            if (gen_task != "phones" && gen_task != "recall") {
                throw std::invalid_argument("gen-data: unknown task '" + gen_task + "'");
            }
            run_gen_data(task, gen_out);
        } else if (*probe_cmd) {
            if (*hist_cmd) run_probe_hist(pf);
            if (*trace_cmd) run_probe_trace(pf);
            if (*perturb_cmd) run_probe_perturb(pf);
        } else if (*cmp_cmd) {
            run_compare(cmp_a, cmp_b, cmp_probe, pf);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

}  // namespace rnnlab

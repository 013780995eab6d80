#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "cli_app.hpp"
#include "rnnlab/model_io.hpp"

using namespace rnnlab;
namespace fs = std::filesystem;

namespace {

int cli(const std::vector<std::string>& args) {
    std::vector<const char*> argv = {"rnnlab"};
    for (const auto& a : args) argv.push_back(a.c_str());
    return run_cli(static_cast<int>(argv.size()), argv.data());
}

fs::path work_dir() {
    const fs::path dir = fs::temp_directory_path() / "rnnlab_cli_tests";
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path);
    out << text;
}

const char* kSmallExperiment = R"({
  "network": {"cell_kind": "gru", "layers": 1, "input_dim": 4,
               "hidden_dim": 6, "output_dim": 3, "residual": false},
  "train": {"lr": 0.5, "clip_norm": 5.0, "epochs": 2, "batch_size": 4,
             "seed": 0, "init_seed": 1},
  "task": {"kind": "phones", "num_seq": 6, "seq_len": 15, "num_classes": 3,
            "input_dim": 4, "min_dwell": 3, "max_dwell": 6, "noise_std": 0.2,
            "seed": 2}
})";

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("gradcheck subcommand exits 0 and within tolerance") {
    CHECK(cli({"gradcheck", "--cell", "gru", "--seed", "0"}) == 0);
    CHECK(cli({"gradcheck", "--cell", "lstm", "--seed", "1", "--residual"}) == 0);
    CHECK(cli({"gradcheck", "--cell", "lazy_lstm", "--seed", "2"}) == 0);
}

TEST_CASE("unknown flags exit nonzero") {
    CHECK(cli({"gradcheck", "--cell", "gru", "--frobnicate"}) != 0);
    CHECK(cli({"no-such-command"}) != 0);
    CHECK(cli({}) != 0);
}

TEST_CASE("train with lr=0 writes a model equal to its initialization") {
    const fs::path dir = work_dir();
    const fs::path cfg_path = dir / "exp_lr0.json";
    std::string cfg_text = kSmallExperiment;
    const auto at = cfg_text.find("\"lr\": 0.5");
    REQUIRE(at != std::string::npos);
    cfg_text.replace(at, 9, "\"lr\": 0.0");
    write_text(cfg_path, cfg_text);

    const fs::path model_path = dir / "model_lr0.json";
    REQUIRE(cli({"train", "--config", cfg_path.string(), "--out", model_path.string()}) == 0);

    LoadedModel model = load_model(model_path);
    CHECK(model.params == init_stack_params(model.config, 1));
    // Provenance lands next to the artifact.
    CHECK(fs::exists(model_path.string() + ".config.json"));
}

TEST_CASE("train writes metrics and reruns reproduce them byte for byte") {
    const fs::path dir = work_dir();
    const fs::path cfg_path = dir / "exp.json";
    write_text(cfg_path, kSmallExperiment);

    const fs::path m1 = dir / "model1.json", m2 = dir / "model2.json";
    const fs::path csv1 = dir / "metrics1.csv", csv2 = dir / "metrics2.csv";
    REQUIRE(cli({"train", "--config", cfg_path.string(), "--out", m1.string(), "--metrics",
                 csv1.string()}) == 0);
    REQUIRE(cli({"train", "--config", cfg_path.string(), "--out", m2.string(), "--metrics",
                 csv2.string()}) == 0);

    CHECK(slurp(csv1) == slurp(csv2));
    CHECK(slurp(m1) == slurp(m2));
    const std::string header = slurp(csv1).substr(0, slurp(csv1).find('\n'));
    CHECK(header == "epoch,loss,frame_acc");
}

TEST_CASE("gen-data is deterministic and reloadable") {
    const fs::path dir = work_dir();
    const fs::path d1 = dir / "data1.json", d2 = dir / "data2.json";
    const std::vector<std::string> args = {"gen-data", "--task",    "phones",
                                           "--num-seq", "4",        "--seq-len", "12",
                                           "--num-classes", "3",    "--input-dim", "4",
                                           "--seed", "7"};
    auto with_out = [&](const fs::path& p) {
        auto a = args;
        a.push_back("--out");
        a.push_back(p.string());
        return a;
    };
    REQUIRE(cli(with_out(d1)) == 0);
    REQUIRE(cli(with_out(d2)) == 0);
    CHECK(slurp(d1) == slurp(d2));

    ToyDataset data = load_dataset(d1);
    CHECK(data.sequences.size() == 4);
    CHECK(data.input_dim == 4);
}

TEST_CASE("probe perturb with noise-len 0 reports all-zero decay") {
    const fs::path dir = work_dir();
    const fs::path cfg_path = dir / "exp_probe.json";
    write_text(cfg_path, kSmallExperiment);
    const fs::path model_path = dir / "model_probe.json";
    REQUIRE(cli({"train", "--config", cfg_path.string(), "--out", model_path.string()}) == 0);

    const fs::path data_path = dir / "data_probe.json";
    REQUIRE(cli({"gen-data", "--task", "phones", "--num-seq", "2", "--seq-len", "20",
                 "--num-classes", "3", "--input-dim", "4", "--seed", "3", "--out",
                 data_path.string()}) == 0);

    const fs::path out = dir / "perturb.csv";
    REQUIRE(cli({"probe", "perturb", "--model", model_path.string(), "--data",
                 data_path.string(), "--noise-pos", "5", "--noise-len", "0", "--out",
                 out.string()}) == 0);

    const fs::path decay = dir / "perturb_decay.csv";
    REQUIRE(fs::exists(decay));
    std::ifstream in(decay);
    std::string line;
    std::getline(in, line);
    CHECK(line == "layer,unit,decay_len");
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        CHECK(line.substr(line.rfind(',') + 1) == "0");
    }
}

TEST_CASE("probe hist and trace write the documented columns") {
    const fs::path dir = work_dir();
    const fs::path cfg_path = dir / "exp_probe2.json";
    write_text(cfg_path, kSmallExperiment);
    const fs::path model_path = dir / "model_probe2.json";
    REQUIRE(cli({"train", "--config", cfg_path.string(), "--out", model_path.string()}) == 0);
    const fs::path data_path = dir / "data_probe2.json";
    REQUIRE(cli({"gen-data", "--task", "phones", "--num-seq", "2", "--seq-len", "20",
                 "--num-classes", "3", "--input-dim", "4", "--seed", "4", "--out",
                 data_path.string()}) == 0);

    const fs::path hist = dir / "hist.csv";
    REQUIRE(cli({"probe", "hist", "--model", model_path.string(), "--data",
                 data_path.string(), "--units", "4", "--bins", "8", "--out",
                 hist.string()}) == 0);
    CHECK(slurp(hist).substr(0, slurp(hist).find('\n')) == "layer,unit,bin_lo,bin_hi,count");

    const fs::path trace = dir / "trace.csv";
    REQUIRE(cli({"probe", "trace", "--model", model_path.string(), "--data",
                 data_path.string(), "--seq", "0", "--method", "pca", "--out",
                 trace.string()}) == 0);
    CHECK(slurp(trace).substr(0, slurp(trace).find('\n')) == "layer,t,x,y");
    CHECK(fs::exists(dir / "trace_smoothness.csv"));
    CHECK(fs::exists(trace.string() + ".config.json"));
}

TEST_CASE("compare produces a side-by-side report") {
    const fs::path dir = work_dir();
    const fs::path cfg_path = dir / "exp_cmp.json";
    write_text(cfg_path, kSmallExperiment);
    const fs::path ma = dir / "model_a.json";
    REQUIRE(cli({"train", "--config", cfg_path.string(), "--out", ma.string()}) == 0);

    std::string cfg_b = kSmallExperiment;
    const auto at = cfg_b.find("\"cell_kind\": \"gru\"");
    REQUIRE(at != std::string::npos);
    cfg_b.replace(at, 18, "\"cell_kind\": \"lstm\"");
    const fs::path cfg_b_path = dir / "exp_cmp_b.json";
    write_text(cfg_b_path, cfg_b);
    const fs::path mb = dir / "model_b.json";
    REQUIRE(cli({"train", "--config", cfg_b_path.string(), "--out", mb.string()}) == 0);

    const fs::path data_path = dir / "data_cmp.json";
    REQUIRE(cli({"gen-data", "--task", "phones", "--num-seq", "1", "--seq-len", "25",
                 "--num-classes", "3", "--input-dim", "4", "--seed", "5", "--out",
                 data_path.string()}) == 0);

    const fs::path report = dir / "compare.csv";
    REQUIRE(cli({"compare", "--model-a", ma.string(), "--model-b", mb.string(), "--probe",
                 "trace", "--data", data_path.string(), "--out", report.string()}) == 0);
    const std::string text = slurp(report);
    CHECK(text.substr(0, text.find('\n')) == "probe,layer,metric,model_a,model_b");
    CHECK(text.find("smoothness") != std::string::npos);
}

TEST_CASE("missing files fail with a one-line cause, not a crash") {
    CHECK(cli({"probe", "hist", "--model", "/nope/m.json", "--data", "/nope/d.json",
               "--out", "/tmp/unused.csv"}) == 1);
    CHECK(cli({"train", "--config", "/nope/cfg.json", "--out", "/tmp/unused_model.json"}) ==
          1);
}

}  // TEST_SUITE

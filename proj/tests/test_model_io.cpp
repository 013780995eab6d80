#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "helpers.hpp"
#include "rnnlab/model_io.hpp"

using namespace rnnlab;

namespace {

std::filesystem::path temp_file(const char* name) {
    return std::filesystem::temp_directory_path() / name;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path);
    out << text;
}

}  // namespace

TEST_SUITE("model_io") {

TEST_CASE("save/load round-trips every parameter bit") {
    NetworkConfig cfg;
    cfg.cell_kind = CellKind::lazy_lstm;
    cfg.layers = 2;
    cfg.input_dim = 3;
    cfg.hidden_dim = 4;
    cfg.output_dim = 5;
    cfg.residual = false;
    cfg.lazy_candidate_from_prev_output = true;
    StackParams params = init_stack_params(cfg, 31);

    const auto path = temp_file("rnnlab_model_roundtrip.json");
    save_model(params, cfg, path, {{"note", "roundtrip"}});
    LoadedModel model = load_model(path);

    CHECK(model.config == cfg);
    CHECK(model.params == params);  // exact double equality
    CHECK(model.metadata.at("note") == "roundtrip");
    std::filesystem::remove(path);
}

TEST_CASE("gru models round-trip too") {
    NetworkConfig cfg;
    cfg.cell_kind = CellKind::gru;
    cfg.layers = 1;
    cfg.input_dim = 4;
    cfg.hidden_dim = 6;
    cfg.output_dim = 3;
    StackParams params = init_stack_params(cfg, 8);

    const auto path = temp_file("rnnlab_model_gru.json");
    save_model(params, cfg, path);
    LoadedModel model = load_model(path);
    CHECK(model.params == params);
    std::filesystem::remove(path);
}

TEST_CASE("a truncated file is a schema error, not a crash") {
    NetworkConfig cfg;
    cfg.cell_kind = CellKind::lstm;
    cfg.layers = 1;
    cfg.input_dim = 2;
    cfg.hidden_dim = 2;
    cfg.output_dim = 2;
    StackParams params = init_stack_params(cfg, 1);

    const auto path = temp_file("rnnlab_model_trunc.json");
    save_model(params, cfg, path);
    std::ifstream in(path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    in.close();
    write_text(path, text.substr(0, text.size() / 2));

    CHECK_THROWS_WITH_AS(load_model(path), doctest::Contains("schema error"),
                         std::runtime_error);
    std::filesystem::remove(path);
}

TEST_CASE("version mismatch is its own error") {
    const auto path = temp_file("rnnlab_model_badversion.json");
    write_text(path, R"({"format_version": 2, "network": {}, "layer_params": [],
                         "output_projection": {}})");
    CHECK_THROWS_WITH_AS(load_model(path), doctest::Contains("format version 2"),
                         std::runtime_error);
    std::filesystem::remove(path);
}

TEST_CASE("dimension mismatch is its own error") {
    NetworkConfig cfg;
    cfg.cell_kind = CellKind::lstm;
    cfg.layers = 1;
    cfg.input_dim = 2;
    cfg.hidden_dim = 2;
    cfg.output_dim = 2;
    StackParams params = init_stack_params(cfg, 1);
    const auto path = temp_file("rnnlab_model_baddim.json");
    save_model(params, cfg, path);

    std::ifstream in(path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    in.close();
    // Claim a bigger hidden size than the stored tensors.
    const auto at = text.find("\"hidden_dim\": 2");
    REQUIRE(at != std::string::npos);
    text.replace(at, 15, "\"hidden_dim\": 3");
    write_text(path, text);

    CHECK_THROWS_WITH_AS(load_model(path), doctest::Contains("dim mismatch"),
                         std::runtime_error);
    std::filesystem::remove(path);
}

TEST_CASE("a hand-built 1-unit model loads and steps like the scalar oracle") {
    const auto path = temp_file("rnnlab_model_minimal.json");
    write_text(path, R"({
      "format_version": 1,
      "network": {"cell_kind": "lstm", "layers": 1, "input_dim": 1,
                   "hidden_dim": 1, "output_dim": 1, "residual": false},
      "layer_params": [{
        "W_ix": [0.25], "W_im": [-0.5], "W_fx": [0.125], "W_fm": [0.75],
        "W_cx": [1.0],  "W_cm": [0.5],  "W_ox": [-0.25], "W_om": [0.0625],
        "V_ic": [0.5],  "V_fc": [-0.25], "V_oc": [0.125],
        "b_i": [0.1], "b_f": [1.0], "b_c": [-0.2], "b_o": [0.3]
      }],
      "output_projection": {"W": [2.0], "b": [0.5]}
    })");

    LoadedModel model = load_model(path);
    const auto& p = std::get<LstmParams>(model.params.layers[0]);

    oracle::LstmWeights w = testutil::to_oracle(p);
    auto ref = oracle::lstm_step(w, {0.3}, {-0.2}, {0.9});
    auto got = lstm_step(p, {Vector{0.3}, Vector{-0.2}}, Vector{0.9});
    CHECK(got.state.c[0] == doctest::Approx(ref.c[0]).epsilon(1e-15));
    CHECK(got.state.m[0] == doctest::Approx(ref.m[0]).epsilon(1e-15));
    std::filesystem::remove(path);
}

TEST_CASE("dataset files round-trip") {
    ToyDataset data = gen_pseudo_phone_task(4, 15, 3, 5, 2, 6, 0.25, 77);
    const auto path = temp_file("rnnlab_dataset_roundtrip.json");
    save_dataset(data, "phones", path);
    ToyDataset back = load_dataset(path);
    CHECK(back == data);
    std::filesystem::remove(path);
}

TEST_CASE("experiment configs round-trip through json") {
    ExperimentConfig cfg;
    cfg.network.cell_kind = CellKind::gru;
    cfg.network.layers = 2;
    cfg.network.input_dim = 8;
    cfg.network.hidden_dim = 24;
    cfg.network.output_dim = 8;
    cfg.network.residual = true;
    cfg.train.lr = 0.4;
    cfg.train.epochs = 12;
    cfg.train.seed = 3;
    cfg.train.init_seed = 4;
    cfg.task.kind = TaskSpec::Kind::phones;
    cfg.task.noise_std = 0.1;
    cfg.task.seed = 9;

    ExperimentConfig back = experiment_config_from_json(experiment_config_to_json(cfg));
    CHECK(back == cfg);

    CHECK_THROWS_WITH_AS(experiment_config_from_json("{not json"),
                         doctest::Contains("schema error"), std::runtime_error);
}

TEST_CASE("generate dispatches on the task kind") {
    TaskSpec phones;
    phones.kind = TaskSpec::Kind::phones;
    phones.num_seq = 3;
    phones.seq_len = 12;
    CHECK(generate(phones).sequences.size() == 3);

    TaskSpec recall;
    recall.kind = TaskSpec::Kind::recall;
    recall.num_seq = 5;
    recall.delay = 2;
    recall.num_symbols = 3;
    ToyDataset data = generate(recall);
    CHECK(data.sequences.size() == 5);
    CHECK(data.sequences[0].frames.size() == 4);
}

}  // TEST_SUITE

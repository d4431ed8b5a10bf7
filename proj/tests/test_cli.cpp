#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>

#include <json.hpp>

#include "bsf/bsf.hpp"

namespace fs = std::filesystem;

namespace {

struct RunResult {
    int exit_code;
    std::string output;
};

RunResult run_cli(const std::string& args) {
    const fs::path log = fs::temp_directory_path() / "cli_out.txt";
    const std::string cmd = std::string(BSF_CLI_PATH) + " " + args + " > " + log.string() +
                            " 2>&1";
    const int status = std::system(cmd.c_str());
    std::ifstream f(log);
    std::stringstream ss;
    ss << f.rdbuf();
    int code = -1;
    if (WIFEXITED(status)) code = WEXITSTATUS(status);
    return {code, ss.str()};
}

fs::path fresh_dir(const std::string& name) {
    fs::path p = fs::temp_directory_path() / name;
    fs::remove_all(p);
    return p;
}

std::string wine_path() { return std::string(BSF_DATA_DIR) + "/wine.csv"; }

nlohmann::json read_json(const fs::path& p) {
    std::ifstream f(p);
    REQUIRE(f.good());
    return nlohmann::json::parse(f);
}

}  // namespace

TEST_CASE("help output lists every subcommand") {
    auto r = run_cli("--help");
    CHECK(r.exit_code == 0);
    for (const char* sub : {"train", "cv", "select-features", "prune-neurons",
                            "prune-kernels", "export-frames", "inspect-model"})
        CHECK(r.output.find(sub) != std::string::npos);
}

TEST_CASE("missing subcommand and bad flags are usage errors") {
    CHECK(run_cli("").exit_code != 0);
    CHECK(run_cli("train --no-such-flag").exit_code != 0);
}

TEST_CASE("conflicting or absent data sources exit with code 2") {
    auto none = run_cli("train --labels-col class");
    CHECK(none.exit_code == 2);
    CHECK(none.output.find("usage error") != std::string::npos);
    auto both = run_cli("train --data x.csv --labels-col class --mnist-images y --mnist-labels z");
    CHECK(both.exit_code == 2);
    CHECK(run_cli("train --data " + wine_path()).exit_code == 2);  // no --labels-col
    CHECK(run_cli("prune-neurons --data " + wine_path() + " --labels-col class").exit_code ==
          2);  // l1 missing
}

TEST_CASE("a missing dataset file exits 1 and leaves no partial outputs") {
    fs::path out = fresh_dir("cli_missing");
    auto r = run_cli("train --data /nonexistent.csv --labels-col class --out " + out.string());
    CHECK(r.exit_code == 1);
    CHECK(r.output.find("error:") != std::string::npos);
    CHECK(!fs::exists(out / "report.json"));
    CHECK(!fs::exists(out / "model.json"));
}

TEST_CASE("train on the wine set writes a report, model and frames") {
    fs::path out = fresh_dir("cli_train");
    auto r = run_cli("train --data " + wine_path() +
                     " --labels-col class --bsf input --l1 0.01 --epochs 20"
                     " --snapshot-every 10 --seed 3 --out " +
                     out.string());
    CHECK(r.exit_code == 0);
    CHECK(r.output.find("train accuracy") != std::string::npos);

    auto report = read_json(out / "report.json");
    CHECK(report.at("schema_version") == 1);
    CHECK(report.at("outcome").at("command") == "train");
    CHECK(report.at("history").size() == 20);
    CHECK(report.at("outcome").at("train_accuracy").get<double>() > 0.9);
    CHECK(report.at("bsf_snapshots").size() == 2);

    auto model = read_json(out / "model.json");
    bsf::Network net = bsf::Network::from_json(model);
    REQUIRE(net.bsf_layers().size() == 1);
    CHECK(net.bsf_layers()[0]->weights().size() == 13);

    // vector-layout frames: 64 rows, 4 columns per gate
    CHECK(fs::exists(out / "frames/epoch_0010.csv"));
    std::ifstream pgm(out / "frames/epoch_0020.pgm", std::ios::binary);
    REQUIRE(pgm.good());
    std::string magic, dims;
    std::getline(pgm, magic);
    std::getline(pgm, dims);
    CHECK(magic == "P5");
    CHECK(dims == "52 64");
}

TEST_CASE("cv on the wine set reports per-fold accuracies") {
    fs::path out = fresh_dir("cli_cv");
    auto r = run_cli("cv --data " + wine_path() +
                     " --labels-col class --epochs 30 --folds 5 --seed 2 --out " + out.string());
    CHECK(r.exit_code == 0);
    auto report = read_json(out / "report.json");
    auto outcome = report.at("outcome");
    CHECK(outcome.at("command") == "cv");
    CHECK(outcome.at("stratified") == true);
    CHECK(outcome.at("fold_val_accuracy").size() == 5);
    CHECK(outcome.at("mean_val_accuracy").get<double>() > 0.8);
}

TEST_CASE("select-features writes the truncated dataset next to the report") {
    fs::path out = fresh_dir("cli_select");
    auto r = run_cli("select-features --data " + wine_path() +
                     " --labels-col class --l1 0.05 --epochs 40 --threshold topk:6"
                     " --folds 5 --seed 1 --out " +
                     out.string());
    CHECK(r.exit_code == 0);
    CHECK(r.output.find("kept 6 of 13 features") != std::string::npos);
    auto report = read_json(out / "report.json");
    CHECK(report.at("outcome").at("selected_indices").size() == 6);
    CHECK(report.at("outcome").at("gate_weights").size() == 13);

    bsf::Dataset trunc = bsf::load_csv((out / "truncated.csv").string(), "class");
    CHECK(trunc.n_features() == 6);
    CHECK(trunc.n_samples() == 178);
    CHECK(trunc.n_classes == 3);
}

TEST_CASE("export-frames renders an image-shaped gate as a pixel grid") {
    // hand-built single-gate model over a 1x6x6 input
    bsf::Network net({1, 6, 6});
    net.add(std::make_unique<bsf::BsfLayer>(bsf::BsfLayer::Gate::element, 36, 0.0));
    for (std::size_t i = 0; i < 36; ++i)
        net.bsf_layers()[0]->weights()[i] = static_cast<double>(i) / 35.0;
    fs::path out = fresh_dir("cli_frames");
    fs::create_directories(out);
    bsf::write_file((out / "model.json").string(), net.to_json().dump(2));

    auto r = run_cli("export-frames --model " + (out / "model.json").string() + " --out " +
                     out.string());
    CHECK(r.exit_code == 0);
    CHECK(r.output.find("wrote 1 frame(s)") != std::string::npos);
    std::ifstream pgm(out / "frames/epoch_0000.pgm", std::ios::binary);
    REQUIRE(pgm.good());
    std::string magic, dims;
    std::getline(pgm, magic);
    std::getline(pgm, dims);
    CHECK(magic == "P5");
    CHECK(dims == "6 6");

    auto bad = run_cli("export-frames --model /nonexistent.json --out " + out.string());
    CHECK(bad.exit_code == 1);
}

TEST_CASE("inspect-model prints the layer table and parameter total") {
    bsf::Network net = bsf::build_mlp(4, 2);
    bsf::RngStream rng(1);
    net.init(rng);
    fs::path out = fresh_dir("cli_inspect");
    fs::create_directories(out);
    bsf::write_file((out / "model.json").string(), net.to_json().dump(2));
    auto r = run_cli("inspect-model --model " + (out / "model.json").string());
    CHECK(r.exit_code == 0);
    CHECK(r.output.find("dense") != std::string::npos);
    std::ostringstream want;
    want << "total parameters: " << net.param_count();
    CHECK(r.output.find(want.str()) != std::string::npos);
}

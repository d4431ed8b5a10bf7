// Command-line surface for the binary stochastic filtering engine:
// training, cross-validation, feature selection, pruning and frame export.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "bsf/bsf.hpp"

namespace fs = std::filesystem;

namespace {

struct CommonOpts {
    std::string data;
    std::string labels_col;
    std::vector<std::string> categorical;
    std::string mnist_images, mnist_labels;
    std::size_t limit = 0;
    std::uint64_t seed = 1;
    double l1 = 0.0;
    std::size_t epochs = 500;
    std::size_t patience = 20;
    std::size_t batch = 32;
    std::string threshold = "abs:0.5";
    std::size_t folds = 10;
    std::size_t snapshot_every = 1;
    std::string out = "out";
    std::string model;
    std::string bsf = "none";  // none | input | hidden | channel
};

void add_data_flags(CLI::App* cmd, CommonOpts& o) {
    cmd->add_option("--data", o.data, "CSV dataset path");
    cmd->add_option("--labels-col", o.labels_col, "label column name for CSV data");
    cmd->add_option("--categorical", o.categorical, "categorical column names");
    cmd->add_option("--mnist-images", o.mnist_images, "IDX image file");
    cmd->add_option("--mnist-labels", o.mnist_labels, "IDX label file");
    cmd->add_option("--limit", o.limit, "use only the first N samples (default 0 = all)");
}

void add_train_flags(CLI::App* cmd, CommonOpts& o) {
    cmd->add_option("--seed", o.seed, "random seed (default 1)");
    cmd->add_option("--l1", o.l1, "L1 coefficient for gate weights (default 0)");
    cmd->add_option("--epochs", o.epochs, "maximum training epochs (default 500)");
    cmd->add_option("--patience", o.patience, "early-stopping patience in epochs (default 20)");
    cmd->add_option("--batch", o.batch, "mini-batch size (default 32)");
    cmd->add_option("--snapshot-every", o.snapshot_every,
                    "record gate weights every k epochs (default 1)");
    cmd->add_option("--out", o.out, "output directory (default ./out)");
}

bsf::TrainConfig make_config(const CommonOpts& o) {
    bsf::TrainConfig cfg;
    cfg.max_epochs = o.epochs;
    cfg.patience = o.patience;
    cfg.batch_size = o.batch;
    cfg.l1_coef = o.l1;
    cfg.seed = o.seed;
    cfg.snapshot_every = o.snapshot_every;
    return cfg;
}

bool is_image_source(const CommonOpts& o) { return !o.mnist_images.empty(); }

bsf::Dataset load_data(const CommonOpts& o) {
    const bool csv = !o.data.empty();
    const bool idx = is_image_source(o);
    if (csv == idx)
        throw CLI::ValidationError(
            "exactly one dataset source required: --data or --mnist-images/--mnist-labels");
    if (csv) {
        if (o.labels_col.empty())
            throw CLI::ValidationError("--labels-col is required with --data");
        bsf::Dataset d = bsf::load_csv(o.data, o.labels_col, o.categorical);
        if (o.limit > 0 && o.limit < d.n_samples()) {
            std::vector<std::size_t> idxs(o.limit);
            std::iota(idxs.begin(), idxs.end(), 0);
            d = d.subset(idxs);
        }
        return d;
    }
    if (o.mnist_labels.empty())
        throw CLI::ValidationError("--mnist-labels is required with --mnist-images");
    return bsf::load_idx(o.mnist_images, o.mnist_labels, o.limit);
}

/// Tracks files written under --out; anything not committed is removed on
/// destruction so a failed command leaves no partial outputs behind.
class OutputSet {
public:
    explicit OutputSet(const std::string& dir) : dir_(dir) { fs::create_directories(dir_); }

    ~OutputSet() {
        if (committed_) return;
        for (const auto& p : written_) {
            std::error_code ec;
            fs::remove(p, ec);
        }
    }

    void write(const std::string& rel, const std::string& bytes) {
        const fs::path p = dir_ / rel;
        fs::create_directories(p.parent_path());
        bsf::write_file(p.string(), bytes);
        written_.push_back(p);
    }

    void commit() { committed_ = true; }

    fs::path path(const std::string& rel) const { return dir_ / rel; }

private:
    fs::path dir_;
    std::vector<fs::path> written_;
    bool committed_ = false;
};

bsf::FrameLayout layout_for(const bsf::Network& net, const bsf::BsfLayer& gate) {
    const auto& in = net.input_shape();
    if (gate.gate() == bsf::BsfLayer::Gate::element && in.size() == 3 && in[0] == 1 &&
        in[1] * in[2] == gate.weights().size())
        return bsf::FrameLayout::grid(in[1], in[2]);
    return bsf::FrameLayout::vector(gate.weights().size());
}

void export_snapshot_frames(OutputSet& out, bsf::Network& net, const bsf::RunReport& rep) {
    auto gates = net.bsf_layers();
    if (gates.empty()) return;
    for (const auto& snap : rep.bsf_snapshots) {
        char name[64];
        for (std::size_t g = 0; g < gates.size(); ++g) {
            auto layout = layout_for(net, *gates[g]);
            std::string suffix = gates.size() > 1 ? "_layer" + std::to_string(g) : "";
            std::snprintf(name, sizeof(name), "frames/epoch_%04zu%s", snap.epoch, suffix.c_str());
            out.write(std::string(name) + ".csv", bsf::snapshot_csv(snap.weights[g], layout));
            out.write(std::string(name) + ".pgm", bsf::render_frame(snap.weights[g], layout));
        }
    }
}

void write_report(OutputSet& out, const bsf::RunReport& rep) {
    out.write("report.json", bsf::report_to_json(rep).dump(2) + "\n");
}

void write_model(OutputSet& out, const bsf::Network& net) {
    out.write("model.json", net.to_json().dump(2) + "\n");
}

std::string dataset_csv(const bsf::Dataset& d, const std::string& label_col) {
    std::ostringstream os;
    os.precision(17);
    for (std::size_t j = 0; j < d.n_features(); ++j)
        os << (d.feature_names.empty() ? "f" + std::to_string(j) : d.feature_names[j]) << ",";
    os << label_col << "\n";
    for (std::size_t i = 0; i < d.n_samples(); ++i) {
        for (std::size_t j = 0; j < d.n_features(); ++j) os << d.features.at2(i, j) << ",";
        os << d.labels[i] << "\n";
    }
    return os.str();
}

bsf::Network build_for(const bsf::Dataset& d, const CommonOpts& o) {
    const bool input_gate = o.bsf == "input";
    if (is_image_source(o)) {
        const auto& s = d.features.shape();
        return bsf::build_cnn(s[1], s[2], s[3], d.n_classes, input_gate, o.bsf == "channel",
                              o.l1);
    }
    return bsf::build_mlp(d.n_features(), d.n_classes, input_gate, o.bsf == "hidden", o.l1);
}

int cmd_train(const CommonOpts& o) {
    bsf::Dataset data = load_data(o);
    if (!is_image_source(o)) data = bsf::standardize(data);
    bsf::Network net = build_for(data, o);
    OutputSet out(o.out);
    bsf::RunReport rep = bsf::train(net, data, make_config(o));
    bsf::RngStream eval_rng(o.seed, 99);
    const double train_acc = bsf::evaluate_accuracy(net, data, eval_rng);
    rep.outcome = {{"command", "train"},
                   {"seed", o.seed},
                   {"epochs_run", rep.history.size()},
                   {"train_accuracy", train_acc}};
    write_report(out, rep);
    write_model(out, net);
    export_snapshot_frames(out, net, rep);
    out.commit();
    std::printf("train: %zu epochs, final loss %.6f, train accuracy %.4f\n",
                rep.history.size(), rep.history.back().train_loss, train_acc);
    return 0;
}

int cmd_cv(const CommonOpts& o) {
    bsf::Dataset data = load_data(o);
    if (is_image_source(o))
        throw CLI::ValidationError("cv supports tabular (CSV) datasets only");
    bsf::TrainConfig cfg = make_config(o);
    auto result = bsf::kfold_cv(
        data, o.folds, [&] { return bsf::build_mlp(data.n_features(), data.n_classes); }, cfg);
    OutputSet out(o.out);
    bsf::RunReport rep;
    rep.outcome = {{"command", "cv"},
                   {"seed", o.seed},
                   {"folds", o.folds},
                   {"stratified", result.stratified},
                   {"fold_val_accuracy", result.fold_val_accuracy},
                   {"fold_train_accuracy", result.fold_train_accuracy},
                   {"mean_val_accuracy", result.mean_val()},
                   {"mean_train_accuracy", result.mean_train()}};
    write_report(out, rep);
    out.commit();
    std::printf("cv: %zu folds, mean train %.4f, mean validation %.4f\n", o.folds,
                result.mean_train(), result.mean_val());
    return 0;
}

int cmd_select_features(const CommonOpts& o) {
    bsf::Dataset data = load_data(o);
    if (is_image_source(o))
        throw CLI::ValidationError("select-features supports tabular (CSV) datasets only");
    auto thr = bsf::PruneThreshold::parse(o.threshold);
    bsf::TrainConfig cfg = make_config(o);
    auto sel = bsf::select_features(data, cfg, thr, o.folds);
    OutputSet out(o.out);
    write_report(out, sel.report);
    out.write("truncated.csv", dataset_csv(sel.truncated, o.labels_col));
    out.commit();
    std::printf("select-features: kept %zu of %zu features\n", sel.indices.size(),
                data.n_features());
    std::printf("  %-32s  gate weight\n", "feature");
    for (auto i : sel.indices)
        std::printf("  %-32s  %.4f\n",
                    data.feature_names.empty() ? std::to_string(i).c_str()
                                               : data.feature_names[i].c_str(),
                    sel.report.outcome["gate_weights"][i].get<double>());
    std::printf("  CV validation accuracy: original %.4f, truncated %.4f\n",
                sel.cv_original.mean_val(), sel.cv_truncated.mean_val());
    return 0;
}

int cmd_prune_neurons(const CommonOpts& o) {
    bsf::Dataset data = load_data(o);
    if (is_image_source(o))
        throw CLI::ValidationError("prune-neurons supports tabular (CSV) datasets only");
    data = bsf::standardize(data);
    auto thr = bsf::PruneThreshold::parse(o.threshold);
    bsf::TrainConfig cfg = make_config(o);
    if (cfg.l1_coef <= 0.0) throw CLI::ValidationError("prune-neurons requires --l1 > 0");

    bsf::Network gated =
        bsf::build_mlp(data.n_features(), data.n_classes, false, true, cfg.l1_coef);
    bsf::RunReport rep = bsf::train(gated, data, cfg);
    auto pruned = bsf::prune_neurons(gated, thr);

    // reset the shape-optimized model and retrain it from scratch (CV)
    bsf::TrainConfig retrain_cfg = cfg;
    retrain_cfg.l1_coef = 0.0;
    auto cv = bsf::kfold_cv(
        data, o.folds, [&] { return pruned.network.clone(); }, retrain_cfg);
    bsf::Network final_net = pruned.network.clone();
    bsf::train(final_net, data, retrain_cfg);

    OutputSet out(o.out);
    rep.outcome = {{"command", "prune-neurons"},
                   {"seed", o.seed},
                   {"threshold", thr.str()},
                   {"units_before", pruned.counts.units_before},
                   {"units_after", pruned.counts.units_after},
                   {"weights_before", pruned.counts.weights_before},
                   {"weights_after", pruned.counts.weights_after},
                   {"cv_val_accuracy_pruned", cv.mean_val()},
                   {"cv_train_accuracy_pruned", cv.mean_train()}};
    write_report(out, rep);
    write_model(out, final_net);
    export_snapshot_frames(out, gated, rep);
    out.commit();
    std::printf("prune-neurons: units %zu -> %zu, weights %zu -> %zu\n",
                pruned.counts.units_before, pruned.counts.units_after,
                pruned.counts.weights_before, pruned.counts.weights_after);
    std::printf("  retrained CV validation accuracy %.4f\n", cv.mean_val());
    return 0;
}

int cmd_prune_kernels(const CommonOpts& o, std::size_t fine_tune_epochs) {
    bsf::Dataset data = load_data(o);
    if (!is_image_source(o))
        throw CLI::ValidationError("prune-kernels requires an IDX image dataset");
    auto thr = bsf::PruneThreshold::parse(o.threshold);
    bsf::TrainConfig cfg = make_config(o);
    if (cfg.l1_coef <= 0.0) throw CLI::ValidationError("prune-kernels requires --l1 > 0");

    const auto& s = data.features.shape();
    bsf::Network gated =
        bsf::build_cnn(s[1], s[2], s[3], data.n_classes, false, true, cfg.l1_coef);
    bsf::RunReport rep = bsf::train(gated, data, cfg);
    auto pruned = bsf::prune_kernels(gated, thr);

    bsf::TrainConfig ft_cfg = cfg;
    ft_cfg.l1_coef = 0.0;
    ft_cfg.max_epochs = fine_tune_epochs;
    bsf::fine_tune(pruned.network, data, ft_cfg);

    bsf::RngStream eval_rng(o.seed, 99);
    const double acc = bsf::evaluate_accuracy(pruned.network, data, eval_rng);

    OutputSet out(o.out);
    const auto model_json = pruned.network.to_json().dump(2) + "\n";
    rep.outcome = {{"command", "prune-kernels"},
                   {"seed", o.seed},
                   {"threshold", thr.str()},
                   {"kernels_before", pruned.counts.units_before},
                   {"kernels_after", pruned.counts.units_after},
                   {"weights_before", pruned.counts.weights_before},
                   {"weights_after", pruned.counts.weights_after},
                   {"model_bytes_after", model_json.size()},
                   {"train_accuracy_pruned", acc}};
    write_report(out, rep);
    out.write("model.json", model_json);
    export_snapshot_frames(out, gated, rep);
    out.commit();
    std::printf("prune-kernels: kernels %zu -> %zu, weights %zu -> %zu, accuracy %.4f\n",
                pruned.counts.units_before, pruned.counts.units_after,
                pruned.counts.weights_before, pruned.counts.weights_after, acc);
    return 0;
}

int cmd_export_frames(const CommonOpts& o, const std::string& report_path) {
    std::ifstream mf(o.model);
    if (!mf) throw std::runtime_error("cannot open model file " + o.model);
    bsf::Network net = bsf::Network::from_json(nlohmann::json::parse(mf));
    auto gates = net.bsf_layers();
    if (gates.empty()) throw std::runtime_error("model has no gate layers to render");

    OutputSet out(o.out);
    std::size_t frames = 0;
    if (!report_path.empty()) {
        std::ifstream rf(report_path);
        if (!rf) throw std::runtime_error("cannot open report file " + report_path);
        auto rj = nlohmann::json::parse(rf);
        bsf::RunReport rep;
        for (const auto& s : rj.at("bsf_snapshots"))
            rep.bsf_snapshots.push_back(
                {s.at("epoch").get<std::size_t>(),
                 s.at("weights").get<std::vector<std::vector<double>>>()});
        export_snapshot_frames(out, net, rep);
        frames = rep.bsf_snapshots.size();
    } else {
        bsf::RunReport rep;
        bsf::BsfSnapshot snap{0, {}};
        for (auto* g : gates) snap.weights.push_back(g->weights().vec());
        rep.bsf_snapshots.push_back(snap);
        export_snapshot_frames(out, net, rep);
        frames = 1;
    }
    out.commit();
    std::printf("export-frames: wrote %zu frame(s) for %zu gate layer(s)\n", frames,
                gates.size());
    return 0;
}

int cmd_inspect_model(const CommonOpts& o) {
    std::ifstream mf(o.model);
    if (!mf) throw std::runtime_error("cannot open model file " + o.model);
    bsf::Network net = bsf::Network::from_json(nlohmann::json::parse(mf));
    auto shape = net.input_shape();
    std::printf("input shape: %s\n", bsf::Tensor::shape_str(shape).c_str());
    std::size_t total = 0;
    for (std::size_t i = 0; i < net.depth(); ++i) {
        auto& l = net.layer(i);
        shape = l.output_shape(shape);
        std::size_t nparam = 0;
        for (auto* p : l.params()) nparam += p->size();
        total += nparam;
        std::printf("  %2zu  %-12s out %-12s params %zu\n", i, l.kind().c_str(),
                    bsf::Tensor::shape_str(shape).c_str(), nparam);
    }
    std::printf("total parameters: %zu\n", total);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Binary stochastic filtering: training, feature selection and pruning"};
    app.require_subcommand(1);
    CommonOpts o;
    std::size_t fine_tune_epochs = 20;
    std::string report_path;

    auto* train = app.add_subcommand("train", "train a classifier, optionally with gate layers");
    add_data_flags(train, o);
    add_train_flags(train, o);
    train->add_option("--bsf", o.bsf, "gate placement: none|input|hidden|channel (default none)");

    auto* cv = app.add_subcommand("cv", "k-fold cross-validation of the plain classifier");
    add_data_flags(cv, o);
    add_train_flags(cv, o);
    cv->add_option("--folds", o.folds, "number of folds (default 10)");

    auto* sel = app.add_subcommand("select-features",
                                   "L1-gated feature selection with CV comparison");
    add_data_flags(sel, o);
    add_train_flags(sel, o);
    sel->add_option("--threshold", o.threshold,
                    "keep rule abs:<v>|pct:<p>|topk:<k> (default abs:0.5)");
    sel->add_option("--folds", o.folds, "number of folds (default 10)");

    auto* pn = app.add_subcommand("prune-neurons", "gate-driven hidden unit pruning + retrain");
    add_data_flags(pn, o);
    add_train_flags(pn, o);
    pn->add_option("--threshold", o.threshold,
                   "keep rule abs:<v>|pct:<p>|topk:<k> (default abs:0.5)");
    pn->add_option("--folds", o.folds, "number of folds (default 10)");

    auto* pk = app.add_subcommand("prune-kernels",
                                  "gate-driven convolution channel pruning + fine-tune");
    add_data_flags(pk, o);
    add_train_flags(pk, o);
    pk->add_option("--threshold", o.threshold,
                   "keep rule abs:<v>|pct:<p>|topk:<k> (default abs:0.5)");
    pk->add_option("--fine-tune-epochs", fine_tune_epochs,
                   "fine-tuning epochs at alpha/10 (default 20)");

    auto* ef = app.add_subcommand("export-frames", "render gate weights as PGM/CSV frames");
    ef->add_option("--model", o.model, "model.json path")->required();
    ef->add_option("--report", report_path, "report.json with per-epoch snapshots (optional)");
    ef->add_option("--out", o.out, "output directory (default ./out)");

    auto* im = app.add_subcommand("inspect-model", "print layer/parameter summary");
    im->add_option("--model", o.model, "model.json path")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (train->parsed()) return cmd_train(o);
        if (cv->parsed()) return cmd_cv(o);
        if (sel->parsed()) return cmd_select_features(o);
        if (pn->parsed()) return cmd_prune_neurons(o);
        if (pk->parsed()) return cmd_prune_kernels(o, fine_tune_epochs);
        if (ef->parsed()) return cmd_export_frames(o, report_path);
        if (im->parsed()) return cmd_inspect_model(o);
    } catch (const CLI::ValidationError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}

#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <vector>

#include "bsf/dataset.hpp"
#include "bsf/metrics.hpp"
#include "bsf/network.hpp"
#include "bsf/optim.hpp"

namespace bsf {

struct TrainConfig {
    std::size_t max_epochs = 500;
    std::size_t patience = 20;
    double min_delta = 1e-5;
    std::size_t batch_size = 32;
    AdamConfig adam;
    double l1_coef = 0.0;  // picked up by builders when gate layers are requested
    std::uint64_t seed = 1;
    std::size_t snapshot_every = 1;
    bool reinit = true;  // false continues training an already-fitted network

    void validate() const {
        if (max_epochs < 1 || patience < 1 || snapshot_every < 1 || batch_size < 1)
            throw std::invalid_argument("TrainConfig: counts must be >= 1");
        adam.validate();
    }
};

struct EpochStats {
    std::size_t epoch;
    double train_loss;
    double train_accuracy;
    double val_accuracy;  // NaN when no validation split is attached
};

struct BsfSnapshot {
    std::size_t epoch;
    std::vector<std::vector<double>> weights;  // one vector per gate layer
};

struct RunReport {
    std::vector<EpochStats> history;
    std::vector<BsfSnapshot> bsf_snapshots;
    nlohmann::json outcome;

    double final_train_accuracy() const {
        return history.empty() ? 0.0 : history.back().train_accuracy;
    }
};

namespace detail {

// rng stream labels, one purpose per label
inline constexpr std::uint64_t kStreamInit = 1;
inline constexpr std::uint64_t kStreamShuffle = 2;
inline constexpr std::uint64_t kStreamForward = 3;
inline constexpr std::uint64_t kStreamFolds = 4;

inline Tensor batch_rows(const Tensor& x, const std::vector<std::size_t>& order,
                         std::size_t begin, std::size_t end) {
    auto shape = x.shape();
    shape[0] = end - begin;
    std::size_t per = 1;
    for (std::size_t i = 1; i < x.rank(); ++i) per *= x.dim(i);
    Tensor out(shape);
    for (std::size_t i = begin; i < end; ++i) {
        const double* src = x.data() + order[i] * per;
        std::copy(src, src + per, out.data() + (i - begin) * per);
    }
    return out;
}

}  // namespace detail

/// Eval-mode accuracy computed in chunks to bound layer cache memory.
inline double evaluate_accuracy(Network& net, const Dataset& data, RngStream& rng,
                                std::size_t batch = 256) {
    const std::size_t n = data.n_samples();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::size_t hits = 0;
    for (std::size_t start = 0; start < n; start += batch) {
        const std::size_t end = std::min(n, start + batch);
        Tensor xb = detail::batch_rows(data.features, order, start, end);
        Tensor probs = net.forward(xb, Mode::eval, rng);
        for (std::size_t i = 0; i < probs.dim(0); ++i) {
            std::size_t best = 0;
            for (std::size_t j = 1; j < probs.dim(1); ++j)
                if (probs.at2(i, j) > probs.at2(i, best)) best = j;
            if (static_cast<int>(best) == data.labels[start + i]) ++hits;
        }
    }
    return static_cast<double>(hits) / static_cast<double>(n);
}

/// Mini-batch Adam training with shuffling, L1-penalized gate weights clamped
/// into [0,1] after every step, and early stopping on the training loss.
/// Gate-weight snapshots are recorded every cfg.snapshot_every epochs.
inline RunReport train(Network& net, const Dataset& data, const TrainConfig& cfg,
                       const Dataset* validation = nullptr) {
    cfg.validate();
    if (data.n_samples() == 0) throw std::invalid_argument("train: empty dataset");

    RngStream root(cfg.seed);
    RngStream init_rng = root.derive(detail::kStreamInit);
    RngStream shuffle_rng = root.derive(detail::kStreamShuffle);
    RngStream fwd_rng = root.derive(detail::kStreamForward);

    if (cfg.reinit) net.init(init_rng);
    else net.validate();

    Adam opt(cfg.adam);
    auto gate_layers = net.bsf_layers();
    const Tensor labels = one_hot(data.labels, data.n_classes);
    const std::size_t n = data.n_samples();

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);

    RunReport report;
    double best_loss = std::numeric_limits<double>::infinity();
    std::size_t stale = 0;

    auto snapshot = [&](std::size_t epoch) {
        if (gate_layers.empty()) return;
        BsfSnapshot snap{epoch, {}};
        for (auto* g : gate_layers) snap.weights.push_back(g->weights().vec());
        report.bsf_snapshots.push_back(std::move(snap));
    };

    for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        shuffle(order, shuffle_rng);
        double loss_sum = 0.0;
        std::size_t hits = 0;
        for (std::size_t start = 0; start < n; start += cfg.batch_size) {
            const std::size_t end = std::min(n, start + cfg.batch_size);
            Tensor xb = detail::batch_rows(data.features, order, start, end);
            Tensor yb = detail::batch_rows(labels, order, start, end);

            Tensor probs = net.forward(xb, Mode::train, fwd_rng);
            auto [loss, dprobs] = loss_and_grad(probs, yb);
            net.backward(dprobs);
            opt.step(net.params(), net.grads());
            for (auto* g : gate_layers) g->clamp_weights();

            loss_sum += loss * static_cast<double>(end - start);
            for (std::size_t i = 0; i < probs.dim(0); ++i) {
                std::size_t best = 0;
                for (std::size_t j = 1; j < probs.dim(1); ++j)
                    if (probs.at2(i, j) > probs.at2(i, best)) best = j;
                if (static_cast<int>(best) == data.labels[order[start + i]]) ++hits;
            }
        }
        double epoch_loss = loss_sum / static_cast<double>(n);
        for (auto* g : gate_layers)
            epoch_loss += l1_term(g->weights(), g->l1_coef()).first;
        if (!std::isfinite(epoch_loss))
            throw std::runtime_error("train: loss diverged at epoch " + std::to_string(epoch));

        double val_acc = std::numeric_limits<double>::quiet_NaN();
        if (validation) val_acc = evaluate_accuracy(net, *validation, fwd_rng);
        report.history.push_back(
            {epoch, epoch_loss, static_cast<double>(hits) / static_cast<double>(n), val_acc});
        if (epoch % cfg.snapshot_every == 0) snapshot(epoch);

        if (epoch_loss < best_loss - cfg.min_delta) {
            best_loss = epoch_loss;
            stale = 0;
        } else if (++stale >= cfg.patience) {
            break;
        }
    }
    if (report.bsf_snapshots.empty() ||
        report.bsf_snapshots.back().epoch != report.history.back().epoch)
        snapshot(report.history.back().epoch);
    return report;
}

/// Continue training a fitted network at a tenth of the learning rate.
inline RunReport fine_tune(Network& net, const Dataset& data, TrainConfig cfg) {
    cfg.reinit = false;
    cfg.adam.alpha /= 10.0;
    if (cfg.max_epochs == 0) {
        RunReport r;
        r.outcome = {{"note", "fine-tune skipped, zero epochs"}};
        return r;
    }
    return train(net, data, cfg);
}

struct CvResult {
    std::vector<double> fold_train_accuracy;
    std::vector<double> fold_val_accuracy;
    bool stratified = true;

    double mean_train() const {
        double s = 0.0;
        for (double v : fold_train_accuracy) s += v;
        return s / static_cast<double>(fold_train_accuracy.size());
    }
    double mean_val() const {
        double s = 0.0;
        for (double v : fold_val_accuracy) s += v;
        return s / static_cast<double>(fold_val_accuracy.size());
    }
};

/// Stratified fold assignment: per-class shuffle, then round-robin deal.
/// Falls back to unstratified when some class has fewer members than k.
inline std::vector<std::vector<std::size_t>> make_folds(const Dataset& data, std::size_t k,
                                                        RngStream& rng, bool* stratified_out) {
    std::vector<std::size_t> counts(data.n_classes, 0);
    for (int l : data.labels) ++counts[l];
    bool stratified = true;
    for (auto c : counts)
        if (c < k) stratified = false;
    if (stratified_out) *stratified_out = stratified;

    std::vector<std::vector<std::size_t>> folds(k);
    if (stratified) {
        std::vector<std::vector<std::size_t>> by_class(data.n_classes);
        for (std::size_t i = 0; i < data.n_samples(); ++i) by_class[data.labels[i]].push_back(i);
        std::size_t next = 0;
        for (auto& group : by_class) {
            shuffle(group, rng);
            for (auto idx : group) folds[next++ % k].push_back(idx);
        }
    } else {
        std::vector<std::size_t> all(data.n_samples());
        std::iota(all.begin(), all.end(), 0);
        shuffle(all, rng);
        for (std::size_t i = 0; i < all.size(); ++i) folds[i % k].push_back(all[i]);
    }
    return folds;
}

/// k-fold cross-validation: a fresh network per fold, training-fold
/// standardization statistics applied to the held-out fold.
inline CvResult kfold_cv(const Dataset& data, std::size_t k,
                         const std::function<Network()>& builder, const TrainConfig& cfg) {
    if (k < 2) throw std::invalid_argument("kfold_cv: k must be >= 2");
    if (data.n_samples() < k) throw std::invalid_argument("kfold_cv: dataset smaller than k");
    RngStream fold_rng = RngStream(cfg.seed).derive(detail::kStreamFolds);
    CvResult result;
    auto folds = make_folds(data, k, fold_rng, &result.stratified);

    const bool tabular = data.features.rank() == 2;
    for (std::size_t f = 0; f < k; ++f) {
        std::vector<std::size_t> train_idx;
        for (std::size_t g = 0; g < k; ++g)
            if (g != f) train_idx.insert(train_idx.end(), folds[g].begin(), folds[g].end());
        Dataset train_set = data.subset(train_idx);
        Dataset val_set = data.subset(folds[f]);
        if (tabular) {
            train_set = standardize(train_set);
            val_set = apply_standardization(val_set, train_set.mean, train_set.stddev);
        }
        Network net = builder();
        TrainConfig fold_cfg = cfg;
        fold_cfg.seed = cfg.seed ^ (0x9e3779b97f4a7c15ULL * (f + 1));
        RunReport rep = train(net, train_set, fold_cfg);
        RngStream eval_rng(fold_cfg.seed, 99);
        result.fold_train_accuracy.push_back(rep.final_train_accuracy());
        result.fold_val_accuracy.push_back(evaluate_accuracy(net, val_set, eval_rng));
    }
    return result;
}

}  // namespace bsf

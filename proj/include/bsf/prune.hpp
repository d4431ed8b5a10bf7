#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "bsf/builders.hpp"
#include "bsf/train.hpp"

namespace bsf {

/// Unit-keeping rule: absolute weight floor, percentile cut, or top-k.
struct PruneThreshold {
    enum class Kind { absolute, percentile, top_k };
    Kind kind = Kind::absolute;
    double value = 0.5;

    static PruneThreshold absolute(double w_min) {
        if (w_min < 0.0 || w_min > 1.0)
            throw std::invalid_argument("threshold: w_min must be in [0,1]");
        return {Kind::absolute, w_min};
    }
    static PruneThreshold percentile(double p) {
        if (p <= 0.0 || p >= 100.0)
            throw std::invalid_argument("threshold: percentile must be in (0,100)");
        return {Kind::percentile, p};
    }
    static PruneThreshold top_k(std::size_t k) {
        if (k < 1) throw std::invalid_argument("threshold: k must be >= 1");
        return {Kind::top_k, static_cast<double>(k)};
    }

    /// Parse "abs:<v>", "pct:<p>" or "topk:<k>".
    static PruneThreshold parse(const std::string& s) {
        auto colon = s.find(':');
        if (colon == std::string::npos)
            throw std::invalid_argument("threshold: expected abs:<v>|pct:<p>|topk:<k>, got " + s);
        const std::string kind = s.substr(0, colon);
        const std::string val = s.substr(colon + 1);
        if (kind == "abs") return absolute(std::stod(val));
        if (kind == "pct") return percentile(std::stod(val));
        if (kind == "topk") return top_k(std::stoul(val));
        throw std::invalid_argument("threshold: unknown kind '" + kind + "'");
    }

    std::string str() const {
        switch (kind) {
            case Kind::absolute: return "abs:" + std::to_string(value);
            case Kind::percentile: return "pct:" + std::to_string(value);
            default: return "topk:" + std::to_string(static_cast<std::size_t>(value));
        }
    }
};

/// Indices of units kept by the threshold, ascending. Ranking is descending
/// by weight with ties broken by ascending index.
inline std::vector<std::size_t> keep_indices(const std::vector<double>& w,
                                             const PruneThreshold& thr) {
    const std::size_t n = w.size();
    std::vector<std::size_t> kept;
    if (thr.kind == PruneThreshold::Kind::absolute) {
        for (std::size_t i = 0; i < n; ++i)
            if (w[i] >= thr.value) kept.push_back(i);
    } else {
        std::size_t count = thr.kind == PruneThreshold::Kind::percentile
                                ? percentile_keep_count(n, thr.value)
                                : std::min(n, static_cast<std::size_t>(thr.value));
        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return w[a] > w[b]; });
        kept.assign(order.begin(), order.begin() + count);
        std::sort(kept.begin(), kept.end());
    }
    return kept;
}

struct PruneCounts {
    std::size_t units_before = 0, units_after = 0;
    std::size_t weights_before = 0, weights_after = 0;
};

struct PruneResult {
    Network network;  // gate layers stripped; surviving weights carried over
    PruneCounts counts;
};

namespace detail {

inline Tensor slice_dense_weights(Tensor& w, const std::vector<std::size_t>& rows,
                                  const std::vector<std::size_t>& cols) {
    Tensor out({rows.size(), cols.size()});
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < cols.size(); ++j)
            out.at2(i, j) = w.at2(rows[i], cols[j]);
    return out;
}

inline std::vector<std::size_t> all_indices(std::size_t n) {
    std::vector<std::size_t> v(n);
    std::iota(v.begin(), v.end(), 0);
    return v;
}

// The element gate directly after layer i (skipping activations), if any.
inline BsfLayer* following_gate(Network& net, std::size_t i, BsfLayer::Gate gate) {
    for (std::size_t j = i + 1; j < net.depth(); ++j) {
        if (auto* b = dynamic_cast<BsfLayer*>(&net.layer(j)))
            return b->gate() == gate ? b : nullptr;
        if (dynamic_cast<Activation*>(&net.layer(j))) continue;
        return nullptr;
    }
    return nullptr;
}

}  // namespace detail

/// Delete hidden units whose gate weight falls below the threshold: the
/// unit's outgoing weight column and bias go, as do the matching incoming
/// rows of the next dense layer. Gate layers are stripped. Surviving weights
/// are carried over so the pruned forward can be checked against the masked
/// original; retraining with reinit then resets them.
inline PruneResult prune_neurons(Network& net, const PruneThreshold& thr) {
    PruneResult result{Network(net.input_shape()), {}};
    result.counts.weights_before = net.param_count();

    std::vector<std::size_t> incoming;  // empty means "all"
    for (std::size_t i = 0; i < net.depth(); ++i) {
        Layer& l = net.layer(i);
        if (auto* bsf = dynamic_cast<BsfLayer*>(&l)) {
            if (bsf->gate() != BsfLayer::Gate::element)
                throw std::invalid_argument("prune_neurons: channel gate found; use prune_kernels");
            continue;  // consumed by the dense layer it follows
        }
        if (auto* d = dynamic_cast<Dense*>(&l)) {
            auto rows = incoming.empty() ? detail::all_indices(d->in_width()) : incoming;
            std::vector<std::size_t> cols;
            if (auto* gate = detail::following_gate(net, i, BsfLayer::Gate::element)) {
                result.counts.units_before += gate->weights().size();
                cols = keep_indices(gate->weights().vec(), thr);
                if (cols.empty())
                    throw std::runtime_error(
                        "prune_neurons: layer " + std::to_string(i) +
                        " would lose all units; use a weaker threshold");
                result.counts.units_after += cols.size();
            } else {
                cols = detail::all_indices(d->out_width());
            }
            auto nd = std::make_unique<Dense>(rows.size(), cols.size());
            nd->weights() = detail::slice_dense_weights(d->weights(), rows, cols);
            for (std::size_t j = 0; j < cols.size(); ++j) nd->bias()[j] = d->bias()[cols[j]];
            result.network.add(std::move(nd));
            incoming = cols.size() == d->out_width() ? std::vector<std::size_t>{} : cols;
        } else if (auto* a = dynamic_cast<Activation*>(&l)) {
            result.network.add(std::make_unique<Activation>(a->act()));
        } else if (auto* dr = dynamic_cast<Dropout*>(&l)) {
            result.network.add(std::make_unique<Dropout>(dr->p()));
        } else {
            throw std::invalid_argument("prune_neurons: unsupported layer " + l.kind());
        }
    }
    result.network.validate();
    result.counts.weights_after = result.network.param_count();
    return result;
}

/// Delete convolution output channels gated below the threshold, with the
/// matching input-channel slices of the next convolution and the matching
/// flattened rows of the first dense layer. Surviving weights are kept for
/// fine-tuning.
inline PruneResult prune_kernels(Network& net, const PruneThreshold& thr) {
    PruneResult result{Network(net.input_shape()), {}};
    result.counts.weights_before = net.param_count();

    auto shape = net.input_shape();  // per-sample shape entering the current layer
    std::vector<std::size_t> channel_keep;  // empty means "all"
    std::vector<std::size_t> flat_keep;     // dense rows surviving a pruned flatten
    for (std::size_t i = 0; i < net.depth(); ++i) {
        Layer& l = net.layer(i);
        auto out_shape = l.output_shape(shape);
        if (auto* bsf = dynamic_cast<BsfLayer*>(&l)) {
            if (bsf->gate() != BsfLayer::Gate::channel)
                throw std::invalid_argument("prune_kernels: element gate found; use prune_neurons");
            shape = out_shape;
            continue;
        }
        if (auto* c = dynamic_cast<Conv2D*>(&l)) {
            auto in_keep =
                channel_keep.empty() ? detail::all_indices(c->in_channels()) : channel_keep;
            std::vector<std::size_t> out_keep;
            if (auto* gate = detail::following_gate(net, i, BsfLayer::Gate::channel)) {
                result.counts.units_before += gate->weights().size();
                out_keep = keep_indices(gate->weights().vec(), thr);
                if (out_keep.empty())
                    throw std::runtime_error(
                        "prune_kernels: layer " + std::to_string(i) +
                        " would lose all kernels; use a weaker threshold");
                result.counts.units_after += out_keep.size();
            } else {
                out_keep = detail::all_indices(c->n_kernels());
            }
            auto nc = std::make_unique<Conv2D>(in_keep.size(), out_keep.size());
            const std::size_t kk = Conv2D::kKernel * Conv2D::kKernel;
            for (std::size_t k = 0; k < out_keep.size(); ++k) {
                for (std::size_t ch = 0; ch < in_keep.size(); ++ch) {
                    const double* src =
                        c->kernels().data() + (out_keep[k] * c->in_channels() + in_keep[ch]) * kk;
                    double* dst = nc->kernels().data() + (k * in_keep.size() + ch) * kk;
                    std::copy(src, src + kk, dst);
                }
                nc->bias()[k] = c->bias()[out_keep[k]];
            }
            result.network.add(std::move(nc));
            channel_keep = out_keep.size() == c->n_kernels() ? std::vector<std::size_t>{}
                                                             : out_keep;
        } else if (auto* d = dynamic_cast<Dense*>(&l)) {
            auto rows = flat_keep.empty() ? detail::all_indices(d->in_width()) : flat_keep;
            flat_keep.clear();
            auto cols = detail::all_indices(d->out_width());
            auto nd = std::make_unique<Dense>(rows.size(), cols.size());
            nd->weights() = detail::slice_dense_weights(d->weights(), rows, cols);
            nd->bias() = d->bias();
            result.network.add(std::move(nd));
        } else if (auto* a = dynamic_cast<Activation*>(&l)) {
            result.network.add(std::make_unique<Activation>(a->act()));
        } else if (auto* dr = dynamic_cast<Dropout*>(&l)) {
            result.network.add(std::make_unique<Dropout>(dr->p()));
        } else if (dynamic_cast<MaxPool2D*>(&l)) {
            result.network.add(std::make_unique<MaxPool2D>());
        } else if (dynamic_cast<Flatten*>(&l)) {
            if (!channel_keep.empty()) {
                // rows of the following dense layer are channel-major blocks
                // of (spatial size) entries each
                const std::size_t per_channel = shape[1] * shape[2];
                for (auto ch : channel_keep)
                    for (std::size_t s = 0; s < per_channel; ++s)
                        flat_keep.push_back(ch * per_channel + s);
                channel_keep.clear();
            }
            result.network.add(std::make_unique<Flatten>());
        } else {
            throw std::invalid_argument("prune_kernels: unsupported layer " + l.kind());
        }
        shape = out_shape;
    }
    result.network.validate();
    result.counts.weights_after = result.network.param_count();
    return result;
}

struct SelectionResult {
    std::vector<std::size_t> indices;
    Dataset truncated;
    RunReport report;
    CvResult cv_original, cv_truncated;
};

/// Feature selection: train an input-gated MLP under L1, rank the gate
/// weights, keep the features passing the threshold, and cross-validate a
/// plain classifier on both the original and the truncated dataset.
inline SelectionResult select_features(const Dataset& data, const TrainConfig& cfg,
                                       const PruneThreshold& thr, std::size_t folds = 10) {
    if (cfg.l1_coef <= 0.0)
        throw std::invalid_argument("select_features: l1_coef must be > 0");
    const std::size_t d = data.n_features();
    const std::size_t n = data.n_classes;

    Dataset std_data = standardize(data);
    Network net = build_mlp(d, n, true, false, cfg.l1_coef);
    SelectionResult result;
    result.report = train(net, std_data, cfg);

    BsfLayer* gate = net.bsf_layers().front();
    result.indices = keep_indices(gate->weights().vec(), thr);
    if (result.indices.empty())
        throw std::runtime_error("select_features: threshold keeps zero features");
    result.truncated = data.select_columns(result.indices);

    TrainConfig cv_cfg = cfg;
    cv_cfg.l1_coef = 0.0;
    result.cv_original = kfold_cv(data, folds, [&] { return build_mlp(d, n); }, cv_cfg);
    result.cv_truncated = kfold_cv(
        result.truncated, folds, [&] { return build_mlp(result.indices.size(), n); }, cv_cfg);

    nlohmann::json names = nlohmann::json::array();
    for (auto i : result.indices)
        names.push_back(data.feature_names.empty() ? std::to_string(i)
                                                   : data.feature_names[i]);
    result.report.outcome = {
        {"selected_indices", result.indices},
        {"selected_features", names},
        {"gate_weights", gate->weights().vec()},
        {"cv_val_accuracy_original", result.cv_original.mean_val()},
        {"cv_val_accuracy_truncated", result.cv_truncated.mean_val()},
        {"cv_train_accuracy_original", result.cv_original.mean_train()},
        {"cv_train_accuracy_truncated", result.cv_truncated.mean_train()}};
    return result;
}

}  // namespace bsf

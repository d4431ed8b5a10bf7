#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "bsf/layers.hpp"

namespace bsf {

inline double sign(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

/// L1 penalty and its subgradient, sign(0) = 0.
inline std::pair<double, Tensor> l1_term(const Tensor& w, double coef) {
    if (coef < 0.0) throw std::invalid_argument("l1_term: coef must be >= 0");
    double penalty = 0.0;
    Tensor sub(w.shape());
    for (std::size_t i = 0; i < w.size(); ++i) {
        penalty += std::abs(w[i]);
        sub[i] = coef * sign(w[i]);
    }
    return {coef * penalty, sub};
}

/// Binary stochastic gate layer. Each unit passes its input unchanged with
/// probability w (sampled fresh per batch sample in train mode) or zeroes it.
/// Gradients use the straight-through rule: unity w.r.t. the input, and the
/// gated input w.r.t. the gate weight. Eval mode scales by the Bernoulli mean.
///
/// Element mode gates one scalar per unit; channel mode gates a whole feature
/// map per unit, the sampled bit broadcast over the spatial positions.
class BsfLayer : public Layer {
public:
    enum class Gate { element, channel };

    BsfLayer(Gate gate, std::size_t n_units, double l1_coef)
        : gate_(gate), w_(Tensor::full({n_units}, 1.0)), dw_({n_units}), l1_coef_(l1_coef) {
        if (l1_coef < 0.0) throw std::invalid_argument("BsfLayer: l1_coef must be >= 0");
    }

    Tensor forward(const Tensor& x, Mode mode, RngStream& rng) override {
        const std::size_t n = w_.size();
        const std::size_t batch = x.dim(0);
        const std::size_t span = gate_span(x.shape());
        x_ = x;
        Tensor y = x;
        mask_ = Tensor::full({batch, n}, 1.0);
        if (mode == Mode::train) {
            for (std::size_t b = 0; b < batch; ++b)
                for (std::size_t u = 0; u < n; ++u) {
                    const double z = rng.uniform();
                    const double bit = z < w_[u] ? 1.0 : 0.0;
                    mask_.at2(b, u) = bit;
                    double* base = y.data() + (b * n + u) * span;
                    if (bit == 0.0)
                        for (std::size_t s = 0; s < span; ++s) base[s] = 0.0;
                }
        } else {
            for (std::size_t b = 0; b < batch; ++b)
                for (std::size_t u = 0; u < n; ++u) {
                    double* base = y.data() + (b * n + u) * span;
                    for (std::size_t s = 0; s < span; ++s) base[s] *= w_[u];
                }
        }
        return y;
    }

    Tensor backward(const Tensor& gy) override {
        check_same_shape(gy, x_, "BsfLayer::backward");
        const std::size_t n = w_.size();
        const std::size_t batch = gy.dim(0);
        const std::size_t span = gate_span(gy.shape());
        dw_ = Tensor({n});
        for (std::size_t b = 0; b < batch; ++b)
            for (std::size_t u = 0; u < n; ++u) {
                const double* g = gy.data() + (b * n + u) * span;
                const double* xv = x_.data() + (b * n + u) * span;
                double acc = 0.0;
                for (std::size_t s = 0; s < span; ++s) acc += g[s] * xv[s];
                dw_[u] += acc;
            }
        if (l1_coef_ > 0.0)
            for (std::size_t u = 0; u < n; ++u) dw_[u] += l1_coef_ * sign(w_[u]);
        return gy;  // straight-through: unity gradient w.r.t. the input
    }

    /// Clamp gate weights into [0, 1]; call after every optimizer update.
    void clamp_weights() {
        for (std::size_t i = 0; i < w_.size(); ++i) w_[i] = std::clamp(w_[i], 0.0, 1.0);
    }

    /// Gate weights ranked descending, ties broken by ascending index.
    std::vector<std::pair<std::size_t, double>> importances() const {
        std::vector<std::pair<std::size_t, double>> r(w_.size());
        for (std::size_t i = 0; i < w_.size(); ++i) r[i] = {i, w_[i]};
        std::stable_sort(r.begin(), r.end(),
                         [](const auto& a, const auto& b) { return a.second > b.second; });
        return r;
    }

    std::vector<std::size_t> output_shape(const std::vector<std::size_t>& in) const override {
        const std::size_t gated = gate_ == Gate::element
                                      ? std::accumulate(in.begin(), in.end(), std::size_t{1},
                                                        std::multiplies<>())
                                      : in.at(0);
        if (gated != w_.size())
            throw std::invalid_argument("BsfLayer: " + std::to_string(w_.size()) +
                                        " gates cannot cover input " + Tensor::shape_str(in));
        return in;
    }

    std::vector<Tensor*> params() override { return {&w_}; }
    std::vector<Tensor*> grads() override { return {&dw_}; }

    Gate gate() const { return gate_; }
    double l1_coef() const { return l1_coef_; }
    Tensor& weights() { return w_; }
    const Tensor& weights() const { return w_; }
    const Tensor& last_mask() const { return mask_; }

    std::string kind() const override {
        return gate_ == Gate::element ? "bsf_element" : "bsf_channel";
    }
    nlohmann::json to_json() const override {
        return {{"kind", kind()},
                {"n", w_.size()},
                {"l1", l1_coef_},
                {"w", detail::tensor_to_json(w_)}};
    }

private:
    // elements covered by one gate: 1 in element mode, h*w in channel mode
    std::size_t gate_span(const std::vector<std::size_t>& shape) const {
        std::size_t per = 1;
        for (std::size_t i = 1; i < shape.size(); ++i) per *= shape[i];
        if (gate_ == Gate::element) {
            if (per != w_.size())
                throw std::invalid_argument("BsfLayer(element): input width " +
                                            std::to_string(per) + " != " +
                                            std::to_string(w_.size()) + " gates");
            return 1;
        }
        if (shape.size() < 2 || shape[1] != w_.size())
            throw std::invalid_argument("BsfLayer(channel): channel count mismatch for " +
                                        Tensor::shape_str(shape));
        return per / w_.size();
    }

    Gate gate_;
    Tensor w_, dw_;
    double l1_coef_;
    Tensor x_, mask_;
};

/// Top entries with weight at or above the p-th percentile (nearest-rank).
inline std::size_t percentile_keep_count(std::size_t n, double p) {
    if (p <= 0.0 || p >= 100.0) throw std::invalid_argument("percentile must be in (0,100)");
    const std::size_t below = static_cast<std::size_t>(std::ceil(p / 100.0 * n));
    return n > below ? n - below : 0;
}

}  // namespace bsf

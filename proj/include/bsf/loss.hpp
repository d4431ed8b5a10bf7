#pragma once

#include <cmath>
#include <stdexcept>
#include <utility>

#include "bsf/tensor.hpp"

namespace bsf {

inline constexpr double kProbClamp = 1e-7;

/// Row-wise softmax with max-shift. Rows sum to 1.
inline Tensor softmax(const Tensor& logits) {
    if (logits.rank() != 2) throw std::invalid_argument("softmax: expected rank-2 logits");
    const std::size_t b = logits.dim(0), n = logits.dim(1);
    Tensor p = logits;
    for (std::size_t i = 0; i < b; ++i) {
        double mx = p.at2(i, 0);
        for (std::size_t j = 1; j < n; ++j) mx = std::max(mx, p.at2(i, j));
        double sum = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            p.at2(i, j) = std::exp(p.at2(i, j) - mx);
            sum += p.at2(i, j);
        }
        for (std::size_t j = 0; j < n; ++j) p.at2(i, j) /= sum;
    }
    return p;
}

/// Two-term cross-entropy E = -sum c ln p + (1-c) ln(1-p), averaged over the
/// batch, probabilities clamped to [eps, 1-eps]. Returns the loss and its
/// gradient w.r.t. probs (zero where the clamp is active).
inline std::pair<double, Tensor> loss_and_grad(const Tensor& probs, const Tensor& onehot) {
    check_same_shape(probs, onehot, "loss_and_grad");
    const std::size_t b = probs.dim(0), n = probs.dim(1);
    for (std::size_t i = 0; i < b; ++i) {
        std::size_t ones = 0;
        for (std::size_t j = 0; j < n; ++j) {
            const double c = onehot.at2(i, j);
            if (c == 1.0) ++ones;
            else if (c != 0.0)
                throw std::invalid_argument("loss_and_grad: labels must be one-hot");
        }
        if (ones != 1) throw std::invalid_argument("loss_and_grad: labels must be one-hot");
    }
    double loss = 0.0;
    Tensor dp(probs.shape());
    const double inv_b = 1.0 / static_cast<double>(b);
    for (std::size_t i = 0; i < b * n; ++i) {
        const double c = onehot[i];
        const double raw = probs[i];
        const double p = std::clamp(raw, kProbClamp, 1.0 - kProbClamp);
        loss -= c * std::log(p) + (1.0 - c) * std::log(1.0 - p);
        if (raw > kProbClamp && raw < 1.0 - kProbClamp)
            dp[i] = (-c / p + (1.0 - c) / (1.0 - p)) * inv_b;
    }
    return {loss * inv_b, dp};
}

/// Gradient w.r.t. logits given softmax output and dL/dprobs.
inline Tensor softmax_backward(const Tensor& probs, const Tensor& dprobs) {
    check_same_shape(probs, dprobs, "softmax_backward");
    const std::size_t b = probs.dim(0), n = probs.dim(1);
    Tensor dz(probs.shape());
    for (std::size_t i = 0; i < b; ++i) {
        double dot = 0.0;
        for (std::size_t j = 0; j < n; ++j) dot += dprobs.at2(i, j) * probs.at2(i, j);
        for (std::size_t j = 0; j < n; ++j)
            dz.at2(i, j) = probs.at2(i, j) * (dprobs.at2(i, j) - dot);
    }
    return dz;
}

}  // namespace bsf

#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "bsf/tensor.hpp"

namespace bsf {

struct AdamConfig {
    double alpha = 0.001;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;

    void validate() const {
        if (alpha <= 0.0 || beta1 < 0.0 || beta1 >= 1.0 || beta2 < 0.0 || beta2 >= 1.0 ||
            epsilon <= 0.0)
            throw std::invalid_argument("AdamConfig: invalid hyperparameters");
    }
};

/// One Adam update on a single parameter tensor. t is the step count after
/// incrementing (t >= 1); bias correction uses it directly.
inline void adam_step(Tensor& param, const Tensor& grad, Tensor& m, Tensor& v,
                      std::int64_t t, const AdamConfig& cfg) {
    check_same_shape(param, grad, "adam_step");
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t));
    for (std::size_t i = 0; i < param.size(); ++i) {
        m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * grad[i];
        v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * grad[i] * grad[i];
        const double mhat = m[i] / bc1;
        const double vhat = v[i] / bc2;
        param[i] -= cfg.alpha * mhat / (std::sqrt(vhat) + cfg.epsilon);
    }
}

/// Moment state for a fixed parameter list; shapes mirror the parameters.
class Adam {
public:
    explicit Adam(AdamConfig cfg = {}) : cfg_(cfg) { cfg_.validate(); }

    void step(const std::vector<Tensor*>& params, const std::vector<Tensor*>& grads) {
        if (params.size() != grads.size())
            throw std::invalid_argument("Adam::step: params/grads length mismatch");
        if (m_.empty()) {
            for (const auto* p : params) {
                m_.emplace_back(p->shape());
                v_.emplace_back(p->shape());
            }
        }
        if (m_.size() != params.size())
            throw std::logic_error("Adam::step: parameter list changed size");
        ++t_;
        for (std::size_t i = 0; i < params.size(); ++i)
            adam_step(*params[i], *grads[i], m_[i], v_[i], t_, cfg_);
    }

    std::int64_t steps() const { return t_; }
    const AdamConfig& config() const { return cfg_; }

private:
    AdamConfig cfg_;
    std::vector<Tensor> m_, v_;
    std::int64_t t_ = 0;
};

}  // namespace bsf

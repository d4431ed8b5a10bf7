#pragma once

#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include "bsf/rng.hpp"
#include "bsf/tensor.hpp"

#include <json.hpp>

namespace bsf {

enum class Mode { train, eval };

/// A layer with a manual forward/backward pair. The forward caches whatever
/// backward needs; backward must follow the matching train-mode forward.
class Layer {
public:
    virtual ~Layer() = default;

    virtual Tensor forward(const Tensor& x, Mode mode, RngStream& rng) = 0;
    virtual Tensor backward(const Tensor& grad_out) = 0;

    /// Per-sample output shape for a per-sample input shape; throws on mismatch.
    virtual std::vector<std::size_t> output_shape(const std::vector<std::size_t>& in) const = 0;

    virtual std::vector<Tensor*> params() { return {}; }
    virtual std::vector<Tensor*> grads() { return {}; }

    virtual void init(RngStream&) {}

    virtual std::string kind() const = 0;
    virtual nlohmann::json to_json() const = 0;
};

namespace detail {

inline void glorot_uniform(Tensor& w, std::size_t fan_in, std::size_t fan_out, RngStream& rng) {
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = rng.uniform(-limit, limit);
}

inline nlohmann::json tensor_to_json(const Tensor& t) {
    return {{"shape", t.shape()}, {"data", t.vec()}};
}

inline Tensor tensor_from_json(const nlohmann::json& j) {
    return Tensor(j.at("shape").get<std::vector<std::size_t>>(),
                  j.at("data").get<std::vector<double>>());
}

}  // namespace detail

/// Fully connected layer: y = x W + b, W is [in x out].
class Dense : public Layer {
public:
    Dense(std::size_t in, std::size_t out)
        : in_(in), out_(out), w_({in, out}), b_({out}), dw_({in, out}), db_({out}) {}

    void init(RngStream& rng) override { detail::glorot_uniform(w_, in_, out_, rng); }

    Tensor forward(const Tensor& x, Mode, RngStream&) override {
        x_ = x;
        Tensor y = matmul(x, w_);
        for (std::size_t i = 0; i < y.dim(0); ++i)
            for (std::size_t j = 0; j < out_; ++j) y.at2(i, j) += b_[j];
        return y;
    }

    Tensor backward(const Tensor& gy) override {
        if (x_.size() == 0) throw std::logic_error("Dense: backward without cached forward");
        dw_ = matmul_at(x_, gy);
        db_ = Tensor({out_});
        for (std::size_t i = 0; i < gy.dim(0); ++i)
            for (std::size_t j = 0; j < out_; ++j) db_[j] += gy.at2(i, j);
        return matmul_bt(gy, w_);
    }

    std::vector<std::size_t> output_shape(const std::vector<std::size_t>& in) const override {
        if (in.size() != 1 || in[0] != in_)
            throw std::invalid_argument("Dense expects input width " + std::to_string(in_) +
                                        ", got " + Tensor::shape_str(in));
        return {out_};
    }

    std::vector<Tensor*> params() override { return {&w_, &b_}; }
    std::vector<Tensor*> grads() override { return {&dw_, &db_}; }

    std::size_t in_width() const { return in_; }
    std::size_t out_width() const { return out_; }
    Tensor& weights() { return w_; }
    Tensor& bias() { return b_; }

    std::string kind() const override { return "dense"; }
    nlohmann::json to_json() const override {
        return {{"kind", "dense"},
                {"in", in_},
                {"out", out_},
                {"w", detail::tensor_to_json(w_)},
                {"b", detail::tensor_to_json(b_)}};
    }

private:
    std::size_t in_, out_;
    Tensor w_, b_, dw_, db_, x_;
};

enum class ActKind { relu, tanh };

class Activation : public Layer {
public:
    explicit Activation(ActKind k) : act_(k) {}

    Tensor forward(const Tensor& x, Mode, RngStream&) override {
        z_ = x;
        if (act_ == ActKind::relu)
            return map(x, [](double v) { return v > 0.0 ? v : 0.0; });
        return map(x, [](double v) { return std::tanh(v); });
    }

    Tensor backward(const Tensor& gy) override {
        check_same_shape(gy, z_, "Activation::backward");
        Tensor gx = gy;
        if (act_ == ActKind::relu) {
            for (std::size_t i = 0; i < gx.size(); ++i)
                if (z_[i] <= 0.0) gx[i] = 0.0;
        } else {
            for (std::size_t i = 0; i < gx.size(); ++i) {
                const double t = std::tanh(z_[i]);
                gx[i] *= 1.0 - t * t;
            }
        }
        return gx;
    }

    std::vector<std::size_t> output_shape(const std::vector<std::size_t>& in) const override {
        return in;
    }

    ActKind act() const { return act_; }
    std::string kind() const override { return act_ == ActKind::relu ? "relu" : "tanh"; }
    nlohmann::json to_json() const override { return {{"kind", kind()}}; }

private:
    ActKind act_;
    Tensor z_;
};

/// Inverted dropout: train-time scaling by 1/(1-p), eval is the identity.
class Dropout : public Layer {
public:
    explicit Dropout(double p) : p_(p) {
        if (p < 0.0 || p >= 1.0) throw std::invalid_argument("Dropout: p must be in [0,1)");
    }

    Tensor forward(const Tensor& x, Mode mode, RngStream& rng) override {
        if (mode == Mode::eval) {
            mask_ = Tensor();
            return x;
        }
        mask_ = Tensor(x.shape());
        Tensor y = x;
        const double scale = 1.0 / (1.0 - p_);
        for (std::size_t i = 0; i < y.size(); ++i) {
            const bool keep = rng.uniform() >= p_;
            mask_[i] = keep ? scale : 0.0;
            y[i] *= mask_[i];
        }
        return y;
    }

    Tensor backward(const Tensor& gy) override {
        if (mask_.size() == 0) return gy;  // eval-mode pass-through
        return mul(gy, mask_);
    }

    std::vector<std::size_t> output_shape(const std::vector<std::size_t>& in) const override {
        return in;
    }

    double p() const { return p_; }
    std::string kind() const override { return "dropout"; }
    nlohmann::json to_json() const override { return {{"kind", "dropout"}, {"p", p_}}; }

private:
    double p_;
    Tensor mask_;
};

/// 3x3 convolution, valid padding, stride 1, via im2col.
class Conv2D : public Layer {
public:
    static constexpr std::size_t kKernel = 3;

    Conv2D(std::size_t in_channels, std::size_t n_kernels)
        : in_c_(in_channels),
          n_k_(n_kernels),
          w_({n_kernels, in_channels, kKernel, kKernel}),
          b_({n_kernels}),
          dw_(w_.shape()),
          db_(b_.shape()) {}

    void init(RngStream& rng) override {
        detail::glorot_uniform(w_, in_c_ * kKernel * kKernel, n_k_ * kKernel * kKernel, rng);
    }

    Tensor forward(const Tensor& x, Mode, RngStream&) override {
        check_input(x.shape());
        x_shape_ = x.shape();
        const std::size_t batch = x.dim(0), h = x.dim(2), w = x.dim(3);
        const std::size_t oh = h - kKernel + 1, ow = w - kKernel + 1;
        const std::size_t patch = in_c_ * kKernel * kKernel;

        cols_ = Tensor({batch, patch, oh * ow});
        Tensor y({batch, n_k_, oh, ow});
        const Tensor wmat = w_.reshaped({n_k_, patch});
        for (std::size_t b = 0; b < batch; ++b) {
            im2col(x.data() + b * in_c_ * h * w, h, w, cols_.data() + b * patch * oh * ow);
            Tensor col({patch, oh * ow},
                       std::vector<double>(cols_.data() + b * patch * oh * ow,
                                           cols_.data() + (b + 1) * patch * oh * ow));
            Tensor yb = matmul(wmat, col);  // [n_k, oh*ow]
            double* out = y.data() + b * n_k_ * oh * ow;
            for (std::size_t k = 0; k < n_k_; ++k)
                for (std::size_t p = 0; p < oh * ow; ++p) out[k * oh * ow + p] = yb[k * oh * ow + p] + b_[k];
        }
        return y;
    }

    Tensor backward(const Tensor& gy) override {
        const std::size_t batch = x_shape_[0], h = x_shape_[2], w = x_shape_[3];
        const std::size_t oh = h - kKernel + 1, ow = w - kKernel + 1;
        const std::size_t patch = in_c_ * kKernel * kKernel;
        const Tensor wmat = w_.reshaped({n_k_, patch});

        dw_ = Tensor(w_.shape());
        db_ = Tensor(b_.shape());
        Tensor dwmat({n_k_, patch});
        Tensor gx(x_shape_);
        for (std::size_t b = 0; b < batch; ++b) {
            Tensor gyb({n_k_, oh * ow},
                       std::vector<double>(gy.data() + b * n_k_ * oh * ow,
                                           gy.data() + (b + 1) * n_k_ * oh * ow));
            Tensor col({patch, oh * ow},
                       std::vector<double>(cols_.data() + b * patch * oh * ow,
                                           cols_.data() + (b + 1) * patch * oh * ow));
            Tensor d = matmul_bt(gyb, col);  // [n_k, patch]
            for (std::size_t i = 0; i < d.size(); ++i) dwmat[i] += d[i];
            for (std::size_t k = 0; k < n_k_; ++k)
                for (std::size_t p = 0; p < oh * ow; ++p) db_[k] += gyb[k * oh * ow + p];
            Tensor dcol = matmul_at(wmat, gyb);  // [patch, oh*ow]
            col2im(dcol.data(), h, w, gx.data() + b * in_c_ * h * w);
        }
        for (std::size_t i = 0; i < dw_.size(); ++i) dw_[i] = dwmat[i];
        return gx;
    }

    std::vector<std::size_t> output_shape(const std::vector<std::size_t>& in) const override {
        if (in.size() != 3 || in[0] != in_c_ || in[1] < kKernel || in[2] < kKernel)
            throw std::invalid_argument("Conv2D expects [" + std::to_string(in_c_) +
                                        " x h>=3 x w>=3], got " + Tensor::shape_str(in));
        return {n_k_, in[1] - kKernel + 1, in[2] - kKernel + 1};
    }

    std::vector<Tensor*> params() override { return {&w_, &b_}; }
    std::vector<Tensor*> grads() override { return {&dw_, &db_}; }

    std::size_t in_channels() const { return in_c_; }
    std::size_t n_kernels() const { return n_k_; }
    Tensor& kernels() { return w_; }
    Tensor& bias() { return b_; }

    std::string kind() const override { return "conv2d"; }
    nlohmann::json to_json() const override {
        return {{"kind", "conv2d"},
                {"in_channels", in_c_},
                {"n_kernels", n_k_},
                {"w", detail::tensor_to_json(w_)},
                {"b", detail::tensor_to_json(b_)}};
    }

private:
    void check_input(const std::vector<std::size_t>& s) const {
        if (s.size() != 4 || s[1] != in_c_ || s[2] < kKernel || s[3] < kKernel)
            throw std::invalid_argument("Conv2D: bad input shape " + Tensor::shape_str(s));
    }

    void im2col(const double* x, std::size_t h, std::size_t w, double* col) const {
        const std::size_t oh = h - kKernel + 1, ow = w - kKernel + 1;
        std::size_t row = 0;
        for (std::size_t c = 0; c < in_c_; ++c)
            for (std::size_t ky = 0; ky < kKernel; ++ky)
                for (std::size_t kx = 0; kx < kKernel; ++kx, ++row) {
                    const double* src = x + c * h * w;
                    double* dst = col + row * oh * ow;
                    for (std::size_t oy = 0; oy < oh; ++oy)
                        for (std::size_t ox = 0; ox < ow; ++ox)
                            dst[oy * ow + ox] = src[(oy + ky) * w + (ox + kx)];
                }
    }

    void col2im(const double* col, std::size_t h, std::size_t w, double* x) const {
        const std::size_t oh = h - kKernel + 1, ow = w - kKernel + 1;
        std::size_t row = 0;
        for (std::size_t c = 0; c < in_c_; ++c)
            for (std::size_t ky = 0; ky < kKernel; ++ky)
                for (std::size_t kx = 0; kx < kKernel; ++kx, ++row) {
                    double* dst = x + c * h * w;
                    const double* src = col + row * oh * ow;
                    for (std::size_t oy = 0; oy < oh; ++oy)
                        for (std::size_t ox = 0; ox < ow; ++ox)
                            dst[(oy + ky) * w + (ox + kx)] += src[oy * ow + ox];
                }
    }

    std::size_t in_c_, n_k_;
    Tensor w_, b_, dw_, db_;
    Tensor cols_;
    std::vector<std::size_t> x_shape_;
};

/// 2x2 max pooling, non-overlapping. Backward routes gradient to the argmax.
class MaxPool2D : public Layer {
public:
    Tensor forward(const Tensor& x, Mode, RngStream&) override {
        if (x.rank() != 4 || x.dim(2) % 2 != 0 || x.dim(3) % 2 != 0)
            throw std::invalid_argument("MaxPool2D: input " + Tensor::shape_str(x.shape()) +
                                        " must be rank-4 with even spatial dims");
        x_shape_ = x.shape();
        const std::size_t b = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
        const std::size_t oh = h / 2, ow = w / 2;
        Tensor y({b, c, oh, ow});
        argmax_.assign(y.size(), 0);
        for (std::size_t n = 0; n < b * c; ++n) {
            const double* src = x.data() + n * h * w;
            double* dst = y.data() + n * oh * ow;
            for (std::size_t oy = 0; oy < oh; ++oy)
                for (std::size_t ox = 0; ox < ow; ++ox) {
                    std::size_t best = (2 * oy) * w + 2 * ox;
                    for (std::size_t dy = 0; dy < 2; ++dy)
                        for (std::size_t dx = 0; dx < 2; ++dx) {
                            const std::size_t idx = (2 * oy + dy) * w + 2 * ox + dx;
                            if (src[idx] > src[best]) best = idx;
                        }
                    dst[oy * ow + ox] = src[best];
                    argmax_[n * oh * ow + oy * ow + ox] = n * h * w + best;
                }
        }
        return y;
    }

    Tensor backward(const Tensor& gy) override {
        Tensor gx(x_shape_);
        for (std::size_t i = 0; i < gy.size(); ++i) gx[argmax_[i]] += gy[i];
        return gx;
    }

    std::vector<std::size_t> output_shape(const std::vector<std::size_t>& in) const override {
        if (in.size() != 3 || in[1] % 2 != 0 || in[2] % 2 != 0)
            throw std::invalid_argument("MaxPool2D expects [c x even x even], got " +
                                        Tensor::shape_str(in));
        return {in[0], in[1] / 2, in[2] / 2};
    }

    std::string kind() const override { return "maxpool2d"; }
    nlohmann::json to_json() const override { return {{"kind", "maxpool2d"}}; }

private:
    std::vector<std::size_t> x_shape_;
    std::vector<std::size_t> argmax_;
};

/// Shape isomorphism [b, c, h, w] -> [b, c*h*w].
class Flatten : public Layer {
public:
    Tensor forward(const Tensor& x, Mode, RngStream&) override {
        x_shape_ = x.shape();
        std::size_t per = 1;
        for (std::size_t i = 1; i < x.rank(); ++i) per *= x.dim(i);
        return x.reshaped({x.dim(0), per});
    }

    Tensor backward(const Tensor& gy) override { return gy.reshaped(x_shape_); }

    std::vector<std::size_t> output_shape(const std::vector<std::size_t>& in) const override {
        std::size_t n = 1;
        for (auto d : in) n *= d;
        return {n};
    }

    std::string kind() const override { return "flatten"; }
    nlohmann::json to_json() const override { return {{"kind", "flatten"}}; }

private:
    std::vector<std::size_t> x_shape_;
};

}  // namespace bsf

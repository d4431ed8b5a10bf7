#pragma once

#include <memory>
#include <string>
#include <vector>

#include "bsf/bsf_layer.hpp"
#include "bsf/layers.hpp"
#include "bsf/loss.hpp"

namespace bsf {

/// Ordered layer stack with a softmax cross-entropy head. forward yields class
/// probabilities; backward expects dL/dprobs and runs the chain in reverse.
class Network {
public:
    explicit Network(std::vector<std::size_t> input_shape)
        : input_shape_(std::move(input_shape)) {}

    Network(Network&&) = default;
    Network& operator=(Network&&) = default;

    Network& add(std::unique_ptr<Layer> layer) {
        layers_.push_back(std::move(layer));
        return *this;
    }

    std::size_t depth() const { return layers_.size(); }
    Layer& layer(std::size_t i) { return *layers_.at(i); }
    const Layer& layer(std::size_t i) const { return *layers_.at(i); }
    std::vector<std::unique_ptr<Layer>>& layers() { return layers_; }
    const std::vector<std::size_t>& input_shape() const { return input_shape_; }

    /// Checks the shape chain, reporting the first offending layer index.
    std::vector<std::size_t> validate() const {
        auto shape = input_shape_;
        for (std::size_t i = 0; i < layers_.size(); ++i) {
            try {
                shape = layers_[i]->output_shape(shape);
            } catch (const std::exception& e) {
                throw std::invalid_argument("layer " + std::to_string(i) + " (" +
                                            layers_[i]->kind() + "): " + e.what());
            }
        }
        return shape;
    }

    void init(RngStream& rng) {
        validate();
        for (auto& l : layers_) l->init(rng);
    }

    /// Class probabilities for a batch. x leading dim is the batch size.
    Tensor forward(const Tensor& x, Mode mode, RngStream& rng) {
        Tensor h = x;
        for (auto& l : layers_) h = l->forward(h, mode, rng);
        probs_ = softmax(h);
        return probs_;
    }

    /// Backward from dL/dprobs through softmax and every layer; fills grads.
    void backward(const Tensor& dprobs) {
        if (probs_.size() == 0) throw std::logic_error("Network::backward before forward");
        Tensor g = softmax_backward(probs_, dprobs);
        for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) g = (*it)->backward(g);
    }

    std::vector<Tensor*> params() {
        std::vector<Tensor*> r;
        for (auto& l : layers_)
            for (auto* p : l->params()) r.push_back(p);
        return r;
    }

    std::vector<Tensor*> grads() {
        std::vector<Tensor*> r;
        for (auto& l : layers_)
            for (auto* g : l->grads()) r.push_back(g);
        return r;
    }

    std::size_t param_count() {
        std::size_t n = 0;
        for (auto* p : params()) n += p->size();
        return n;
    }

    std::vector<BsfLayer*> bsf_layers() {
        std::vector<BsfLayer*> r;
        for (auto& l : layers_)
            if (auto* b = dynamic_cast<BsfLayer*>(l.get())) r.push_back(b);
        return r;
    }

    nlohmann::json to_json() const {
        nlohmann::json layers = nlohmann::json::array();
        for (const auto& l : layers_) layers.push_back(l->to_json());
        return {{"schema_version", 1},
                {"loss", "softmax_cross_entropy"},
                {"input_shape", input_shape_},
                {"layers", layers}};
    }

    static std::unique_ptr<Layer> layer_from_json(const nlohmann::json& j) {
        const std::string kind = j.at("kind");
        if (kind == "dense") {
            auto d = std::make_unique<Dense>(j.at("in").get<std::size_t>(),
                                             j.at("out").get<std::size_t>());
            d->weights() = detail::tensor_from_json(j.at("w"));
            d->bias() = detail::tensor_from_json(j.at("b"));
            return d;
        }
        if (kind == "relu") return std::make_unique<Activation>(ActKind::relu);
        if (kind == "tanh") return std::make_unique<Activation>(ActKind::tanh);
        if (kind == "dropout") return std::make_unique<Dropout>(j.at("p").get<double>());
        if (kind == "conv2d") {
            auto c = std::make_unique<Conv2D>(j.at("in_channels").get<std::size_t>(),
                                              j.at("n_kernels").get<std::size_t>());
            c->kernels() = detail::tensor_from_json(j.at("w"));
            c->bias() = detail::tensor_from_json(j.at("b"));
            return c;
        }
        if (kind == "maxpool2d") return std::make_unique<MaxPool2D>();
        if (kind == "flatten") return std::make_unique<Flatten>();
        if (kind == "bsf_element" || kind == "bsf_channel") {
            auto g = kind == "bsf_element" ? BsfLayer::Gate::element : BsfLayer::Gate::channel;
            auto b = std::make_unique<BsfLayer>(g, j.at("n").get<std::size_t>(),
                                                j.at("l1").get<double>());
            b->weights() = detail::tensor_from_json(j.at("w"));
            return b;
        }
        throw std::invalid_argument("unknown layer kind: " + kind);
    }

    static Network from_json(const nlohmann::json& j) {
        Network net(j.at("input_shape").get<std::vector<std::size_t>>());
        for (const auto& lj : j.at("layers")) net.add(layer_from_json(lj));
        net.validate();
        return net;
    }

    /// Deep copy via the serialized form.
    Network clone() const { return from_json(to_json()); }

private:
    std::vector<std::size_t> input_shape_;
    std::vector<std::unique_ptr<Layer>> layers_;
    Tensor probs_;
};

}  // namespace bsf

#pragma once

#include <memory>

#include "bsf/bsf_layer.hpp"
#include "bsf/network.hpp"

namespace bsf {

/// MLP with layer widths D, D, 2D, D, N, relu hidden activations and a
/// softmax head. Optional gate layers: one over the inputs, or one after
/// each hidden activation.
inline Network build_mlp(std::size_t d, std::size_t n, bool with_bsf_input = false,
                         bool with_bsf_hidden = false, double l1_coef = 0.0) {
    if (d < 1 || n < 2) throw std::invalid_argument("build_mlp: need d >= 1, n >= 2");
    Network net({d});
    if (with_bsf_input)
        net.add(std::make_unique<BsfLayer>(BsfLayer::Gate::element, d, l1_coef));
    const std::size_t widths[3] = {d, 2 * d, d};
    std::size_t in = d;
    for (std::size_t w : widths) {
        net.add(std::make_unique<Dense>(in, w));
        net.add(std::make_unique<Activation>(ActKind::relu));
        if (with_bsf_hidden)
            net.add(std::make_unique<BsfLayer>(BsfLayer::Gate::element, w, l1_coef));
        in = w;
    }
    net.add(std::make_unique<Dense>(in, n));
    net.validate();
    return net;
}

/// LeNet-style CNN: Conv(3x3, 32) relu, Conv(3x3, 64) relu, MaxPool 2x2,
/// Flatten, Dense 128 relu, Dropout 0.5, Dense n. Optional pixel-level input
/// gates or per-feature-map gates after each convolution block.
inline Network build_cnn(std::size_t channels, std::size_t h, std::size_t w, std::size_t n,
                         bool with_bsf_input = false, bool with_bsf_channels = false,
                         double l1_coef = 0.0) {
    if (h < 8 || w < 8) throw std::invalid_argument("build_cnn: spatial dims must be >= 8");
    Network net({channels, h, w});
    if (with_bsf_input)
        net.add(std::make_unique<BsfLayer>(BsfLayer::Gate::element, channels * h * w, l1_coef));
    net.add(std::make_unique<Conv2D>(channels, 32));
    net.add(std::make_unique<Activation>(ActKind::relu));
    if (with_bsf_channels)
        net.add(std::make_unique<BsfLayer>(BsfLayer::Gate::channel, 32, l1_coef));
    net.add(std::make_unique<Conv2D>(32, 64));
    net.add(std::make_unique<Activation>(ActKind::relu));
    if (with_bsf_channels)
        net.add(std::make_unique<BsfLayer>(BsfLayer::Gate::channel, 64, l1_coef));
    net.add(std::make_unique<MaxPool2D>());
    net.add(std::make_unique<Flatten>());
    const std::size_t flat = 64 * ((h - 4) / 2) * ((w - 4) / 2);
    net.add(std::make_unique<Dense>(flat, 128));
    net.add(std::make_unique<Activation>(ActKind::relu));
    net.add(std::make_unique<Dropout>(0.5));
    net.add(std::make_unique<Dense>(128, n));
    net.validate();
    return net;
}

}  // namespace bsf

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace bsf {

/// Layout of a gate-weight vector for rendering: a flat vector or an h x w grid.
struct FrameLayout {
    std::size_t height = 0;  // 0 means 1-D bar layout
    std::size_t width = 0;

    static FrameLayout vector(std::size_t n) { return {0, n}; }
    static FrameLayout grid(std::size_t h, std::size_t w) { return {h, w}; }
    bool is_grid() const { return height > 0; }
};

namespace detail {

inline std::uint8_t gray(double w) {
    const double v = std::clamp(w, 0.0, 1.0) * 255.0;
    return static_cast<std::uint8_t>(std::lround(v));
}

}  // namespace detail

/// Render weights as a binary PGM (P5) raster. Grid layout maps each weight
/// to one pixel (255 * w); vector layout draws a bar chart on a 64-row
/// canvas, one 4-pixel-wide column per weight, filled bottom-up.
inline std::string render_frame(const std::vector<double>& w, const FrameLayout& layout) {
    for (double v : w)
        if (v < 0.0 || v > 1.0)
            throw std::invalid_argument("render_frame: weights must lie in [0,1]");
    std::size_t h, width;
    std::vector<std::uint8_t> pix;
    if (layout.is_grid()) {
        if (layout.height * layout.width != w.size())
            throw std::invalid_argument("render_frame: grid " + std::to_string(layout.height) +
                                        "x" + std::to_string(layout.width) +
                                        " does not cover " + std::to_string(w.size()) +
                                        " weights");
        h = layout.height;
        width = layout.width;
        pix.resize(w.size());
        for (std::size_t i = 0; i < w.size(); ++i) pix[i] = detail::gray(w[i]);
    } else {
        if (layout.width != w.size())
            throw std::invalid_argument("render_frame: vector layout length mismatch");
        constexpr std::size_t kBarHeight = 64, kBarWidth = 4;
        h = kBarHeight;
        width = std::max<std::size_t>(1, w.size()) * kBarWidth;
        pix.assign(h * width, 0);
        for (std::size_t i = 0; i < w.size(); ++i) {
            const auto filled =
                static_cast<std::size_t>(std::lround(std::clamp(w[i], 0.0, 1.0) * kBarHeight));
            for (std::size_t row = kBarHeight - filled; row < kBarHeight; ++row)
                for (std::size_t c = 0; c < kBarWidth; ++c)
                    pix[row * width + i * kBarWidth + c] = 255;
        }
    }
    std::ostringstream os;
    os << "P5\n" << width << " " << h << "\n255\n";
    os.write(reinterpret_cast<const char*>(pix.data()), static_cast<std::streamsize>(pix.size()));
    return os.str();
}

/// One CSV row of weights; grid layouts get a height/width header line.
inline std::string snapshot_csv(const std::vector<double>& w, const FrameLayout& layout) {
    std::ostringstream os;
    os.precision(17);
    if (layout.is_grid()) os << "# grid " << layout.height << " " << layout.width << "\n";
    for (std::size_t i = 0; i < w.size(); ++i) os << (i ? "," : "") << w[i];
    os << "\n";
    return os.str();
}

inline void write_file(const std::string& path, const std::string& bytes) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + path);
    f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace bsf

#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "bsf/tensor.hpp"

namespace bsf {

/// Fraction of rows whose argmax matches the label; argmax ties go to the
/// lowest index.
inline double accuracy(const Tensor& probs, const std::vector<int>& labels) {
    if (probs.rank() != 2 || probs.dim(0) != labels.size())
        throw std::invalid_argument("accuracy: shape mismatch");
    const std::size_t n = probs.dim(0), c = probs.dim(1);
    std::size_t hits = 0;
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t best = 0;
        for (std::size_t j = 1; j < c; ++j)
            if (probs.at2(i, j) > probs.at2(i, best)) best = j;
        if (static_cast<int>(best) == labels[i]) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(n);
}

/// Mean silhouette s(i) = (b(i) - a(i)) / max(a(i), b(i)) over all points,
/// Euclidean distance. a(i) excludes the point itself; singleton-cluster
/// points contribute s(i) = 0.
inline double silhouette_coefficient(const Tensor& features, const std::vector<int>& labels) {
    if (features.rank() != 2 || features.dim(0) != labels.size())
        throw std::invalid_argument("silhouette: shape mismatch");
    const std::size_t n = features.dim(0), d = features.dim(1);
    int n_clusters = 0;
    for (int l : labels) n_clusters = std::max(n_clusters, l + 1);
    if (n_clusters < 2) throw std::invalid_argument("silhouette: need at least 2 clusters");
    std::vector<std::size_t> count(n_clusters, 0);
    for (int l : labels) {
        if (l < 0) throw std::invalid_argument("silhouette: negative label");
        ++count[l];
    }
    for (int c = 0; c < n_clusters; ++c)
        if (count[c] == 0)
            throw std::invalid_argument("silhouette: empty cluster " + std::to_string(c));

    double total = 0.0;
    std::vector<double> sums(n_clusters);
    for (std::size_t i = 0; i < n; ++i) {
        const int ci = labels[i];
        if (count[ci] == 1) continue;  // s(i) = 0
        std::fill(sums.begin(), sums.end(), 0.0);
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i) continue;
            double sq = 0.0;
            for (std::size_t k = 0; k < d; ++k) {
                const double diff = features.at2(i, k) - features.at2(j, k);
                sq += diff * diff;
            }
            sums[labels[j]] += std::sqrt(sq);
        }
        const double a = sums[ci] / static_cast<double>(count[ci] - 1);
        double b = std::numeric_limits<double>::infinity();
        for (int c = 0; c < n_clusters; ++c)
            if (c != ci) b = std::min(b, sums[c] / static_cast<double>(count[c]));
        const double denom = std::max(a, b);
        if (denom > 0.0) total += (b - a) / denom;
    }
    return total / static_cast<double>(n);
}

}  // namespace bsf

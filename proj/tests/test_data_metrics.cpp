#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "bsf/dataset.hpp"
#include "bsf/metrics.hpp"
#include "bsf/rng.hpp"

using namespace bsf;
namespace fs = std::filesystem;

namespace {

std::string write_temp(const std::string& name, const std::string& content) {
    fs::path p = fs::temp_directory_path() / name;
    std::ofstream f(p, std::ios::binary);
    f << content;
    return p.string();
}

void be32(std::string& s, std::uint32_t v) {
    s.push_back(char((v >> 24) & 0xff));
    s.push_back(char((v >> 16) & 0xff));
    s.push_back(char((v >> 8) & 0xff));
    s.push_back(char(v & 0xff));
}

// full-distance-matrix reference, structured differently from the library code
double silhouette_reference(const Tensor& x, const std::vector<int>& labels) {
    const std::size_t n = x.dim(0), d = x.dim(1);
    std::vector<std::vector<double>> dist(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            double sq = 0.0;
            for (std::size_t k = 0; k < d; ++k) {
                double diff = x.at2(i, k) - x.at2(j, k);
                sq += diff * diff;
            }
            dist[i][j] = dist[j][i] = std::sqrt(sq);
        }
    int n_clusters = 0;
    for (int l : labels) n_clusters = std::max(n_clusters, l + 1);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> sum(n_clusters, 0.0);
        std::vector<std::size_t> cnt(n_clusters, 0);
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i) continue;
            sum[labels[j]] += dist[i][j];
            ++cnt[labels[j]];
        }
        if (cnt[labels[i]] == 0) continue;
        const double a = sum[labels[i]] / cnt[labels[i]];
        double b = std::numeric_limits<double>::infinity();
        for (int c = 0; c < n_clusters; ++c)
            if (c != labels[i] && cnt[c] > 0) b = std::min(b, sum[c] / cnt[c]);
        const double denom = std::max(a, b);
        if (denom > 0.0) total += (b - a) / denom;
    }
    return total / n;
}

}  // namespace

TEST_CASE("csv categorical coding follows first appearance") {
    auto path = write_temp("cat.csv", "color,size,class\na,1,x\nb,2,y\na,3,x\n");
    Dataset d = load_csv(path, "class", {"color"});
    CHECK(d.features.at2(0, 0) == 0.0);
    CHECK(d.features.at2(1, 0) == 1.0);
    CHECK(d.features.at2(2, 0) == 0.0);
    CHECK(d.labels == std::vector<int>{0, 1, 0});
    CHECK(d.n_classes == 2);
    CHECK(d.feature_names == std::vector<std::string>{"color", "size"});
    std::remove(path.c_str());
}

TEST_CASE("wine csv loads 178 samples, 13 features, 3 classes") {
    Dataset d = load_csv(std::string(BSF_DATA_DIR) + "/wine.csv", "class");
    CHECK(d.n_samples() == 178);
    CHECK(d.n_features() == 13);
    CHECK(d.n_classes == 3);
    CHECK(d.feature_names.size() == 13);
}

TEST_CASE("csv loader errors are specific") {
    CHECK_THROWS_WITH_AS(load_csv("/nonexistent/file.csv", "class"),
                         doctest::Contains("cannot open"), std::runtime_error);

    auto ragged = write_temp("ragged.csv", "a,b,class\n1,2,x\n1,x\n");
    CHECK_THROWS_WITH_AS(load_csv(ragged, "class"), doctest::Contains("ragged row 3"),
                         std::runtime_error);
    std::remove(ragged.c_str());

    auto bad = write_temp("badnum.csv", "a,b,class\n1,oops,x\n");
    CHECK_THROWS_WITH_AS(load_csv(bad, "class"), doctest::Contains("non-numeric"),
                         std::runtime_error);
    std::remove(bad.c_str());

    auto nolabel = write_temp("nolabel.csv", "a,b\n1,2\n");
    CHECK_THROWS_WITH_AS(load_csv(nolabel, "class"), doctest::Contains("not found"),
                         std::runtime_error);
    std::remove(nolabel.c_str());
}

TEST_CASE("idx loader reads a hand-built 2x2 pair with exact pixel scaling") {
    std::string img;
    be32(img, 0x803);
    be32(img, 2);  // two images
    be32(img, 2);
    be32(img, 2);
    img += std::string("\x00\xff\x80\x00", 4);
    img += std::string("\xff\xff\x00\x01", 4);
    std::string lab;
    be32(lab, 0x801);
    be32(lab, 2);
    lab += std::string("\x07\x02", 2);
    auto ip = write_temp("tiny-images", img);
    auto lp = write_temp("tiny-labels", lab);

    Dataset d = load_idx(ip, lp);
    CHECK(d.features.shape() == std::vector<std::size_t>{2, 1, 2, 2});
    CHECK(d.features[0] == 0.0);
    CHECK(d.features[1] == 1.0);
    CHECK(d.features[2] == doctest::Approx(128.0 / 255.0).epsilon(1e-15));
    CHECK(d.features[4] == 1.0);
    CHECK(d.features[7] == doctest::Approx(1.0 / 255.0).epsilon(1e-15));
    CHECK(d.labels == std::vector<int>{7, 2});
    CHECK(d.n_classes == 8);

    // wrong magic in either file is rejected
    std::string badmagic = img;
    badmagic[3] = 0x01;
    auto bp = write_temp("bad-images", badmagic);
    CHECK_THROWS_WITH_AS(load_idx(bp, lp), doctest::Contains("bad image magic"),
                         std::runtime_error);
    CHECK_THROWS_WITH_AS(load_idx(ip, ip), doctest::Contains("bad label magic"),
                         std::runtime_error);
    std::remove(ip.c_str());
    std::remove(lp.c_str());
    std::remove(bp.c_str());
}

TEST_CASE("idx loader respects the sample limit on the digit set") {
    const std::string dir = std::string(BSF_DATA_DIR) + "/mnist";
    Dataset d = load_idx(dir + "/train-images-idx3-ubyte", dir + "/train-labels-idx1-ubyte", 500);
    CHECK(d.features.shape() == std::vector<std::size_t>{500, 1, 28, 28});
    CHECK(d.labels.size() == 500);
    for (int l : d.labels) {
        CHECK(l >= 0);
        CHECK(l <= 9);
    }
    bool in_range = true;
    for (std::size_t i = 0; i < d.features.size(); ++i)
        in_range = in_range && d.features[i] >= 0.0 && d.features[i] <= 1.0;
    CHECK(in_range);
}

TEST_CASE("standardize uses the population standard deviation") {
    Dataset d;
    d.features = Tensor({3, 1}, {1.0, 2.0, 3.0});
    d.labels = {0, 0, 1};
    d.n_classes = 2;
    Dataset s = standardize(d);
    // std = sqrt(2/3), so the extremes map to +-sqrt(3/2)
    const double e = std::sqrt(1.5);
    CHECK(s.features[0] == doctest::Approx(-e).epsilon(1e-12));
    CHECK(s.features[1] == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(s.features[2] == doctest::Approx(e).epsilon(1e-12));
    CHECK(s.mean[0] == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(s.stddev[0] == doctest::Approx(std::sqrt(2.0 / 3.0)).epsilon(1e-12));
    CHECK(e == doctest::Approx(1.224744871).epsilon(1e-9));

    // standardizing again is a no-op on the values
    Dataset s2 = standardize(s);
    for (std::size_t i = 0; i < 3; ++i)
        CHECK(s2.features[i] == doctest::Approx(s.features[i]).epsilon(1e-12));
}

TEST_CASE("constant columns become all-zero with std recorded as 1") {
    Dataset d;
    d.features = Tensor({3, 2}, {5.0, 1.0, 5.0, 2.0, 5.0, 3.0});
    d.labels = {0, 1, 0};
    d.n_classes = 2;
    Dataset s = standardize(d);
    for (std::size_t i = 0; i < 3; ++i) CHECK(s.features.at2(i, 0) == 0.0);
    CHECK(s.stddev[0] == 1.0);
    CHECK(s.mean[0] == 5.0);
}

TEST_CASE("apply_standardization reuses recorded statistics") {
    Dataset train;
    train.features = Tensor({2, 1}, {0.0, 10.0});
    train.labels = {0, 1};
    train.n_classes = 2;
    Dataset s = standardize(train);
    Dataset held;
    held.features = Tensor({1, 1}, {5.0});
    held.labels = {0};
    held.n_classes = 2;
    Dataset h = apply_standardization(held, s.mean, s.stddev);
    CHECK(h.features[0] == doctest::Approx(0.0).epsilon(1e-12));
    CHECK_THROWS_AS(apply_standardization(held, {1.0, 2.0}, {1.0, 1.0}), std::invalid_argument);
}

TEST_CASE("one_hot encodes and rejects out-of-range labels") {
    Tensor t = one_hot({2, 0}, 3);
    CHECK(t.shape() == std::vector<std::size_t>{2, 3});
    CHECK(t.at2(0, 2) == 1.0);
    CHECK(t.at2(0, 0) == 0.0);
    CHECK(t.at2(1, 0) == 1.0);
    double sum = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) sum += t[i];
    CHECK(sum == 2.0);
    CHECK_THROWS_AS(one_hot({3}, 3), std::invalid_argument);
    CHECK_THROWS_AS(one_hot({-1}, 3), std::invalid_argument);
}

TEST_CASE("dataset subset and select_columns preserve the right cells") {
    Dataset d;
    d.features = Tensor({3, 2}, {1, 2, 3, 4, 5, 6});
    d.labels = {0, 1, 2};
    d.n_classes = 3;
    d.feature_names = {"p", "q"};
    Dataset s = d.subset({2, 0});
    CHECK(s.features.at2(0, 0) == 5.0);
    CHECK(s.features.at2(1, 1) == 2.0);
    CHECK(s.labels == std::vector<int>{2, 0});
    Dataset c = d.select_columns({1});
    CHECK(c.n_features() == 1);
    CHECK(c.features.at2(1, 0) == 4.0);
    CHECK(c.feature_names == std::vector<std::string>{"q"});
}

TEST_CASE("silhouette of two tight pairs on a line") {
    Tensor x({4, 1}, {0.0, 0.1, 10.0, 10.1});
    std::vector<int> labels{0, 0, 1, 1};
    // frozen from the reference implementation below:
    // s(0) = (10.05 - 0.1) / 10.05, s(1) = (9.95 - 0.1) / 9.95, symmetric pairs
    const double expected = 0.98999974999374985;
    CHECK(silhouette_coefficient(x, labels) == doctest::Approx(expected).epsilon(1e-12));
    CHECK(silhouette_reference(x, labels) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("coincident clusters score zero") {
    Tensor x({4, 2});
    std::vector<int> labels{0, 0, 1, 1};
    CHECK(silhouette_coefficient(x, labels) == 0.0);
}

TEST_CASE("silhouette matches the reference on random blobs up to n=200") {
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        RngStream rng(seed);
        const std::size_t n = 200, d = 3;
        const int k = 4;
        Tensor x({n, d});
        std::vector<int> labels(n);
        for (std::size_t i = 0; i < n; ++i) {
            labels[i] = static_cast<int>(rng.uniform_index(k));
            for (std::size_t j = 0; j < d; ++j)
                x.at2(i, j) = 3.0 * labels[i] + rng.uniform(-1.0, 1.0);
        }
        CHECK(silhouette_coefficient(x, labels) ==
              doctest::Approx(silhouette_reference(x, labels)).epsilon(1e-12));
    }
}

TEST_CASE("silhouette is invariant to translation and label permutation") {
    RngStream rng(4);
    const std::size_t n = 60;
    Tensor x({n, 2});
    std::vector<int> labels(n), swapped(n);
    for (std::size_t i = 0; i < n; ++i) {
        labels[i] = static_cast<int>(rng.uniform_index(2));
        swapped[i] = 1 - labels[i];
        x.at2(i, 0) = 4.0 * labels[i] + rng.uniform(-1.0, 1.0);
        x.at2(i, 1) = rng.uniform(-1.0, 1.0);
    }
    const double base = silhouette_coefficient(x, labels);
    Tensor shifted = x;
    for (std::size_t i = 0; i < n; ++i) {
        shifted.at2(i, 0) += 100.0;
        shifted.at2(i, 1) -= 7.0;
    }
    CHECK(silhouette_coefficient(shifted, labels) == doctest::Approx(base).epsilon(1e-12));
    CHECK(silhouette_coefficient(x, swapped) == doctest::Approx(base).epsilon(1e-12));
}

TEST_CASE("silhouette rejects degenerate labelings") {
    Tensor x({3, 1}, {0.0, 1.0, 2.0});
    CHECK_THROWS_AS(silhouette_coefficient(x, {0, 0, 0}), std::invalid_argument);
    CHECK_THROWS_AS(silhouette_coefficient(x, {0, 0, 2}), std::invalid_argument);
    CHECK_THROWS_AS(silhouette_coefficient(x, {0, -1, 1}), std::invalid_argument);
}

TEST_CASE("accuracy counts argmax hits, ties to the lowest index") {
    Tensor p({3, 2}, {0.9, 0.1, 0.4, 0.6, 0.5, 0.5});
    CHECK(accuracy(p, {0, 1, 0}) == 1.0);
    CHECK(accuracy(p, {0, 1, 1}) == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
    CHECK_THROWS_AS(accuracy(p, {0, 1}), std::invalid_argument);
}

TEST_CASE("uniform probabilities always predict class 0") {
    Tensor p = Tensor::full({5, 4}, 0.25);
    CHECK(accuracy(p, {0, 0, 0, 0, 0}) == 1.0);
    CHECK(accuracy(p, {1, 1, 1, 1, 1}) == 0.0);
}

TEST_CASE("random predictions on 10 classes score near 0.1") {
    RngStream rng(9);
    const std::size_t n = 10000;
    Tensor p({n, 10});
    std::vector<int> labels(n);
    for (std::size_t i = 0; i < n; ++i) {
        labels[i] = static_cast<int>(rng.uniform_index(10));
        for (std::size_t j = 0; j < 10; ++j) p.at2(i, j) = rng.uniform();
    }
    CHECK(std::abs(accuracy(p, labels) - 0.1) < 0.01);  // > 3 sigma margin
}

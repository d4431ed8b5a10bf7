#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "bsf/tensor.hpp"

namespace bsf {

/// Feature matrix [n x d] (or image stack [n, c, h, w]) plus integer labels.
struct Dataset {
    Tensor features;
    std::vector<int> labels;
    std::vector<std::string> feature_names;
    int n_classes = 0;
    // per-feature statistics recorded by standardize()
    std::vector<double> mean, stddev;

    std::size_t n_samples() const { return features.rank() ? features.dim(0) : 0; }
    std::size_t n_features() const {
        std::size_t d = 1;
        for (std::size_t i = 1; i < features.rank(); ++i) d *= features.dim(i);
        return d;
    }

    /// Row subset by sample indices, preserving metadata.
    Dataset subset(const std::vector<std::size_t>& idx) const {
        Dataset out;
        auto shape = features.shape();
        shape[0] = idx.size();
        out.features = Tensor(shape);
        const std::size_t per = n_features();
        for (std::size_t i = 0; i < idx.size(); ++i) {
            const double* src = features.data() + idx[i] * per;
            std::copy(src, src + per, out.features.data() + i * per);
            out.labels.push_back(labels[idx[i]]);
        }
        out.feature_names = feature_names;
        out.n_classes = n_classes;
        out.mean = mean;
        out.stddev = stddev;
        return out;
    }

    /// Column subset (tabular data only) by feature indices.
    Dataset select_columns(const std::vector<std::size_t>& cols) const {
        if (features.rank() != 2)
            throw std::invalid_argument("select_columns: tabular dataset required");
        Dataset out;
        out.features = Tensor({n_samples(), cols.size()});
        for (std::size_t i = 0; i < n_samples(); ++i)
            for (std::size_t j = 0; j < cols.size(); ++j)
                out.features.at2(i, j) = features.at2(i, cols[j]);
        out.labels = labels;
        out.n_classes = n_classes;
        for (auto c : cols) {
            if (!feature_names.empty()) out.feature_names.push_back(feature_names.at(c));
            if (!mean.empty()) {
                out.mean.push_back(mean.at(c));
                out.stddev.push_back(stddev.at(c));
            }
        }
        return out;
    }
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream is(line);
    while (std::getline(is, field, ',')) out.push_back(field);
    if (!line.empty() && line.back() == ',') out.push_back("");
    return out;
}

}  // namespace detail

/// CSV with a header row. Categorical columns (and the label column) are coded
/// by first appearance; everything else must parse as a number.
inline Dataset load_csv(const std::string& path, const std::string& label_column,
                        const std::vector<std::string>& categorical_columns = {}) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("load_csv: cannot open " + path);
    std::string line;
    if (!std::getline(f, line)) throw std::runtime_error("load_csv: empty file " + path);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    auto header = detail::split_csv_line(line);

    std::size_t label_idx = header.size();
    std::vector<bool> is_cat(header.size(), false);
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == label_column) label_idx = i;
        for (const auto& c : categorical_columns)
            if (header[i] == c) is_cat[i] = true;
    }
    if (label_idx == header.size())
        throw std::runtime_error("load_csv: label column '" + label_column + "' not found");

    std::vector<std::map<std::string, int>> codes(header.size());
    std::map<std::string, int> label_codes;
    std::vector<std::vector<double>> rows;
    std::vector<int> labels;

    std::size_t row_no = 1;
    while (std::getline(f, line)) {
        ++row_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto cells = detail::split_csv_line(line);
        if (cells.size() != header.size())
            throw std::runtime_error("load_csv: ragged row " + std::to_string(row_no) + " in " +
                                     path + " (" + std::to_string(cells.size()) + " cells, expected " +
                                     std::to_string(header.size()) + ")");
        std::vector<double> row;
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i == label_idx) {
                auto [it, inserted] =
                    label_codes.try_emplace(cells[i], static_cast<int>(label_codes.size()));
                (void)inserted;
                labels.push_back(it->second);
            } else if (is_cat[i]) {
                auto [it, inserted] =
                    codes[i].try_emplace(cells[i], static_cast<int>(codes[i].size()));
                (void)inserted;
                row.push_back(static_cast<double>(it->second));
            } else {
                try {
                    std::size_t pos = 0;
                    row.push_back(std::stod(cells[i], &pos));
                    if (pos != cells[i].size()) throw std::invalid_argument("trailing");
                } catch (const std::exception&) {
                    throw std::runtime_error("load_csv: non-numeric cell at row " +
                                             std::to_string(row_no) + ", column '" + header[i] +
                                             "'");
                }
            }
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw std::runtime_error("load_csv: no data rows in " + path);

    Dataset d;
    const std::size_t n_feat = rows[0].size();
    d.features = Tensor({rows.size(), n_feat});
    for (std::size_t i = 0; i < rows.size(); ++i)
        std::copy(rows[i].begin(), rows[i].end(), d.features.data() + i * n_feat);
    d.labels = std::move(labels);
    d.n_classes = static_cast<int>(label_codes.size());
    for (std::size_t i = 0; i < header.size(); ++i)
        if (i != label_idx) d.feature_names.push_back(header[i]);
    return d;
}

namespace detail {

inline std::uint32_t read_be32(std::istream& f) {
    unsigned char b[4];
    f.read(reinterpret_cast<char*>(b), 4);
    if (!f) throw std::runtime_error("load_idx: truncated header");
    return (std::uint32_t(b[0]) << 24) | (std::uint32_t(b[1]) << 16) |
           (std::uint32_t(b[2]) << 8) | std::uint32_t(b[3]);
}

}  // namespace detail

/// Big-endian IDX image + label pair (the MNIST container). Pixels scaled to
/// [0,1]; optional limit keeps the first samples only.
inline Dataset load_idx(const std::string& images_path, const std::string& labels_path,
                        std::size_t limit = 0) {
    std::ifstream fi(images_path, std::ios::binary);
    if (!fi) throw std::runtime_error("load_idx: cannot open " + images_path);
    if (detail::read_be32(fi) != 0x00000803u)
        throw std::runtime_error("load_idx: bad image magic in " + images_path);
    const std::size_t n_img = detail::read_be32(fi);
    const std::size_t h = detail::read_be32(fi);
    const std::size_t w = detail::read_be32(fi);

    std::ifstream fl(labels_path, std::ios::binary);
    if (!fl) throw std::runtime_error("load_idx: cannot open " + labels_path);
    if (detail::read_be32(fl) != 0x00000801u)
        throw std::runtime_error("load_idx: bad label magic in " + labels_path);
    const std::size_t n_lbl = detail::read_be32(fl);
    if (n_img != n_lbl)
        throw std::runtime_error("load_idx: image/label count mismatch (" +
                                 std::to_string(n_img) + " vs " + std::to_string(n_lbl) + ")");

    const std::size_t n = (limit > 0 && limit < n_img) ? limit : n_img;
    Dataset d;
    d.features = Tensor({n, 1, h, w});
    std::vector<unsigned char> buf(h * w);
    for (std::size_t i = 0; i < n; ++i) {
        fi.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
        if (!fi) throw std::runtime_error("load_idx: truncated image data");
        for (std::size_t p = 0; p < buf.size(); ++p)
            d.features.data()[i * h * w + p] = buf[p] / 255.0;
        char lab;
        fl.read(&lab, 1);
        if (!fl) throw std::runtime_error("load_idx: truncated label data");
        d.labels.push_back(static_cast<unsigned char>(lab));
    }
    int maxl = 0;
    for (int l : d.labels) maxl = std::max(maxl, l);
    d.n_classes = maxl + 1;
    return d;
}

/// Per-column (x - mean) / std with population std; constant columns map to
/// zero with std recorded as 1. Statistics are stored on the result.
inline Dataset standardize(const Dataset& in) {
    if (in.features.rank() != 2)
        throw std::invalid_argument("standardize: tabular dataset required");
    const std::size_t n = in.n_samples(), d = in.n_features();
    Dataset out = in;
    out.mean.assign(d, 0.0);
    out.stddev.assign(d, 1.0);
    for (std::size_t j = 0; j < d; ++j) {
        double m = 0.0;
        for (std::size_t i = 0; i < n; ++i) m += in.features.at2(i, j);
        m /= static_cast<double>(n);
        double var = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double c = in.features.at2(i, j) - m;
            var += c * c;
        }
        var /= static_cast<double>(n);
        const double sd = var > 0.0 ? std::sqrt(var) : 1.0;
        out.mean[j] = m;
        out.stddev[j] = sd;
        for (std::size_t i = 0; i < n; ++i)
            out.features.at2(i, j) = (in.features.at2(i, j) - m) / sd;
    }
    return out;
}

/// Apply previously recorded statistics to held-out data.
inline Dataset apply_standardization(const Dataset& in, const std::vector<double>& mean,
                                     const std::vector<double>& stddev) {
    if (in.features.rank() != 2 || mean.size() != in.n_features() ||
        stddev.size() != in.n_features())
        throw std::invalid_argument("apply_standardization: statistics mismatch");
    Dataset out = in;
    out.mean = mean;
    out.stddev = stddev;
    for (std::size_t i = 0; i < in.n_samples(); ++i)
        for (std::size_t j = 0; j < in.n_features(); ++j)
            out.features.at2(i, j) = (in.features.at2(i, j) - mean[j]) / stddev[j];
    return out;
}

inline Tensor one_hot(const std::vector<int>& labels, int n_classes) {
    Tensor t({labels.size(), static_cast<std::size_t>(n_classes)});
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] < 0 || labels[i] >= n_classes)
            throw std::invalid_argument("one_hot: label " + std::to_string(labels[i]) +
                                        " out of range [0," + std::to_string(n_classes) + ")");
        t.at2(i, static_cast<std::size_t>(labels[i])) = 1.0;
    }
    return t;
}

}  // namespace bsf

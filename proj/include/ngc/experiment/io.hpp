#pragma once

#include <charconv>
#include <fstream>
#include <istream>
#include <string>
#include <string_view>
#include <vector>

#include "ngc/error.hpp"
#include "ngc/graph.hpp"
#include "ngc/noise.hpp"

namespace ngc::experiment {

namespace detail {

inline std::string_view trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline std::vector<std::string_view> split(std::string_view s, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = s.find(sep, start);
        out.push_back(trim(s.substr(start, pos - start)));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

inline bool parse_double(std::string_view s, double& out) {
    if (s.empty()) return false;
    // std::from_chars rejects a leading '+'.
    if (s.front() == '+') s.remove_prefix(1);
    const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
    return res.ec == std::errc() && res.ptr == s.data() + s.size();
}

inline bool parse_index(std::string_view s, Index& out) {
    if (s.empty()) return false;
    long long v = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) return false;
    out = static_cast<Index>(v);
    return true;
}

inline bool skippable(std::string_view line) {
    const auto t = trim(line);
    return t.empty() || t.front() == '#';
}

inline std::ifstream open_input(const std::string& path, const char* what) {
    std::ifstream in(path);
    if (!in) throw Error(std::string("cannot open ") + what + " file '" + path + "'");
    return in;
}

}  // namespace detail

/// CSV field, double-quoted only when it contains a comma, quote or newline.
inline std::string csv_field(std::string_view s) {
    if (s.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(s);
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

/// Dense CSV of numbers, one node per row. '#' lines and blank lines are skipped.
inline FeatureMatrix read_feature_csv(std::istream& in) {
    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (detail::skippable(line)) continue;
        std::vector<double> row;
        for (auto field : detail::split(line, ',')) {
            double v = 0.0;
            if (!detail::parse_double(field, v)) {
                throw ParseError("features: '" + std::string(field) + "' is not a number", lineno);
            }
            row.push_back(v);
        }
        if (!rows.empty() && row.size() != rows.front().size()) {
            throw ParseError("features: expected " + std::to_string(rows.front().size()) +
                                 " columns, found " + std::to_string(row.size()),
                             lineno);
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw Error("features: file has no rows");
    FeatureMatrix x(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < rows[i].size(); ++j) x(static_cast<Index>(i), static_cast<Index>(j)) = rows[i][j];
    return x;
}

/// One non-negative integer label per line.
inline std::vector<Index> read_labels(std::istream& in) {
    std::vector<Index> labels;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (detail::skippable(line)) continue;
        const auto t = detail::trim(line);
        Index v = 0;
        if (!detail::parse_index(t, v) || v < 0) {
            throw ParseError("labels: '" + std::string(t) + "' is not a non-negative integer", lineno);
        }
        labels.push_back(v);
    }
    return labels;
}

enum class SplitTag { train, val, test, none };

/// One tag per line from {train, val, test, none}.
inline std::vector<SplitTag> read_split(std::istream& in) {
    std::vector<SplitTag> tags;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (detail::skippable(line)) continue;
        const auto t = detail::trim(line);
        if (t == "train") tags.push_back(SplitTag::train);
        else if (t == "val") tags.push_back(SplitTag::val);
        else if (t == "test") tags.push_back(SplitTag::test);
        else if (t == "none") tags.push_back(SplitTag::none);
        else throw ParseError("split: unknown tag '" + std::string(t) + "'", lineno);
    }
    return tags;
}

struct LoadedDataset {
    Graph graph;
    NoisyDataset data;  // clean = observed = file features, zero noise
    bool binary = false;
};

/// Assemble a dataset from streams. The feature row count fixes n; the edge
/// list is validated against it.
inline LoadedDataset load_dataset(std::istream& edges, std::istream& features, std::istream& labels,
                                  std::istream& split) {
    LoadedDataset out;
    NoisyDataset& data = out.data;
    data.clean = read_feature_csv(features);
    const Index n = data.clean.rows();
    out.graph = read_edge_list(edges, n);
    data.labels = read_labels(labels);
    if (static_cast<Index>(data.labels.size()) != n) {
        throw Error("labels: expected " + std::to_string(n) + " rows, found " +
                    std::to_string(data.labels.size()));
    }
    const auto tags = read_split(split);
    if (static_cast<Index>(tags.size()) != n) {
        throw Error("split: expected " + std::to_string(n) + " rows, found " + std::to_string(tags.size()));
    }
    Index max_label = 0;
    for (Index l : data.labels) max_label = std::max(max_label, l);
    data.classes = max_label + 1;
    data.train.assign(static_cast<std::size_t>(n), false);
    data.val.assign(static_cast<std::size_t>(n), false);
    data.test.assign(static_cast<std::size_t>(n), false);
    for (std::size_t i = 0; i < tags.size(); ++i) {
        data.train[i] = tags[i] == SplitTag::train;
        data.val[i] = tags[i] == SplitTag::val;
        data.test[i] = tags[i] == SplitTag::test;
    }
    data.noise = FeatureMatrix::Zero(n, data.clean.cols());
    data.observed = data.clean;
    out.binary = is_binary(data.clean);
    return out;
}

inline LoadedDataset load_dataset(const std::string& edge_path, const std::string& feature_path,
                                  const std::string& label_path, const std::string& split_path) {
    auto e = detail::open_input(edge_path, "edge");
    auto f = detail::open_input(feature_path, "feature");
    auto l = detail::open_input(label_path, "label");
    auto s = detail::open_input(split_path, "split");
    return load_dataset(e, f, l, s);
}

}  // namespace ngc::experiment

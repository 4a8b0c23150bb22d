#include "cgnc/data.hpp"

#include <algorithm>
#include <cmath>
#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

namespace cgnc {

namespace {

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
    if (!line.empty() && line.back() == ',') out.push_back("");
    return out;
}

bool parse_double(const std::string& s, double& out) {
    if (s.empty()) return false;
    char* end = nullptr;
    out = std::strtod(s.c_str(), &end);
    return end == s.c_str() + s.size() && std::isfinite(out);
}

}  // namespace

Dataset load_csv(const std::string& path, const std::string& label_column,
                 int* rejected_rows) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open file: " + path);

    std::string line;
    if (!std::getline(in, line)) throw InputError("empty file: " + path);
    auto header = split_csv_line(line);
    int label_idx = -1;
    for (size_t i = 0; i < header.size(); ++i)
        if (header[i] == label_column) label_idx = static_cast<int>(i);
    if (label_idx < 0) throw InputError("unknown label column: " + label_column);

    std::vector<std::string> names;
    for (size_t i = 0; i < header.size(); ++i)
        if (static_cast<int>(i) != label_idx) names.push_back(header[i]);
    const int n = static_cast<int>(names.size());
    if (n == 0) throw InputError("no feature columns in " + path);

    std::vector<std::vector<double>> rows;
    std::vector<std::string> raw_labels;
    int rejected = 0;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        auto cells = split_csv_line(line);
        if (cells.size() != header.size()) {
            ++rejected;
            continue;
        }
        std::vector<double> row;
        row.reserve(n);
        bool ok = true;
        for (size_t i = 0; i < cells.size(); ++i) {
            if (static_cast<int>(i) == label_idx) continue;
            double v;
            if (!parse_double(cells[i], v)) {
                ok = false;
                break;
            }
            row.push_back(v);
        }
        if (!ok || cells[label_idx].empty()) {
            ++rejected;
            continue;
        }
        rows.push_back(std::move(row));
        raw_labels.push_back(cells[label_idx]);
    }
    if (rejected_rows) *rejected_rows = rejected;
    if (rows.empty()) throw InputError("no valid data rows in " + path);

    // Distinct label values, sorted (numerically when both parse as numbers).
    std::vector<std::string> distinct = raw_labels;
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    if (distinct.size() != 2)
        throw InputError("label column must hold exactly two distinct values, found " +
                         std::to_string(distinct.size()));
    double la, lb;
    if (parse_double(distinct[0], la) && parse_double(distinct[1], lb) && lb < la)
        std::swap(distinct[0], distinct[1]);

    Dataset ds;
    ds.feature_names = names;
    ds.features.resize(static_cast<int>(rows.size()), n);
    ds.labels.resize(rows.size());
    for (size_t r = 0; r < rows.size(); ++r) {
        for (int j = 0; j < n; ++j) ds.features(static_cast<int>(r), j) = rows[r][j];
        ds.labels[r] = raw_labels[r] == distinct[1] ? 1 : 0;
    }
    int c1 = 0;
    for (int l : ds.labels) c1 += l;
    int c0 = ds.n_rows() - c1;
    if (c0 < 2 || c1 < 2)
        throw InputError("each class needs at least 2 instances (got " +
                         std::to_string(c0) + "/" + std::to_string(c1) + ")");
    return ds;
}

FeatureBounds percentile_bounds(const Dataset& ds, double lo, double hi) {
    if (!(0.0 <= lo && lo < hi && hi <= 1.0))
        throw PreconditionError("require 0 <= lo < hi <= 1");
    const int rows = ds.n_rows();
    if (rows == 0) throw InputError("empty dataset");
    const int n = ds.n_features();
    FeatureBounds b;
    b.lower.resize(n);
    b.upper.resize(n);
    auto percentile = [&](std::vector<double>& v, double q) {
        std::sort(v.begin(), v.end());
        double h = q * (static_cast<double>(v.size()) - 1.0);
        size_t i = static_cast<size_t>(std::floor(h));
        size_t j = std::min(i + 1, v.size() - 1);
        double frac = h - static_cast<double>(i);
        return v[i] * (1.0 - frac) + v[j] * frac;
    };
    for (int j = 0; j < n; ++j) {
        std::vector<double> col(ds.features.col(j).data(),
                                ds.features.col(j).data() + rows);
        b.lower[j] = percentile(col, lo);
        b.upper[j] = percentile(col, hi);
        if (b.lower[j] >= b.upper[j]) {
            double w = std::max(1e-6, 1e-6 * std::abs(b.lower[j]));
            b.lower[j] -= w;
            b.upper[j] += w;
        }
    }
    return b;
}

std::vector<double> equal_frequency_bins(std::vector<double> values, int k) {
    if (k < 2) throw PreconditionError("need k >= 2 bins");
    if (static_cast<int>(values.size()) < k)
        throw PreconditionError("need at least k values");
    std::sort(values.begin(), values.end());
    const size_t N = values.size();
    std::vector<double> edges;
    edges.push_back(values.front());
    for (int r = 1; r < k; ++r) {
        size_t cut = (N * static_cast<size_t>(r) + k - 1) / k;  // ceil(N*r/k)
        // Boundaries may only sit between distinct values; slide past ties.
        while (cut < N && values[cut] <= values[cut - 1]) ++cut;
        if (cut >= N) break;
        edges.push_back(0.5 * (values[cut - 1] + values[cut]));
    }
    edges.push_back(values.back());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
    if (edges.size() > 1) {
        // Guard against equal first/last pair from near-ties.
        std::vector<double> strict{edges[0]};
        for (size_t i = 1; i < edges.size(); ++i)
            if (edges[i] > strict.back()) strict.push_back(edges[i]);
        edges = strict;
    }
    return edges;
}

}  // namespace cgnc

#pragma once

#include <string>
#include <vector>

#include "cgnc/types.hpp"

namespace cgnc {

/// A binary-labelled table of continuous features. Immutable after construction.
struct Dataset {
    Mat features;                            // rows = instances, cols = features
    std::vector<int> labels;                 // values in {0,1}, both present
    std::vector<std::string> feature_names;  // length = cols

    int n_features() const { return static_cast<int>(features.cols()); }
    int n_rows() const { return static_cast<int>(features.rows()); }
};

struct FeatureBounds {
    Vec lower;
    Vec upper;
};

/// Parses a CSV with a mandatory header row. The label column must hold exactly
/// two distinct values; they are mapped to {0,1} by sorted order (smaller -> 0).
/// Rows with missing or non-numeric feature cells are dropped; the count of
/// dropped rows is reported through `rejected_rows` when non-null.
Dataset load_csv(const std::string& path, const std::string& label_column,
                 int* rejected_rows = nullptr);

/// Per-feature empirical percentiles (linear interpolation between order
/// statistics). Degenerate features (lower == upper) are widened symmetrically
/// by max(1e-6, 1e-6*|value|).
FeatureBounds percentile_bounds(const Dataset& ds, double lo, double hi);

/// Strictly increasing edge sequence for k equal-frequency bins; duplicate
/// edges are merged, so the effective bin count may drop.
std::vector<double> equal_frequency_bins(std::vector<double> values, int k);

}  // namespace cgnc

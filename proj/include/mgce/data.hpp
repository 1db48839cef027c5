#pragma once

// Dataset ingestion (CSV with header), standardization, seeded splits,
// symmetric label-noise injection, and synthetic Gaussian mixtures.

#include <cstdint>
#include <string>
#include <vector>

namespace mgce {

struct Dataset {
    std::vector<double> features; // n x d, row-major
    std::vector<int> labels;      // 0-based class indices
    int k = 0;
    int d = 0;
    std::string name;
    std::vector<std::string> class_names; // index -> original label token

    std::size_t size() const { return labels.size(); }
    const double* row(std::size_t i) const { return features.data() + i * d; }
    std::vector<double> row_vec(std::size_t i) const {
        return {row(i), row(i) + d};
    }
};

struct SplitSpec {
    double val_fraction = 0.1;
    std::uint64_t seed = 0;
};

// Loads a CSV with a header row. The label column holds integers or strings
// mapped to indices in first-appearance order; all other columns must be
// numeric and become features in header order. Parse errors name the
// offending row and column.
Dataset load_csv(const std::string& path,
                 const std::string& label_column = "label");

// Writes a CSV with columns f0..f{d-1} and the original label tokens under
// a trailing "label" column.
void save_csv(const Dataset& ds, const std::string& path);

// Remaps ds.labels so class indices agree with reference.class_names; ds
// also inherits reference.k. Throws if ds names a class the reference does
// not contain.
void align_labels(const Dataset& reference, Dataset& ds);

// Per-feature z-score using the training mean and population std; features
// with zero std are mean-subtracted only. The same transform is applied to
// every dataset in `others`.
void standardize(Dataset& train, std::vector<Dataset*> others = {});

// Each label is independently replaced with probability eta by a uniform
// draw over the other k-1 classes. Returns the mask of changed rows.
std::vector<bool> inject_symmetric_noise(Dataset& ds, double eta,
                                         std::uint64_t seed);

// Seeded uniform shuffle, then partition into (train, val).
std::pair<Dataset, Dataset> split(const Dataset& ds, const SplitSpec& spec);

// Balanced k-class Gaussian mixture: unit-covariance classes whose means
// are seeded random unit vectors scaled by `separation`.
Dataset synth_gaussian_mixture(int k, int d, int n, double separation,
                               std::uint64_t seed);

} // namespace mgce

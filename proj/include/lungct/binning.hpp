#pragma once

#include <cstdint>
#include <vector>

namespace lungct::detail {

/// Quantile-binned view of a feature matrix for fast tree split search.
/// When a feature has at most max_bins distinct values each value gets its
/// own bin and split search is exact; otherwise bins follow quantile cuts.
/// Cut b is the largest value routed left by the split "bin <= b", so a
/// split stored as (feature, cuts[f][b]) scores new points with x <= cut.
struct BinnedFeatures {
  std::vector<std::vector<double>> cuts;          // per feature, ascending
  std::vector<std::vector<std::uint8_t>> codes;   // column-major: [f][row]
  std::size_t n_rows = 0;

  int n_bins(std::size_t f) const {
    return static_cast<int>(cuts[f].size()) + 1;
  }
};

BinnedFeatures bin_features(const std::vector<std::vector<double>>& X,
                            int max_bins = 32);

}  // namespace lungct::detail

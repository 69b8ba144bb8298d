#include "lungct/binning.hpp"

#include <algorithm>

namespace lungct::detail {

BinnedFeatures bin_features(const std::vector<std::vector<double>>& X,
                            int max_bins) {
  BinnedFeatures bf;
  bf.n_rows = X.size();
  const std::size_t d = X.empty() ? 0 : X[0].size();
  bf.cuts.resize(d);
  bf.codes.resize(d);

  std::vector<double> sorted;
  for (std::size_t f = 0; f < d; ++f) {
    sorted.clear();
    sorted.reserve(X.size());
    for (const auto& row : X) sorted.push_back(row[f]);
    std::sort(sorted.begin(), sorted.end());
    sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());

    auto& cuts = bf.cuts[f];
    if (static_cast<int>(sorted.size()) <= max_bins) {
      for (std::size_t i = 0; i + 1 < sorted.size(); ++i)
        cuts.push_back(0.5 * (sorted[i] + sorted[i + 1]));
    } else {
      const std::size_t n = sorted.size();
      for (int i = 1; i < max_bins; ++i) {
        const std::size_t r = i * n / max_bins;
        cuts.push_back(0.5 * (sorted[r - 1] + sorted[r]));
      }
      cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
    }

    auto& codes = bf.codes[f];
    codes.resize(X.size());
    for (std::size_t i = 0; i < X.size(); ++i) {
      const auto it =
          std::lower_bound(cuts.begin(), cuts.end(), X[i][f]);
      codes[i] = static_cast<std::uint8_t>(it - cuts.begin());
    }
  }
  return bf;
}

}  // namespace lungct::detail

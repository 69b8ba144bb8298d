#include <algorithm>
#include <cmath>

#include "model_common.hpp"

namespace lungct {

Dataset smote(const Dataset& data, int k, RngStream rng,
              const Standardizer& z, Warnings* warnings) {
  detail::check_trainable(data);
  if (k < 1) throw ArgumentError("smote: k must be >= 1");

  const std::size_t n_pos = data.count_label(1);
  const std::size_t n_neg = data.n_rows() - n_pos;
  if (n_pos == n_neg) return data;

  const int minority = n_pos < n_neg ? 1 : 0;
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < data.n_rows(); ++i)
    if (data.y[i] == minority) idx.push_back(i);
  const std::size_t m = idx.size();
  const std::size_t need = std::max(n_pos, n_neg) - m;

  Dataset out = data;
  auto append = [&](std::vector<double> row, std::size_t serial) {
    out.X.push_back(std::move(row));
    out.y.push_back(minority);
    out.patient_ids.push_back("synthetic/" + std::to_string(serial));
  };

  if (m == 1) {
    if (warnings)
      warnings->push_back(
          "smote: single minority sample, degrading to duplication");
    for (std::size_t s = 0; s < need; ++s) append(data.X[idx[0]], s);
    return out;
  }

  // Nearest minority neighbors under the standardized Euclidean metric.
  const std::size_t kk = std::min<std::size_t>(k, m - 1);
  std::vector<std::vector<double>> zs(m);
  for (std::size_t a = 0; a < m; ++a) zs[a] = z.apply(data.X[idx[a]]);
  std::vector<std::vector<std::size_t>> neighbors(m);
  std::vector<std::pair<double, std::size_t>> dist;
  for (std::size_t a = 0; a < m; ++a) {
    dist.clear();
    for (std::size_t b = 0; b < m; ++b) {
      if (b == a) continue;
      double d2 = 0.0;
      for (std::size_t j = 0; j < zs[a].size(); ++j) {
        const double diff = zs[a][j] - zs[b][j];
        d2 += diff * diff;
      }
      dist.emplace_back(d2, b);
    }
    std::sort(dist.begin(), dist.end());
    for (std::size_t t = 0; t < kk; ++t)
      neighbors[a].push_back(dist[t].second);
  }

  for (std::size_t s = 0; s < need; ++s) {
    const std::size_t a = rng.uniform_int(m);
    const std::size_t b = neighbors[a][rng.uniform_int(kk)];
    const double lam = rng.uniform();
    std::vector<double> row(data.n_features());
    for (std::size_t j = 0; j < row.size(); ++j)
      row[j] = data.X[idx[a]][j] +
               lam * (data.X[idx[b]][j] - data.X[idx[a]][j]);
    append(std::move(row), s);
  }
  return out;
}

Dataset smote(const Dataset& data, int k, RngStream rng, Warnings* warnings) {
  return smote(data, k, rng, Standardizer::fit(data.X), warnings);
}

}  // namespace lungct

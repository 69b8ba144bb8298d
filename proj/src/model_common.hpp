#pragma once

#include <cmath>
#include <vector>

#include "lungct/classifiers.hpp"
#include "lungct/errors.hpp"

namespace lungct::detail {

inline double sigmoid(double t) {
  if (t >= 0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

/// Both classes present and all features finite, or FitError.
inline void check_trainable(const Dataset& data) {
  if (data.n_rows() == 0) throw FitError("empty training set");
  const std::size_t pos = data.count_label(1);
  if (pos == 0 || pos == data.n_rows())
    throw FitError("degenerate labels: only one class present");
  for (const auto& row : data.X)
    for (double v : row)
      if (!std::isfinite(v)) throw FitError("non-finite feature value");
}

/// Axis-aligned binary tree shared by the forest and gbt models.
struct TreeNode {
  int feature = -1;  // -1: leaf
  double threshold = 0.0;  // go left when x[feature] <= threshold
  int left = -1, right = -1;
  double value = 0.0;  // leaf payload
};

struct Tree {
  std::vector<TreeNode> nodes;

  double predict(const std::vector<double>& x) const {
    int i = 0;
    while (nodes[i].feature >= 0)
      i = x[nodes[i].feature] <= nodes[i].threshold ? nodes[i].left
                                                    : nodes[i].right;
    return nodes[i].value;
  }
};

}  // namespace lungct::detail

#include <algorithm>
#include <cmath>

#include "lungct/binning.hpp"
#include "model_common.hpp"

namespace lungct {
namespace {

using detail::BinnedFeatures;
using detail::Tree;
using detail::TreeNode;

double gini2(std::size_t pos, std::size_t m) {
  const double p = static_cast<double>(pos) / static_cast<double>(m);
  return 2.0 * p * (1.0 - p);
}

class ForestModel final : public Model {
 public:
  ForestModel(std::vector<Tree> trees, std::vector<double> importance,
              int n_trees, std::uint64_t seed)
      : trees_(std::move(trees)),
        importance_(std::move(importance)),
        n_trees_(n_trees),
        seed_(seed) {}

  double score(const std::vector<double>& x) const override {
    double votes = 0.0;
    for (const auto& t : trees_) votes += t.predict(x);
    return votes / static_cast<double>(trees_.size());
  }

  const std::vector<double>* importance() const override {
    return &importance_;
  }

  nlohmann::json dump() const override {
    nlohmann::json trees = nlohmann::json::array();
    for (const auto& t : trees_) {
      nlohmann::json nodes = nlohmann::json::array();
      for (const auto& nd : t.nodes)
        nodes.push_back({{"feature", nd.feature},
                         {"threshold", nd.threshold},
                         {"left", nd.left},
                         {"right", nd.right},
                         {"value", nd.value}});
      trees.push_back(std::move(nodes));
    }
    return {{"family", "random_forest"},
            {"hyperparams", {{"n_trees", n_trees_}, {"seed", seed_}}},
            {"params",
             {{"trees", std::move(trees)}, {"importance", importance_}}}};
  }

 private:
  std::vector<Tree> trees_;
  std::vector<double> importance_;
  int n_trees_;
  std::uint64_t seed_;
};

struct TreeBuilder {
  const Dataset& data;
  const BinnedFeatures& bins;
  std::size_t mtry;
  std::size_t n_samples;  // bootstrap size, for node weights
  Tree tree;
  std::vector<double>& importance;
  RngStream& rng;
  std::vector<std::size_t> feature_pool;

  int build(std::vector<std::size_t>& idx) {
    const std::size_t m = idx.size();
    std::size_t pos = 0;
    for (std::size_t i : idx) pos += data.y[i];

    const int node_id = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();

    if (pos == 0 || pos == m || m < 2) {
      tree.nodes[node_id].value = (2 * pos > m) ? 1.0 : 0.0;
      return node_id;
    }

    // mtry candidate features, sampled without replacement; ascending order
    // makes the gain tie-break (lowest feature, then lowest bin) stable.
    for (std::size_t t = 0; t < mtry; ++t)
      std::swap(feature_pool[t],
                feature_pool[t + rng.uniform_int(feature_pool.size() - t)]);
    std::vector<std::size_t> candidates(feature_pool.begin(),
                                        feature_pool.begin() + mtry);
    std::sort(candidates.begin(), candidates.end());

    const double g_node = gini2(pos, m);
    double best_gain = 1e-15;
    int best_f = -1, best_bin = -1;

    std::size_t tot[256], posb[256];
    for (std::size_t f : candidates) {
      const int nb = bins.n_bins(f);
      if (nb < 2) continue;
      std::fill_n(tot, nb, 0);
      std::fill_n(posb, nb, 0);
      for (std::size_t i : idx) {
        const int b = bins.codes[f][i];
        ++tot[b];
        posb[b] += data.y[i];
      }
      std::size_t ml = 0, posl = 0;
      for (int b = 0; b + 1 < nb; ++b) {
        ml += tot[b];
        posl += posb[b];
        if (ml == 0) continue;
        if (ml == m) break;
        const std::size_t mr = m - ml;
        const double gain =
            g_node -
            (static_cast<double>(ml) / m) * gini2(posl, ml) -
            (static_cast<double>(mr) / m) * gini2(pos - posl, mr);
        if (gain > best_gain) {
          best_gain = gain;
          best_f = static_cast<int>(f);
          best_bin = b;
        }
      }
    }

    if (best_f < 0) {
      tree.nodes[node_id].value = (2 * pos > m) ? 1.0 : 0.0;
      return node_id;
    }

    importance[best_f] +=
        (static_cast<double>(m) / static_cast<double>(n_samples)) * best_gain;

    std::vector<std::size_t> left, right;
    for (std::size_t i : idx)
      (bins.codes[best_f][i] <= best_bin ? left : right).push_back(i);
    idx.clear();
    idx.shrink_to_fit();

    const int l = build(left);
    const int r = build(right);
    tree.nodes[node_id].feature = best_f;
    tree.nodes[node_id].threshold = bins.cuts[best_f][best_bin];
    tree.nodes[node_id].left = l;
    tree.nodes[node_id].right = r;
    return node_id;
  }
};

}  // namespace

// Bagged Gini trees grown to purity with sqrt(d) candidate features per
// node. Gini importance is accumulated during growth: node fraction times
// impurity decrease, credited to the split feature, averaged over trees and
// normalized to sum 1.
std::unique_ptr<Model> fit_random_forest(const Dataset& data, int n_trees,
                                         RngStream rng) {
  detail::check_trainable(data);
  if (n_trees < 1) throw ArgumentError("fit_random_forest: n_trees < 1");
  const std::size_t n = data.n_rows();
  const std::size_t d = data.n_features();
  const std::size_t mtry = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::sqrt(static_cast<double>(d))));

  const BinnedFeatures bins = detail::bin_features(data.X, 64);

  std::vector<Tree> trees;
  trees.reserve(n_trees);
  std::vector<double> importance(d, 0.0);

  for (int t = 0; t < n_trees; ++t) {
    RngStream tree_rng = rng.derive("tree/" + std::to_string(t));
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = tree_rng.uniform_int(n);
    std::sort(idx.begin(), idx.end());

    std::vector<double> tree_importance(d, 0.0);
    TreeBuilder builder{data, bins, mtry, n, Tree{}, tree_importance,
                        tree_rng, {}};
    builder.feature_pool.resize(d);
    for (std::size_t f = 0; f < d; ++f) builder.feature_pool[f] = f;
    builder.build(idx);
    trees.push_back(std::move(builder.tree));
    for (std::size_t f = 0; f < d; ++f) importance[f] += tree_importance[f];
  }

  double total = 0.0;
  for (double v : importance) total += v;
  if (total > 0.0)
    for (double& v : importance) v /= total;
  else
    for (double& v : importance) v = 1.0 / static_cast<double>(d);

  return std::make_unique<ForestModel>(std::move(trees), std::move(importance),
                                       n_trees, rng.seed());
}

}  // namespace lungct

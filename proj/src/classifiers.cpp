#include <cmath>

#include "model_common.hpp"

namespace lungct {

const char* family_name(Family family) {
  switch (family) {
    case Family::LogisticL1: return "logistic_l1";
    case Family::SvmRbf: return "svm_rbf";
    case Family::RandomForest: return "random_forest";
    case Family::AdaBoost: return "adaboost";
    case Family::Gbt: return "gbt";
  }
  return "?";
}

Family parse_family(const std::string& name) {
  if (name == "logistic_l1" || name == "logistic") return Family::LogisticL1;
  if (name == "svm_rbf" || name == "svm") return Family::SvmRbf;
  if (name == "random_forest" || name == "forest")
    return Family::RandomForest;
  if (name == "adaboost") return Family::AdaBoost;
  if (name == "gbt") return Family::Gbt;
  throw ArgumentError("unknown model family '" + name + "'");
}

nlohmann::json HyperParams::to_json(Family family) const {
  switch (family) {
    case Family::LogisticL1:
      return {{"lambda", lambda}};
    case Family::SvmRbf:
      return {{"gamma", gamma}, {"c", c}};
    case Family::RandomForest:
      return {{"n_trees", n_trees}};
    case Family::AdaBoost:
      return {{"n_estimators", n_estimators},
              {"learning_rate", learning_rate}};
    case Family::Gbt:
      return {{"max_depth", max_depth},
              {"n_rounds", gbt_rounds},
              {"learning_rate", gbt_learning_rate}};
  }
  return {};
}

ModelSpec ModelSpec::defaults(Family family, std::uint64_t seed) {
  ModelSpec spec;
  spec.family = family;
  spec.seed = seed;
  switch (family) {
    case Family::LogisticL1:
    case Family::SvmRbf:
    case Family::RandomForest:
      spec.grid.push_back(HyperParams{});
      break;
    case Family::AdaBoost:
      for (int n : {50, 100})
        for (double lr : {1.0, 1.33, 1.5, 1.7}) {
          HyperParams hp;
          hp.n_estimators = n;
          hp.learning_rate = lr;
          spec.grid.push_back(hp);
        }
      break;
    case Family::Gbt:
      for (int depth : {3, 5, 7, 9}) {
        HyperParams hp;
        hp.max_depth = depth;
        spec.grid.push_back(hp);
      }
      break;
  }
  return spec;
}

Standardizer Standardizer::fit(const std::vector<std::vector<double>>& X) {
  if (X.empty()) throw ArgumentError("Standardizer::fit: empty matrix");
  const std::size_t d = X[0].size();
  const double n = static_cast<double>(X.size());
  Standardizer z;
  z.mean.assign(d, 0.0);
  z.stddev.assign(d, 0.0);
  for (const auto& row : X)
    for (std::size_t j = 0; j < d; ++j) z.mean[j] += row[j];
  for (std::size_t j = 0; j < d; ++j) z.mean[j] /= n;
  for (const auto& row : X)
    for (std::size_t j = 0; j < d; ++j) {
      const double c = row[j] - z.mean[j];
      z.stddev[j] += c * c;
    }
  for (std::size_t j = 0; j < d; ++j) {
    z.stddev[j] = std::sqrt(z.stddev[j] / n);
    if (z.stddev[j] == 0.0) z.stddev[j] = 1.0;  // constant feature
  }
  return z;
}

Standardizer Standardizer::identity(std::size_t n_features) {
  Standardizer z;
  z.mean.assign(n_features, 0.0);
  z.stddev.assign(n_features, 1.0);
  return z;
}

std::vector<double> Standardizer::apply(const std::vector<double>& x) const {
  std::vector<double> out(x.size());
  for (std::size_t j = 0; j < x.size(); ++j)
    out[j] = (x[j] - mean[j]) / stddev[j];
  return out;
}

double gini_impurity(const std::vector<long long>& counts) {
  long long total = 0;
  for (long long c : counts) {
    if (c < 0) throw ArgumentError("gini_impurity: negative count");
    total += c;
  }
  if (total == 0) throw UndefinedError("gini_impurity: zero total count");
  double g = 0.0;
  for (long long c : counts) {
    const double p = static_cast<double>(c) / static_cast<double>(total);
    g += p * (1.0 - p);
  }
  return g;
}

std::unique_ptr<Model> fit_model(const Dataset& data, Family family,
                                 const HyperParams& hp, const Standardizer& z,
                                 RngStream rng) {
  switch (family) {
    case Family::LogisticL1:
      return fit_logistic_l1(data, z, hp.lambda);
    case Family::SvmRbf:
      return fit_svm_rbf(data, z, hp.gamma, hp.c);
    case Family::RandomForest:
      return fit_random_forest(data, hp.n_trees, rng);
    case Family::AdaBoost:
      return fit_adaboost(data, hp.n_estimators, hp.learning_rate);
    case Family::Gbt:
      return fit_gbt(data, hp.max_depth, hp.gbt_rounds, hp.gbt_learning_rate);
  }
  throw ArgumentError("fit_model: unknown family");
}

std::vector<double> gini_feature_importance(const Model& model) {
  const std::vector<double>* imp = model.importance();
  if (!imp)
    throw StateError("gini_feature_importance: model has no importance");
  return *imp;
}

}  // namespace lungct

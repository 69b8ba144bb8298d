#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "lungct/dataset.hpp"
#include "lungct/rng.hpp"

namespace lungct {

enum class Family { LogisticL1, SvmRbf, RandomForest, AdaBoost, Gbt };

const char* family_name(Family family);
Family parse_family(const std::string& name);

/// Union of all family hyperparameters; each family reads its own fields.
struct HyperParams {
  double lambda = 1.0;  // logistic: L1 strength

  double gamma = 0.1;  // svm: RBF coefficient
  double c = 1.0;      // svm: box constraint

  int n_trees = 100;  // random forest

  int n_estimators = 50;       // adaboost
  double learning_rate = 1.0;  // adaboost

  int max_depth = 3;              // gbt
  int gbt_rounds = 100;           // gbt
  double gbt_learning_rate = 0.1;  // gbt

  nlohmann::json to_json(Family family) const;
};

/// A model family together with its hyperparameter grid (declaration order
/// is the grid-search tie-break order) and the seed of its RNG stream.
struct ModelSpec {
  Family family = Family::RandomForest;
  std::vector<HyperParams> grid;
  std::uint64_t seed = 0;

  /// The per-family default grids: single cells for logistic (lambda 1),
  /// SVM (gamma 0.1, C 1) and forest (100 trees); estimators x learning
  /// rate {50,100} x {1.0,1.33,1.5,1.7} for adaboost; max depth {3,5,7,9}
  /// for gbt.
  static ModelSpec defaults(Family family, std::uint64_t seed = 0);
};

/// Per-feature z-score parameters, fit on a training fold only.
struct Standardizer {
  std::vector<double> mean, stddev;

  static Standardizer fit(const std::vector<std::vector<double>>& X);
  static Standardizer identity(std::size_t n_features);
  std::vector<double> apply(const std::vector<double>& x) const;
};

/// A fitted classifier. Immutable and safe to share across threads.
/// score() consumes raw (unstandardized) features; scale-sensitive families
/// apply their stored standardization internally.
class Model {
 public:
  virtual ~Model() = default;
  virtual double score(const std::vector<double>& x) const = 0;
  virtual const std::vector<double>* importance() const { return nullptr; }
  virtual nlohmann::json dump() const = 0;
};

/// Gini impurity sum p_i (1 - p_i) of per-class counts.
double gini_impurity(const std::vector<long long>& counts);

std::unique_ptr<Model> fit_logistic_l1(const Dataset& data,
                                       const Standardizer& z,
                                       double lambda = 1.0);
std::unique_ptr<Model> fit_svm_rbf(const Dataset& data, const Standardizer& z,
                                   double gamma = 0.1, double c = 1.0);
std::unique_ptr<Model> fit_random_forest(const Dataset& data, int n_trees,
                                         RngStream rng);
std::unique_ptr<Model> fit_adaboost(const Dataset& data, int n_estimators,
                                    double learning_rate);
std::unique_ptr<Model> fit_gbt(const Dataset& data, int max_depth,
                               int n_rounds = 100,
                               double learning_rate = 0.1);

std::unique_ptr<Model> fit_model(const Dataset& data, Family family,
                                 const HyperParams& hp, const Standardizer& z,
                                 RngStream rng);

/// Normalized Gini importance of a fitted forest; StateError when the model
/// carries no importance vector.
std::vector<double> gini_feature_importance(const Model& model);

/// Minority class oversampling: synthetic rows are convex combinations of a
/// minority row and one of its k nearest minority neighbors (Euclidean on
/// standardized features), appended until classes balance. Majority rows and
/// original row order are untouched.
Dataset smote(const Dataset& data, int k, RngStream rng,
              const Standardizer& z, Warnings* warnings = nullptr);
Dataset smote(const Dataset& data, int k, RngStream rng,
              Warnings* warnings = nullptr);

// Introspection hooks for tests and diagnostics. Each throws StateError if
// the model is not of the expected family.
struct LogisticParams {
  std::vector<double> weights;  // on standardized features
  double bias;
};
LogisticParams logistic_params(const Model& model);
double svm_dual_objective(const Model& model);
struct StumpInfo {
  int feature;
  double threshold;
  int polarity;  // +1: left side predicts positive
  double alpha;
};
std::vector<StumpInfo> adaboost_stumps(const Model& model);
std::vector<double> adaboost_weight_sums(const Model& model);

/// Model formed by the first n_estimators stumps of a fitted AdaBoost model.
/// Boosting rounds never depend on later ones, so this equals a direct fit
/// with the smaller budget.
std::unique_ptr<Model> adaboost_prefix(const Model& model, int n_estimators);
double gbt_raw_prediction(const Model& model, const std::vector<double>& x);
std::vector<double> gbt_loss_trace(const Model& model);

}  // namespace lungct

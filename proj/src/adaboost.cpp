#include <algorithm>
#include <cmath>

#include "lungct/binning.hpp"
#include "model_common.hpp"

namespace lungct {
namespace {

using detail::BinnedFeatures;
using detail::sigmoid;

struct Stump {
  int feature = -1;
  double threshold = 0.0;
  int polarity = 1;  // +1: left side (x <= threshold) predicts positive
  double alpha = 0.0;

  int predict(const std::vector<double>& x) const {
    return x[feature] <= threshold ? polarity : -polarity;
  }
};

class AdaBoostModel final : public Model {
 public:
  AdaBoostModel(std::vector<Stump> stumps, std::vector<double> weight_sums,
                int n_estimators, double learning_rate)
      : stumps_(std::move(stumps)),
        weight_sums_(std::move(weight_sums)),
        n_estimators_(n_estimators),
        learning_rate_(learning_rate) {}

  double score(const std::vector<double>& x) const override {
    double margin = 0.0, alpha_total = 0.0;
    for (const auto& s : stumps_) {
      margin += s.alpha * s.predict(x);
      alpha_total += s.alpha;
    }
    if (alpha_total > 0.0) margin /= alpha_total;
    return sigmoid(margin);
  }

  nlohmann::json dump() const override {
    nlohmann::json stumps = nlohmann::json::array();
    for (const auto& s : stumps_)
      stumps.push_back({{"feature", s.feature},
                        {"threshold", s.threshold},
                        {"polarity", s.polarity},
                        {"alpha", s.alpha}});
    return {{"family", "adaboost"},
            {"hyperparams",
             {{"n_estimators", n_estimators_},
              {"learning_rate", learning_rate_}}},
            {"params", {{"stumps", std::move(stumps)}}}};
  }

  const std::vector<Stump>& stumps() const { return stumps_; }
  const std::vector<double>& weight_sums() const { return weight_sums_; }
  double learning_rate() const { return learning_rate_; }

 private:
  std::vector<Stump> stumps_;
  std::vector<double> weight_sums_;  // sample-weight total after each round
  int n_estimators_;
  double learning_rate_;
};

}  // namespace

// SAMME boosting of depth-1 stumps. Each round picks the stump minimizing
// weighted error by exhaustive scan over features and bin boundaries; the
// loop stops early when a stump is perfect or no stump beats chance.
std::unique_ptr<Model> fit_adaboost(const Dataset& data, int n_estimators,
                                    double learning_rate) {
  detail::check_trainable(data);
  if (n_estimators < 1 || learning_rate <= 0)
    throw ArgumentError("fit_adaboost: bad hyperparameters");
  const std::size_t n = data.n_rows();
  const std::size_t d = data.n_features();
  const BinnedFeatures bins = detail::bin_features(data.X, 64);

  std::vector<double> w(n, 1.0 / static_cast<double>(n));
  std::vector<Stump> stumps;
  std::vector<double> weight_sums;

  double wpos_bin[256], wneg_bin[256];
  for (int round = 0; round < n_estimators; ++round) {
    double best_err = 2.0;
    Stump best;
    for (std::size_t f = 0; f < d; ++f) {
      const int nb = bins.n_bins(f);
      if (nb < 2) continue;
      std::fill_n(wpos_bin, nb, 0.0);
      std::fill_n(wneg_bin, nb, 0.0);
      double wpos = 0.0, wneg = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const int b = bins.codes[f][i];
        if (data.y[i])
          wpos_bin[b] += w[i], wpos += w[i];
        else
          wneg_bin[b] += w[i], wneg += w[i];
      }
      double lpos = 0.0, lneg = 0.0;
      for (int b = 0; b + 1 < nb; ++b) {
        lpos += wpos_bin[b];
        lneg += wneg_bin[b];
        // polarity +1: positives right of the split and negatives left of
        // it are misclassified; polarity -1 is the complement.
        const double err_plus = (wpos - lpos) + lneg;
        const double err_minus = lpos + (wneg - lneg);
        if (err_plus < best_err) {
          best_err = err_plus;
          best = {static_cast<int>(f), bins.cuts[f][b], 1, 0.0};
        }
        if (err_minus < best_err) {
          best_err = err_minus;
          best = {static_cast<int>(f), bins.cuts[f][b], -1, 0.0};
        }
      }
    }

    if (best.feature < 0 || best_err >= 0.5) break;
    const double clamped = std::clamp(best_err, 1e-12, 1.0 - 1e-12);
    best.alpha = learning_rate * std::log((1.0 - clamped) / clamped);
    stumps.push_back(best);
    if (best_err <= 1e-12) break;

    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const int h = best.predict(data.X[i]);
      const int yi = data.y[i] ? 1 : -1;
      if (h != yi) w[i] *= std::exp(best.alpha);
      sum += w[i];
    }
    for (double& wi : w) wi /= sum;
    double check = 0.0;
    for (double wi : w) check += wi;
    weight_sums.push_back(check);
  }

  if (stumps.empty()) throw FitError("fit_adaboost: no usable stump");
  return std::make_unique<AdaBoostModel>(std::move(stumps),
                                         std::move(weight_sums), n_estimators,
                                         learning_rate);
}

std::unique_ptr<Model> adaboost_prefix(const Model& model, int n_estimators) {
  const auto* m = dynamic_cast<const AdaBoostModel*>(&model);
  if (!m) throw StateError("adaboost_prefix: not an adaboost model");
  if (n_estimators < 1)
    throw ArgumentError("adaboost_prefix: bad stump budget");
  const auto& stumps = m->stumps();
  const auto& sums = m->weight_sums();
  const std::size_t k =
      std::min<std::size_t>(stumps.size(), static_cast<std::size_t>(n_estimators));
  std::vector<Stump> head(stumps.begin(), stumps.begin() + k);
  std::vector<double> head_sums(sums.begin(),
                                sums.begin() + std::min(sums.size(), k));
  return std::make_unique<AdaBoostModel>(std::move(head), std::move(head_sums),
                                         n_estimators, m->learning_rate());
}

std::vector<StumpInfo> adaboost_stumps(const Model& model) {
  const auto* m = dynamic_cast<const AdaBoostModel*>(&model);
  if (!m) throw StateError("adaboost_stumps: not an adaboost model");
  std::vector<StumpInfo> out;
  for (const auto& s : m->stumps())
    out.push_back({s.feature, s.threshold, s.polarity, s.alpha});
  return out;
}

std::vector<double> adaboost_weight_sums(const Model& model) {
  const auto* m = dynamic_cast<const AdaBoostModel*>(&model);
  if (!m) throw StateError("adaboost_weight_sums: not an adaboost model");
  return m->weight_sums();
}

}  // namespace lungct

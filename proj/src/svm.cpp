#include <algorithm>
#include <cmath>

#include "model_common.hpp"

namespace lungct {
namespace {

class SvmModel final : public Model {
 public:
  SvmModel(Standardizer z, std::vector<std::vector<double>> sv,
           std::vector<double> coeff, double b, double gamma, double c,
           double dual)
      : z_(std::move(z)),
        sv_(std::move(sv)),
        coeff_(std::move(coeff)),
        b_(b),
        gamma_(gamma),
        c_(c),
        dual_(dual) {}

  // Raw decision value; ROC consumes it directly.
  double score(const std::vector<double>& x) const override {
    const auto xs = z_.apply(x);
    double u = b_;
    for (std::size_t i = 0; i < sv_.size(); ++i) {
      double d2 = 0.0;
      for (std::size_t j = 0; j < xs.size(); ++j) {
        const double diff = xs[j] - sv_[i][j];
        d2 += diff * diff;
      }
      u += coeff_[i] * std::exp(-gamma_ * d2);
    }
    return u;
  }

  nlohmann::json dump() const override {
    return {{"family", "svm_rbf"},
            {"hyperparams", {{"gamma", gamma_}, {"c", c_}}},
            {"standardization", {{"mean", z_.mean}, {"stddev", z_.stddev}}},
            {"params",
             {{"support_vectors", sv_},
              {"dual_coeff", coeff_},
              {"bias", b_}}}};
  }

  double dual_objective() const { return dual_; }

 private:
  Standardizer z_;
  std::vector<std::vector<double>> sv_;  // standardized support vectors
  std::vector<double> coeff_;            // alpha_i * y_i
  double b_;
  double gamma_, c_;
  double dual_;
};

}  // namespace

// Soft-margin RBF SVM solved with SMO-style pairwise updates. The partner
// index is chosen by the max |E_i - E_j| heuristic with deterministic
// fallbacks, so fits are reproducible.
std::unique_ptr<Model> fit_svm_rbf(const Dataset& data, const Standardizer& z,
                                   double gamma, double c) {
  detail::check_trainable(data);
  if (gamma <= 0 || c <= 0)
    throw ArgumentError("fit_svm_rbf: gamma and c must be positive");
  const std::size_t n = data.n_rows();

  std::vector<std::vector<double>> Xs(n);
  for (std::size_t i = 0; i < n; ++i) Xs[i] = z.apply(data.X[i]);
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) y[i] = data.y[i] ? 1.0 : -1.0;

  std::vector<double> K(n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) {
      double d2 = 0.0;
      for (std::size_t t = 0; t < Xs[i].size(); ++t) {
        const double diff = Xs[i][t] - Xs[j][t];
        d2 += diff * diff;
      }
      K[i * n + j] = K[j * n + i] = std::exp(-gamma * d2);
    }

  std::vector<double> alpha(n, 0.0), E(n);
  double b = 0.0;
  auto decision = [&](std::size_t i) {
    double u = b;
    for (std::size_t t = 0; t < n; ++t)
      if (alpha[t] > 0) u += alpha[t] * y[t] * K[t * n + i];
    return u;
  };
  for (std::size_t i = 0; i < n; ++i) E[i] = decision(i) - y[i];

  const double tol = 1e-3;
  const double eps = 1e-12;

  auto take_step = [&](std::size_t i1, std::size_t i2) -> bool {
    if (i1 == i2) return false;
    const double a1_old = alpha[i1], a2_old = alpha[i2];
    const double y1 = y[i1], y2 = y[i2];
    const double e1 = E[i1], e2 = E[i2];
    const double s = y1 * y2;
    double lo, hi;
    if (s < 0) {
      lo = std::max(0.0, a2_old - a1_old);
      hi = std::min(c, c + a2_old - a1_old);
    } else {
      lo = std::max(0.0, a1_old + a2_old - c);
      hi = std::min(c, a1_old + a2_old);
    }
    if (lo >= hi) return false;
    const double k11 = K[i1 * n + i1], k12 = K[i1 * n + i2],
                 k22 = K[i2 * n + i2];
    const double eta = k11 + k22 - 2.0 * k12;
    double a2;
    if (eta > 0) {
      a2 = a2_old + y2 * (e1 - e2) / eta;
      a2 = std::clamp(a2, lo, hi);
    } else {
      // Degenerate curvature: move to the better endpoint.
      auto obj_at = [&](double a2_try) {
        const double a1_try = a1_old + s * (a2_old - a2_try);
        const double d1 = a1_try - a1_old, d2 = a2_try - a2_old;
        // Change in dual objective (up to constants).
        return d1 + d2 -
               y1 * d1 * (e1 + y1 * b) - y2 * d2 * (e2 + y2 * b) -
               0.5 * (k11 * d1 * d1 + k22 * d2 * d2) - s * k12 * d1 * d2;
      };
      a2 = obj_at(lo) > obj_at(hi) + eps ? lo : hi;
    }
    if (std::abs(a2 - a2_old) < eps * (a2 + a2_old + eps)) return false;
    const double a1 = a1_old + s * (a2_old - a2);

    const double b1 = b - e1 - y1 * (a1 - a1_old) * k11 -
                      y2 * (a2 - a2_old) * k12;
    const double b2 = b - e2 - y1 * (a1 - a1_old) * k12 -
                      y2 * (a2 - a2_old) * k22;
    double b_new;
    if (a1 > 0 && a1 < c)
      b_new = b1;
    else if (a2 > 0 && a2 < c)
      b_new = b2;
    else
      b_new = 0.5 * (b1 + b2);

    const double db = b_new - b;
    for (std::size_t t = 0; t < n; ++t)
      E[t] += y1 * (a1 - a1_old) * K[i1 * n + t] +
              y2 * (a2 - a2_old) * K[i2 * n + t] + db;
    alpha[i1] = a1;
    alpha[i2] = a2;
    b = b_new;
    return true;
  };

  auto examine = [&](std::size_t i2) -> bool {
    const double y2 = y[i2], a2 = alpha[i2], e2 = E[i2];
    const double r2 = e2 * y2;
    if (!((r2 < -tol && a2 < c) || (r2 > tol && a2 > 0))) return false;
    // Partner by max |E1 - E2| among non-bound points.
    std::size_t best = n;
    double best_gap = -1.0;
    for (std::size_t t = 0; t < n; ++t) {
      if (t == i2 || alpha[t] <= 0 || alpha[t] >= c) continue;
      const double gap = std::abs(E[t] - e2);
      if (gap > best_gap) {
        best_gap = gap;
        best = t;
      }
    }
    if (best < n && take_step(best, i2)) return true;
    for (std::size_t t = 0; t < n; ++t)
      if (t != i2 && alpha[t] > 0 && alpha[t] < c && take_step(t, i2))
        return true;
    for (std::size_t t = 0; t < n; ++t)
      if (t != i2 && !(alpha[t] > 0 && alpha[t] < c) && take_step(t, i2))
        return true;
    return false;
  };

  bool examine_all = true;
  int changed = 0;
  const int max_epochs = 1000;
  for (int epoch = 0; epoch < max_epochs; ++epoch) {
    changed = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (!examine_all && !(alpha[i] > 0 && alpha[i] < c)) continue;
      changed += examine(i);
    }
    if (examine_all) {
      if (changed == 0) break;
      examine_all = false;
    } else if (changed == 0) {
      examine_all = true;
    }
  }

  double dual = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (alpha[i] <= 0) continue;
    dual += alpha[i];
    for (std::size_t j = 0; j < n; ++j)
      if (alpha[j] > 0)
        dual -= 0.5 * alpha[i] * alpha[j] * y[i] * y[j] * K[i * n + j];
  }

  std::vector<std::vector<double>> sv;
  std::vector<double> coeff;
  for (std::size_t i = 0; i < n; ++i)
    if (alpha[i] > 0) {
      sv.push_back(Xs[i]);
      coeff.push_back(alpha[i] * y[i]);
    }
  return std::make_unique<SvmModel>(z, std::move(sv), std::move(coeff), b,
                                    gamma, c, dual);
}

double svm_dual_objective(const Model& model) {
  const auto* m = dynamic_cast<const SvmModel*>(&model);
  if (!m) throw StateError("svm_dual_objective: not an SVM model");
  return m->dual_objective();
}

}  // namespace lungct

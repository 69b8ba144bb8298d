#include <algorithm>
#include <cmath>

#include "model_common.hpp"

namespace lungct {
namespace {

using detail::sigmoid;

class LogisticModel final : public Model {
 public:
  LogisticModel(Standardizer z, std::vector<double> w, double b, double lambda)
      : z_(std::move(z)), w_(std::move(w)), b_(b), lambda_(lambda) {}

  double score(const std::vector<double>& x) const override {
    const auto xs = z_.apply(x);
    double t = b_;
    for (std::size_t j = 0; j < w_.size(); ++j) t += w_[j] * xs[j];
    return sigmoid(t);
  }

  nlohmann::json dump() const override {
    return {{"family", "logistic_l1"},
            {"hyperparams", {{"lambda", lambda_}}},
            {"standardization", {{"mean", z_.mean}, {"stddev", z_.stddev}}},
            {"params", {{"weights", w_}, {"bias", b_}}}};
  }

  const std::vector<double>& weights() const { return w_; }
  double bias() const { return b_; }

 private:
  Standardizer z_;
  std::vector<double> w_;
  double b_;
  double lambda_;
};

double soft_threshold(double v, double t) {
  if (v > t) return v - t;
  if (v < -t) return v + t;
  return 0.0;
}

}  // namespace

// L1-regularized logistic regression on standardized features, solved by
// FISTA with the bias left unpenalized. The penalty is lambda/n * ||w||_1
// on top of the mean logistic loss, matching the sum-loss-plus-||w||_1
// convention of common tooling at C = 1/lambda.
std::unique_ptr<Model> fit_logistic_l1(const Dataset& data,
                                       const Standardizer& z, double lambda) {
  detail::check_trainable(data);
  const std::size_t n = data.n_rows();
  const std::size_t d = data.n_features();

  std::vector<std::vector<double>> Xs(n);
  for (std::size_t i = 0; i < n; ++i) Xs[i] = z.apply(data.X[i]);
  std::vector<double> ypm(n);  // labels as +-1
  for (std::size_t i = 0; i < n; ++i) ypm[i] = data.y[i] ? 1.0 : -1.0;

  // Lipschitz bound for the mean-loss gradient: ||[X 1]||_F^2 / (4n).
  double fro = static_cast<double>(n);  // bias column
  for (const auto& row : Xs)
    for (double v : row) fro += v * v;
  const double step = 1.0 / std::max(fro / (4.0 * n), 1e-12);
  const double reg = lambda / static_cast<double>(n);

  std::vector<double> w(d, 0.0), w_prev(d, 0.0), v(d, 0.0);
  double b = 0.0, b_prev = 0.0, vb = 0.0;
  double t_accel = 1.0;
  std::vector<double> grad(d);

  const int max_iters = 10000;
  const double tol = 1e-6;
  for (int iter = 0; iter < max_iters; ++iter) {
    // Gradient of the mean logistic loss at the extrapolated point.
    std::fill(grad.begin(), grad.end(), 0.0);
    double grad_b = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double m = vb;
      for (std::size_t j = 0; j < d; ++j) m += v[j] * Xs[i][j];
      const double coeff = -ypm[i] * sigmoid(-ypm[i] * m);
      for (std::size_t j = 0; j < d; ++j) grad[j] += coeff * Xs[i][j];
      grad_b += coeff;
    }
    for (std::size_t j = 0; j < d; ++j) grad[j] /= static_cast<double>(n);
    grad_b /= static_cast<double>(n);

    w_prev = w;
    b_prev = b;
    for (std::size_t j = 0; j < d; ++j)
      w[j] = soft_threshold(v[j] - step * grad[j], step * reg);
    b = vb - step * grad_b;

    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t_accel * t_accel));
    const double momentum = (t_accel - 1.0) / t_next;
    for (std::size_t j = 0; j < d; ++j)
      v[j] = w[j] + momentum * (w[j] - w_prev[j]);
    vb = b + momentum * (b - b_prev);
    t_accel = t_next;

    // Subgradient optimality residual at the new iterate. Checking it every
    // iteration would double the gradient work, so it runs periodically;
    // between checks the solver can only keep converging.
    if (iter % 8 != 7 && iter + 1 < max_iters) continue;
    std::fill(grad.begin(), grad.end(), 0.0);
    grad_b = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double m = b;
      for (std::size_t j = 0; j < d; ++j) m += w[j] * Xs[i][j];
      const double coeff = -ypm[i] * sigmoid(-ypm[i] * m);
      for (std::size_t j = 0; j < d; ++j) grad[j] += coeff * Xs[i][j];
      grad_b += coeff;
    }
    double residual = std::abs(grad_b / static_cast<double>(n));
    for (std::size_t j = 0; j < d; ++j) {
      const double g = grad[j] / static_cast<double>(n);
      double r;
      if (w[j] > 0)
        r = std::abs(g + reg);
      else if (w[j] < 0)
        r = std::abs(g - reg);
      else
        r = std::max(std::abs(g) - reg, 0.0);
      residual = std::max(residual, r);
    }
    if (residual <= tol) break;
  }

  return std::make_unique<LogisticModel>(z, std::move(w), b, lambda);
}

LogisticParams logistic_params(const Model& model) {
  const auto* m = dynamic_cast<const LogisticModel*>(&model);
  if (!m) throw StateError("logistic_params: not a logistic model");
  return {m->weights(), m->bias()};
}

}  // namespace lungct

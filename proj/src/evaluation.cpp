#include "lungct/evaluation.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <numeric>

#include "lungct/errors.hpp"

namespace lungct {
namespace {

Dataset subset(const Dataset& data, const std::vector<std::size_t>& rows) {
  Dataset out;
  for (std::size_t i : rows) {
    out.X.push_back(data.X[i]);
    out.y.push_back(data.y[i]);
    out.patient_ids.push_back(data.patient_ids[i]);
  }
  return out;
}

bool both_classes(const std::vector<int>& y) {
  bool pos = false, neg = false;
  for (int v : y) (v ? pos : neg) = true;
  return pos && neg;
}

}  // namespace

RocCurve roc_points(const std::vector<double>& scores,
                    const std::vector<int>& labels) {
  if (scores.size() != labels.size())
    throw ArgumentError("roc_points: size mismatch");
  long long p = 0, n = 0;
  for (int l : labels) (l ? p : n) += 1;
  if (p == 0 || n == 0)
    throw UndefinedError("roc_points: both classes required");

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return scores[a] > scores[b];
  });

  RocCurve curve;
  curve.points.push_back({0.0, 0.0});
  long long tp = 0, fp = 0;
  std::size_t i = 0;
  while (i < order.size()) {
    // One threshold per distinct score: tied scores move together.
    const double s = scores[order[i]];
    while (i < order.size() && scores[order[i]] == s) {
      (labels[order[i]] ? tp : fp) += 1;
      ++i;
    }
    curve.points.push_back({static_cast<double>(fp) / n,
                            static_cast<double>(tp) / p});
  }
  if (curve.points.back().fpr != 1.0 || curve.points.back().tpr != 1.0)
    curve.points.push_back({1.0, 1.0});
  return curve;
}

double auc(const RocCurve& curve) {
  double area = 0.0;
  for (std::size_t i = 1; i < curve.points.size(); ++i) {
    const auto& a = curve.points[i - 1];
    const auto& b = curve.points[i];
    area += (b.fpr - a.fpr) * 0.5 * (a.tpr + b.tpr);
  }
  return area;
}

double auc_of_scores(const std::vector<double>& scores,
                     const std::vector<int>& labels) {
  return auc(roc_points(scores, labels));
}

double point_biserial(const std::vector<double>& feature,
                      const std::vector<int>& outcome) {
  if (feature.size() != outcome.size() || feature.empty())
    throw ArgumentError("point_biserial: bad inputs");
  if (!both_classes(outcome))
    throw UndefinedError("point_biserial: outcome has a single class");
  const double n = static_cast<double>(feature.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < feature.size(); ++i) {
    mx += feature[i];
    my += outcome[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < feature.size(); ++i) {
    const double dx = feature[i] - mx, dy = outcome[i] - my;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  if (sxx == 0.0)
    throw UndefinedError("point_biserial: constant feature");
  return sxy / std::sqrt(sxx * syy);
}

HyperParams grid_search(const Dataset& train, const ModelSpec& spec,
                        const Standardizer& z, RngStream rng) {
  if (spec.grid.empty()) throw ArgumentError("grid_search: empty grid");
  if (spec.grid.size() == 1) return spec.grid[0];
  if (!both_classes(train.y))
    throw FitError("grid_search: training data has a single class");

  // Stratified 3-fold assignment.
  std::vector<std::size_t> pos, neg;
  for (std::size_t i = 0; i < train.n_rows(); ++i)
    (train.y[i] ? pos : neg).push_back(i);
  RngStream assign = rng.derive("assign");
  assign.derive("pos").shuffle(pos);
  assign.derive("neg").shuffle(neg);
  std::vector<int> fold_of(train.n_rows());
  for (std::size_t i = 0; i < pos.size(); ++i) fold_of[pos[i]] = i % 3;
  for (std::size_t i = 0; i < neg.size(); ++i) fold_of[neg[i]] = i % 3;

  std::array<Dataset, 3> dtrs, dvas;
  std::array<bool, 3> fold_ok{};
  for (int f = 0; f < 3; ++f) {
    std::vector<std::size_t> tr, va;
    for (std::size_t i = 0; i < train.n_rows(); ++i)
      (fold_of[i] == f ? va : tr).push_back(i);
    dtrs[f] = subset(train, tr);
    dvas[f] = subset(train, va);
    fold_ok[f] = both_classes(dtrs[f].y) && both_classes(dvas[f].y);
  }

  // AdaBoost cells differing only in stump budget share one fit per
  // learning rate: the smaller budget's model is a prefix of the larger
  // one's, so the per-cell scores are unchanged.
  const bool share_ada = spec.family == Family::AdaBoost;
  std::array<std::map<double, std::unique_ptr<Model>>, 3> ada_cache;
  std::map<double, int> ada_budget;
  if (share_ada)
    for (const auto& hp : spec.grid)
      ada_budget[hp.learning_rate] =
          std::max(ada_budget[hp.learning_rate], hp.n_estimators);

  double best_score = -std::numeric_limits<double>::infinity();
  std::size_t best_cell = spec.grid.size();
  std::string last_error = "no usable grid cell";

  for (std::size_t ci = 0; ci < spec.grid.size(); ++ci) {
    double total = 0.0;
    int used = 0;
    try {
      for (int f = 0; f < 3; ++f) {
        if (!fold_ok[f]) continue;
        std::unique_ptr<Model> inner;
        if (share_ada) {
          auto& shared = ada_cache[f][spec.grid[ci].learning_rate];
          if (!shared)
            shared = fit_adaboost(dtrs[f], ada_budget[spec.grid[ci].learning_rate],
                                  spec.grid[ci].learning_rate);
          inner = adaboost_prefix(*shared, spec.grid[ci].n_estimators);
        } else {
          inner = fit_model(
              dtrs[f], spec.family, spec.grid[ci], z,
              rng.derive("cell" + std::to_string(ci) + "/fold" +
                         std::to_string(f)));
        }
        std::vector<double> scores;
        scores.reserve(dvas[f].n_rows());
        for (const auto& row : dvas[f].X) scores.push_back(inner->score(row));
        total += auc_of_scores(scores, dvas[f].y);
        ++used;
      }
    } catch (const FitError& e) {
      last_error = e.what();
      continue;
    }
    if (used == 0) continue;
    const double mean = total / used;
    if (mean > best_score) {
      best_score = mean;
      best_cell = ci;
    }
  }
  if (best_cell == spec.grid.size()) throw FitError(last_error);
  return spec.grid[best_cell];
}

LopoResult lopo_scores(const Dataset& dataset, const ModelSpec& spec,
                       std::uint64_t seed) {
  if (dataset.n_rows() < 3)
    throw ArgumentError("lopo_scores: need at least 3 patients");
  if (!both_classes(dataset.y))
    throw FitError("lopo_scores: dataset has a single class");

  // Canonical patient order makes fold contents, SMOTE draws and therefore
  // scores independent of input row permutation.
  std::vector<std::size_t> order(dataset.n_rows());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return dataset.patient_ids[a] < dataset.patient_ids[b];
  });
  const Dataset data = subset(dataset, order);
  const std::size_t n = data.n_rows();

  LopoResult result;
  result.patient_ids = data.patient_ids;
  result.labels = data.y;
  result.scores.assign(n, 0.0);
  result.has_score.assign(n, 0);

  std::vector<double> importance_sum;
  int importance_folds = 0;

  const RngStream root(seed);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<std::size_t> rows;
    rows.reserve(n - 1);
    for (std::size_t j = 0; j < n; ++j)
      if (j != i) rows.push_back(j);
    Dataset train = subset(data, rows);
    if (!both_classes(train.y)) {
      result.warnings.push_back("fold " + data.patient_ids[i] +
                                " skipped: training part lost a class");
      continue;
    }
    const Standardizer z = Standardizer::fit(train.X);
    RngStream fold_rng = root.derive("fold/" + data.patient_ids[i]);
    const Dataset balanced =
        smote(train, 5, fold_rng.derive("smote"), z, &result.warnings);
    const HyperParams hp =
        spec.grid.size() == 1
            ? spec.grid[0]
            : grid_search(balanced, spec, z, fold_rng.derive("grid"));
    const auto model =
        fit_model(balanced, spec.family, hp, z, fold_rng.derive("fit"));
    result.scores[i] = model->score(data.X[i]);
    result.has_score[i] = 1;
    if (const auto* imp = model->importance()) {
      if (importance_sum.empty()) importance_sum.assign(imp->size(), 0.0);
      for (std::size_t j = 0; j < imp->size(); ++j)
        importance_sum[j] += (*imp)[j];
      ++importance_folds;
    }
  }

  if (importance_folds > 0) {
    double total = 0.0;
    for (double v : importance_sum) total += v;
    result.importance.resize(importance_sum.size());
    for (std::size_t j = 0; j < importance_sum.size(); ++j)
      result.importance[j] = total > 0 ? importance_sum[j] / total
                                       : 1.0 / importance_sum.size();
  }
  return result;
}

ExperimentResult repeated_experiment(const Dataset& dataset,
                                     const ModelSpec& spec, int repeats,
                                     std::uint64_t base_seed) {
  if (repeats < 1)
    throw ArgumentError("repeated_experiment: repeats must be >= 1");

  ExperimentResult result;
  result.family = spec.family;

  for (int r = 0; r < repeats; ++r) {
    LopoResult run = lopo_scores(dataset, spec, base_seed + r);
    std::vector<double> scores;
    std::vector<int> labels;
    for (std::size_t i = 0; i < run.scores.size(); ++i)
      if (run.has_score[i]) {
        scores.push_back(run.scores[i]);
        labels.push_back(run.labels[i]);
      }
    result.auc_runs.push_back(auc_of_scores(scores, labels));
    if (r == 0) {
      result.patient_ids = run.patient_ids;
      result.labels = run.labels;
      result.scores = run.scores;
      result.has_score = run.has_score;
      result.importance = run.importance;
      result.roc = roc_points(scores, labels);
      for (const auto& w : run.warnings) result.warnings.push_back(w);
    }
  }

  const double n = static_cast<double>(repeats);
  double mean = 0.0;
  for (double a : result.auc_runs) mean += a;
  mean /= n;
  result.auc_mean = mean;
  if (repeats == 1) {
    result.ci_low = result.ci_high = mean;
    result.warnings.push_back(
        "repeats = 1: confidence interval degenerates to the point estimate");
  } else {
    double var = 0.0;
    for (double a : result.auc_runs) var += (a - mean) * (a - mean);
    var /= (n - 1.0);
    const double half = 1.96 * std::sqrt(var) / std::sqrt(n);
    result.ci_low = mean - half;
    result.ci_high = mean + half;
  }

  // Correlations on raw features; Pearson is scale-invariant anyway.
  const std::size_t d = dataset.n_features();
  result.correlations.assign(d, std::numeric_limits<double>::quiet_NaN());
  for (std::size_t j = 0; j < d; ++j) {
    std::vector<double> column;
    column.reserve(dataset.n_rows());
    for (const auto& row : dataset.X) column.push_back(row[j]);
    try {
      result.correlations[j] = point_biserial(column, dataset.y);
    } catch (const UndefinedError&) {
      // left as NaN
    }
  }
  return result;
}

CohortSummary cohort_summary(const std::vector<PatientRecord>& records) {
  if (records.empty()) throw EmptyInputError("cohort_summary: no records");
  CohortSummary s;
  for (const auto& r : records) {
    auto& c = r.sex == Sex::Male ? s.male : s.female;
    (r.outcome_death ? c.died : c.survived) += 1;
    (r.outcome_icu ? c.admitted : c.not_admitted) += 1;
  }
  return s;
}

std::string render_cohort_table(const CohortSummary& s) {
  char buf[256];
  std::string out;
  out += "Sex     Survived  Not survived  Not admitted  Admitted\n";
  std::snprintf(buf, sizeof buf, "Male    %-9lld %-13lld %-13lld %lld\n",
                s.male.survived, s.male.died, s.male.not_admitted,
                s.male.admitted);
  out += buf;
  std::snprintf(buf, sizeof buf, "Female  %-9lld %-13lld %-13lld %lld\n",
                s.female.survived, s.female.died, s.female.not_admitted,
                s.female.admitted);
  out += buf;
  return out;
}

}  // namespace lungct

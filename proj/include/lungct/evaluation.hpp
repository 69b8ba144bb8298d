#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lungct/classifiers.hpp"
#include "lungct/dataset.hpp"
#include "lungct/ehr.hpp"

namespace lungct {

struct RocPoint {
  double fpr, tpr;
};

/// ROC polyline from (0,0) to (1,1); fpr and tpr are non-decreasing.
/// Tied scores share a single threshold, so the trapezoidal area equals
/// the Mann-Whitney statistic with half credit for ties.
struct RocCurve {
  std::vector<RocPoint> points;
};

RocCurve roc_points(const std::vector<double>& scores,
                    const std::vector<int>& labels);

/// Trapezoidal area under the curve.
double auc(const RocCurve& curve);

/// Convenience: AUC of collated scores/labels.
double auc_of_scores(const std::vector<double>& scores,
                     const std::vector<int>& labels);

/// Pearson correlation between a feature column and a 0/1 outcome.
double point_biserial(const std::vector<double>& feature,
                      const std::vector<int>& outcome);

/// Per-patient leave-one-patient-out scores. Folds whose training part
/// loses a class are skipped with a warning (has_score = false).
struct LopoResult {
  std::vector<std::string> patient_ids;
  std::vector<int> labels;
  std::vector<double> scores;
  std::vector<char> has_score;
  std::vector<double> importance;  // averaged fold importances, or empty
  Warnings warnings;
};

LopoResult lopo_scores(const Dataset& dataset, const ModelSpec& spec,
                       std::uint64_t seed);

/// Chooses the grid cell maximizing mean AUC under stratified 3-fold inner
/// CV on the training data; a single-cell grid is returned without inner
/// CV; ties go to the earlier declared cell.
HyperParams grid_search(const Dataset& train, const ModelSpec& spec,
                        const Standardizer& z, RngStream rng);

struct ExperimentResult {
  Family family;
  std::vector<std::string> patient_ids;
  std::vector<int> labels;
  std::vector<double> scores;     // collated from run 0
  std::vector<char> has_score;
  RocCurve roc;                   // from run 0
  std::vector<double> auc_runs;
  double auc_mean = 0.0, ci_low = 0.0, ci_high = 0.0;
  std::vector<double> importance;    // forest only, else empty
  std::vector<double> correlations;  // per feature; NaN when undefined
  Warnings warnings;
};

/// Runs lopo_scores with derived seeds base_seed .. base_seed+repeats-1.
/// 95% CI = mean +- 1.96 * sample std / sqrt(repeats); repeats = 1
/// degenerates to the point estimate with a warning.
ExperimentResult repeated_experiment(const Dataset& dataset,
                                     const ModelSpec& spec, int repeats,
                                     std::uint64_t base_seed);

/// Table-1 style cross-tabulation of outcomes by sex.
struct CohortSummary {
  struct SexCounts {
    long long survived = 0, died = 0, not_admitted = 0, admitted = 0;
  };
  SexCounts male, female;
};

CohortSummary cohort_summary(const std::vector<PatientRecord>& records);
std::string render_cohort_table(const CohortSummary& summary);

}  // namespace lungct

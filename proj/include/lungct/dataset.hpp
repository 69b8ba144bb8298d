#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <vector>

#include "lungct/features.hpp"

namespace lungct {

/// One row of the extracted feature table.
struct FeatureRow {
  std::string patient_id;
  std::array<double, 11> features{};
  bool outcome_icu = false;
  bool outcome_death = false;
};

enum class Outcome { Icu, Death };

inline const char* outcome_name(Outcome o) {
  return o == Outcome::Icu ? "icu" : "death";
}

/// Classifier input: feature matrix, binary labels, patient ids.
/// Feature dimensionality is not fixed to 11 so toy problems work too.
struct Dataset {
  std::vector<std::vector<double>> X;
  std::vector<int> y;  // 0/1
  std::vector<std::string> patient_ids;

  std::size_t n_rows() const { return X.size(); }
  std::size_t n_features() const { return X.empty() ? 0 : X[0].size(); }
  std::size_t count_label(int label) const;
};

/// Feature table CSV. Header:
///   patient_id,NL,MCT,NLperc,Muscle,Fat,MFratio,Age,Sex,GG_frac,GG_volume,GG_MHU,outcome_icu,outcome_death
/// Floats are rendered with 12 significant digits.
std::vector<FeatureRow> read_feature_table(const std::filesystem::path& path);
void write_feature_table(const std::vector<FeatureRow>& rows,
                         const std::filesystem::path& path);

/// Rows -> Dataset labeled by the requested outcome, sorted by patient_id.
Dataset to_dataset(const std::vector<FeatureRow>& rows, Outcome outcome);

}  // namespace lungct

#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "lungct/dataset.hpp"
#include "lungct/ehr.hpp"
#include "lungct/features.hpp"

namespace lungct {

/// Configuration of the synthetic CT cohort used as an end-to-end oracle.
struct PhantomConfig {
  int patients = 10;
  int nx = 32, ny = 32, nz = 24;
  std::array<double, 3> spacing_mm{1.5, 1.5, 3.0};
  std::uint64_t seed = 0;
};

struct PhantomPatient {
  PatientRecord record;
  ImageFeatures truth;  // computed by direct voxel counting at generation
};

/// Generates per-patient volume + lung/muscle-fat/lesion masks, an EHR CSV
/// and a ground-truth metrics CSV under out_dir. Outcomes are sampled from
/// a fixed logistic model over the true features, so classifiers can
/// recover signal from the extracted features. Deterministic under seed.
std::vector<PhantomPatient> generate_phantom_cohort(
    const PhantomConfig& config, const std::filesystem::path& out_dir);

/// Ground-truth CSV written by the generator:
///   patient_id,NL,MCT,NLperc,Muscle,Fat,MFratio,GG_frac,GG_volume,GG_MHU
std::vector<std::pair<std::string, ImageFeatures>> read_ground_truth(
    const std::filesystem::path& path);

/// The generator's outcome model, exposed so tests can compare empirical
/// outcome rates against the configured prevalence.
double phantom_icu_probability(const ImageFeatures& truth, int age);
double phantom_death_probability(const ImageFeatures& truth, int age, Sex sex);

/// Feature-level synthetic cohort with a planted logistic relationship
/// between features and both outcomes (no images involved). Positive
/// planted effects: MCT, Age, GG_frac, GG_volume; negative: NL, NLperc.
std::vector<FeatureRow> make_synthetic_cohort(int n, std::uint64_t seed);

}  // namespace lungct

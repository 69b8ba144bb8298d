#pragma once

#include <array>
#include <optional>
#include <string>

#include "lungct/ehr.hpp"
#include "lungct/volume.hpp"

namespace lungct {

/// The nine image features of one scan.
struct ImageFeatures {
  double nl_litres = 0.0;       // NL: normal-lung volume, HU in [-900,-700]
  double mct_hu = 0.0;          // MCT: mean HU over the lung mask
  double nl_perc = 0.0;         // NLperc: NL / whole-lung volume, in [0,1]
  double muscle_litres = 0.0;   // Muscle
  double fat_litres = 0.0;      // Fat
  double mf_ratio = 0.0;        // Muscle / Fat
  double gg_volume_litres = 0.0;  // GG_volume: lesion volume
  double gg_frac = 0.0;           // GG_frac: lesion voxels / lung voxels
  std::optional<double> gg_mhu;   // GG_MHU: mean lesion HU, absent if no lesion
  bool mf_ratio_imputed = false;  // set when Fat was zero and the ratio imputed
};

struct LungMetrics {
  double nl_litres, mct_hu, nl_perc;
};
struct MuscleFatMetrics {
  double muscle_litres, fat_litres, mf_ratio;
};
struct LesionMetrics {
  double gg_volume_litres, gg_frac;
  std::optional<double> gg_mhu;
};

/// Normal-lung band, inclusive both ends.
inline constexpr int kNormalLungLo = -900;
inline constexpr int kNormalLungHi = -700;

LungMetrics lung_metrics(const VoxelGrid& grid, const LabelMask& lung_mask,
                         int band_lo = kNormalLungLo,
                         int band_hi = kNormalLungHi);

/// Throws UndefinedError when Fat is zero; callers that need a dense value
/// use muscle_fat_metrics_imputed instead.
MuscleFatMetrics muscle_fat_metrics(const LabelMask& mask,
                                    const std::array<double, 3>& spacing_mm);

/// Same, but a zero fat volume imputes ratio = min(muscle voxel count, 1e3)
/// and sets the flag.
MuscleFatMetrics muscle_fat_metrics_imputed(
    const LabelMask& mask, const std::array<double, 3>& spacing_mm,
    bool* imputed);

LesionMetrics lesion_metrics(const VoxelGrid& grid,
                             const LabelMask& lesion_mask,
                             const LabelMask& lung_mask,
                             Warnings* warnings = nullptr);

/// Dice overlap 2|a n b| / (|a| + |b|), in [0,1].
double dice(const LabelMask& a, const LabelMask& b);

/// Relative volume error abs(|a| - |b|) / |b|.
double rve(const LabelMask& a, const LabelMask& b);

/// The scan used for feature extraction: closest to the COVID-positive date
/// (ties toward the earlier scan), or the latest scan when no positive date
/// is recorded.
std::string select_scan(const PatientRecord& record);

/// Fixed classifier input ordering (Table-2 row order).
inline constexpr std::array<const char*, 11> kFeatureNames = {
    "NL",  "MCT", "NLperc",  "Muscle",    "Fat",   "MFratio",
    "Age", "Sex", "GG_frac", "GG_volume", "GG_MHU"};

/// Ordered 11-vector [NL, MCT, NLperc, Muscle, Fat, MFratio, Age, Sex,
/// GG_frac, GG_volume, GG_MHU]; Sex encoded 1=male, 0=female; absent
/// GG_MHU carries 0 HU.
std::array<double, 11> assemble_features(const ImageFeatures& img, int age,
                                         Sex sex);

}  // namespace lungct

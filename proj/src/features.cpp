#include "lungct/features.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <tuple>

#include "lungct/errors.hpp"

namespace lungct {
namespace {

void require_same_dims(const LabelMask& mask, const VoxelGrid& grid,
                       const char* op) {
  if (!mask.same_dims(grid))
    throw ArgumentError(std::string(op) + ": mask dims differ from grid dims");
}

}  // namespace

LungMetrics lung_metrics(const VoxelGrid& grid, const LabelMask& lung_mask,
                         int band_lo, int band_hi) {
  require_same_dims(lung_mask, grid, "lung_metrics");
  std::size_t lung_voxels = 0, in_band = 0;
  double hu_sum = 0.0;
  for (std::size_t i = 0; i < grid.values.size(); ++i) {
    if (!lung_mask.labels[i]) continue;
    ++lung_voxels;
    hu_sum += grid.values[i];
    in_band += (grid.values[i] >= band_lo && grid.values[i] <= band_hi);
  }
  if (lung_voxels == 0)
    throw EmptyInputError("lung_metrics: empty lung mask");
  const double vvl = voxel_volume_litres(grid);
  return {static_cast<double>(in_band) * vvl,
          hu_sum / static_cast<double>(lung_voxels),
          static_cast<double>(in_band) / static_cast<double>(lung_voxels)};
}

MuscleFatMetrics muscle_fat_metrics(const LabelMask& mask,
                                    const std::array<double, 3>& spacing_mm) {
  if (mask.semantics != MaskSemantics::MuscleFat)
    throw ArgumentError("muscle_fat_metrics requires muscle-fat semantics");
  const double vvl = voxel_volume_litres(spacing_mm);
  const std::size_t muscle = mask.count(1);
  const std::size_t fat = mask.count(2);
  if (fat == 0)
    throw UndefinedError("muscle_fat_metrics: zero fat volume, ratio undefined");
  return {static_cast<double>(muscle) * vvl, static_cast<double>(fat) * vvl,
          static_cast<double>(muscle) / static_cast<double>(fat)};
}

MuscleFatMetrics muscle_fat_metrics_imputed(
    const LabelMask& mask, const std::array<double, 3>& spacing_mm,
    bool* imputed) {
  if (imputed) *imputed = false;
  try {
    return muscle_fat_metrics(mask, spacing_mm);
  } catch (const UndefinedError&) {
    const double vvl = voxel_volume_litres(spacing_mm);
    const double muscle_l = static_cast<double>(mask.count(1)) * vvl;
    if (imputed) *imputed = true;
    return {muscle_l, 0.0, std::min(muscle_l / vvl, 1e3)};
  }
}

LesionMetrics lesion_metrics(const VoxelGrid& grid,
                             const LabelMask& lesion_mask,
                             const LabelMask& lung_mask, Warnings* warnings) {
  require_same_dims(lesion_mask, grid, "lesion_metrics");
  require_same_dims(lung_mask, grid, "lesion_metrics");
  std::size_t lung_voxels = 0, lesion_voxels = 0, outside = 0;
  double hu_sum = 0.0;
  for (std::size_t i = 0; i < grid.values.size(); ++i) {
    lung_voxels += (lung_mask.labels[i] != 0);
    if (lesion_mask.labels[i]) {
      ++lesion_voxels;
      hu_sum += grid.values[i];
      outside += (lung_mask.labels[i] == 0);
    }
  }
  if (lung_voxels == 0)
    throw EmptyInputError("lesion_metrics: empty lung mask");
  if (outside > 0 && warnings)
    warnings->push_back("lesion_metrics: " + std::to_string(outside) +
                        " lesion voxel(s) outside the lung mask");
  LesionMetrics m;
  m.gg_volume_litres =
      static_cast<double>(lesion_voxels) * voxel_volume_litres(grid);
  m.gg_frac =
      static_cast<double>(lesion_voxels) / static_cast<double>(lung_voxels);
  if (lesion_voxels > 0)
    m.gg_mhu = hu_sum / static_cast<double>(lesion_voxels);
  return m;
}

double dice(const LabelMask& a, const LabelMask& b) {
  if (!a.same_dims(b)) throw ArgumentError("dice: dims differ");
  std::size_t na = 0, nb = 0, both = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const bool fa = a.labels[i] != 0, fb = b.labels[i] != 0;
    na += fa;
    nb += fb;
    both += (fa && fb);
  }
  if (na + nb == 0) throw UndefinedError("dice: both masks empty");
  return 2.0 * static_cast<double>(both) / static_cast<double>(na + nb);
}

double rve(const LabelMask& a, const LabelMask& b) {
  if (!a.same_dims(b)) throw ArgumentError("rve: dims differ");
  std::size_t na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    na += (a.labels[i] != 0);
    nb += (b.labels[i] != 0);
  }
  if (nb == 0) throw UndefinedError("rve: reference mask empty");
  const double diff = std::abs(static_cast<double>(na) -
                               static_cast<double>(nb));
  return diff / static_cast<double>(nb);
}

std::string select_scan(const PatientRecord& record) {
  if (record.scans.empty())
    throw EmptyInputError("select_scan: patient '" + record.patient_id +
                          "' has no scans");
  // Ranking is a pure function of (date distance, date, scan_id), so the
  // choice does not depend on scan list ordering.
  const ScanRef* best = &record.scans.front();
  if (record.covid_positive_date) {
    const int pos = record.covid_positive_date->days;
    auto key = [pos](const ScanRef& s) {
      return std::tuple(std::abs(s.date.days - pos), s.date.days, s.scan_id);
    };
    for (const auto& scan : record.scans)
      if (key(scan) < key(*best)) best = &scan;
  } else {
    auto key = [](const ScanRef& s) {
      return std::tuple(-s.date.days, s.scan_id);
    };
    for (const auto& scan : record.scans)
      if (key(scan) < key(*best)) best = &scan;
  }
  return best->scan_id;
}

std::array<double, 11> assemble_features(const ImageFeatures& img, int age,
                                         Sex sex) {
  return {img.nl_litres,
          img.mct_hu,
          img.nl_perc,
          img.muscle_litres,
          img.fat_litres,
          img.mf_ratio,
          static_cast<double>(age),
          sex == Sex::Male ? 1.0 : 0.0,
          img.gg_frac,
          img.gg_volume_litres,
          img.gg_mhu.value_or(0.0)};
}

}  // namespace lungct

#pragma once

#include <cstdint>
#include <filesystem>
#include <ostream>
#include <vector>

#include "lungct/classifiers.hpp"
#include "lungct/dataset.hpp"
#include "lungct/features.hpp"
#include "lungct/phantom.hpp"
#include "lungct/segment.hpp"

namespace lungct {

inline constexpr const char* kToolVersion = "0.1.0";

// Exit codes shared by every subcommand.
inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitBadInput = 2;

/// extract: per-patient image features from a cohort directory.
/// Expects <input>/ehr.csv plus, per scan, <scan_id>_vol.json and the
/// _lung/_mf/_lesion mask sidecars. A missing lung mask falls back to the
/// baseline segmenter; missing volume or mf/lesion masks skip the patient
/// with a logged warning.
struct ExtractConfig {
  std::filesystem::path input_dir;
  std::filesystem::path output_dir;
  Connectivity connectivity = Connectivity::Full26;
  int nl_band_lo = kNormalLungLo;
  int nl_band_hi = kNormalLungHi;
  std::uint64_t seed = 0;
};
int cmd_extract(const ExtractConfig& config, std::ostream& log);

/// experiment: repeated LOPO evaluation per outcome x family over a
/// feature table CSV. Writes summary_<outcome>_<family>.json,
/// roc_<outcome>_<family>.csv and, for families carrying importances,
/// importance_<outcome>_<family>.csv, plus a manifest.
struct ExperimentConfig {
  std::filesystem::path input_csv;
  std::filesystem::path output_dir;
  std::vector<Outcome> outcomes{Outcome::Icu, Outcome::Death};
  std::vector<Family> families;  // empty means all five
  int repeats = 10;
  std::uint64_t seed = 0;
};
int cmd_experiment(const ExperimentConfig& config, std::ostream& log);

/// phantom: synthetic cohort with ground-truth metrics for end-to-end tests.
struct PhantomCmdConfig {
  std::filesystem::path output_dir;
  PhantomConfig phantom;
};
int cmd_phantom(const PhantomCmdConfig& config, std::ostream& log);

/// segquality: Dice/RVE over masks paired by filename between two
/// directories. Unpaired sidecars are listed and skipped.
struct SegQualityConfig {
  std::filesystem::path pred_dir;
  std::filesystem::path truth_dir;
  std::filesystem::path output_csv;  // optional per-pair CSV
};
int cmd_segquality(const SegQualityConfig& config, std::ostream& log);

}  // namespace lungct

#include "lungct/commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <sstream>

#include <json.hpp>

#include "lungct/ehr.hpp"
#include "lungct/errors.hpp"
#include "lungct/evaluation.hpp"
#include "lungct/volume.hpp"

namespace fs = std::filesystem;

namespace lungct {
namespace {

std::string timestamp_utc() {
  const std::time_t t = std::chrono::system_clock::to_time_t(
      std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_json_atomic(const fs::path& path, const nlohmann::json& doc) {
  write_text_atomic(path, doc.dump(2) + "\n");
}

std::string feature_name(std::size_t j, std::size_t d) {
  if (d == kFeatureNames.size()) return kFeatureNames[j];
  return "f" + std::to_string(j);
}

const char* connectivity_name(Connectivity c) {
  return c == Connectivity::Face6 ? "6" : "26";
}

std::string fmt_g(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

}  // namespace

int cmd_extract(const ExtractConfig& config, std::ostream& log) {
  const fs::path ehr_path = config.input_dir / "ehr.csv";
  if (!fs::exists(ehr_path)) {
    log << "error: no ehr.csv under " << config.input_dir.string() << "\n";
    return kExitBadInput;
  }

  std::vector<PatientRecord> records;
  try {
    records = read_ehr_table(ehr_path);
  } catch (const Error& e) {
    log << "error: " << e.what() << "\n";
    return kExitBadInput;
  }
  if (records.empty()) {
    log << "error: ehr.csv contains no patients\n";
    return kExitBadInput;
  }

  fs::create_directories(config.output_dir);
  std::vector<FeatureRow> rows;
  Warnings warnings;
  int baseline_segmented = 0;

  for (const auto& rec : records) {
    try {
      if (rec.scans.empty()) {
        warnings.push_back("patient " + rec.patient_id +
                           " skipped: no scans on record");
        continue;
      }
      const std::string sid = select_scan(rec);
      const fs::path vol_path = config.input_dir / (sid + "_vol.json");
      const fs::path lung_path = config.input_dir / (sid + "_lung.json");
      const fs::path mf_path = config.input_dir / (sid + "_mf.json");
      const fs::path lesion_path = config.input_dir / (sid + "_lesion.json");

      const VoxelGrid grid = read_volume(vol_path, &warnings);
      LabelMask lung;
      if (fs::exists(lung_path)) {
        lung = read_mask(lung_path, MaskSemantics::Binary);
      } else {
        lung = baseline_lung_segment(grid, -1000, -400, config.connectivity);
        ++baseline_segmented;
        warnings.push_back("patient " + rec.patient_id +
                           ": lung mask absent, baseline segmenter used");
      }
      const LabelMask mf = read_mask(mf_path, MaskSemantics::MuscleFat);
      const LabelMask lesion = read_mask(lesion_path, MaskSemantics::Binary);

      const LungMetrics lm =
          lung_metrics(grid, lung, config.nl_band_lo, config.nl_band_hi);
      // Muscle and fat are only counted on slices covered by the largest
      // lung component.
      const LabelMask mf_in_lung =
          restrict_to_lung_slices(mf, lung, config.connectivity);
      bool imputed = false;
      const MuscleFatMetrics mfm =
          muscle_fat_metrics_imputed(mf_in_lung, grid.spacing_mm, &imputed);
      if (imputed)
        warnings.push_back("patient " + rec.patient_id +
                           ": zero fat volume, muscle-fat ratio imputed");
      const LesionMetrics gm = lesion_metrics(grid, lesion, lung, &warnings);

      ImageFeatures img;
      img.nl_litres = lm.nl_litres;
      img.mct_hu = lm.mct_hu;
      img.nl_perc = lm.nl_perc;
      img.muscle_litres = mfm.muscle_litres;
      img.fat_litres = mfm.fat_litres;
      img.mf_ratio = mfm.mf_ratio;
      img.mf_ratio_imputed = imputed;
      img.gg_volume_litres = gm.gg_volume_litres;
      img.gg_frac = gm.gg_frac;
      img.gg_mhu = gm.gg_mhu;

      FeatureRow row;
      row.patient_id = rec.patient_id;
      row.features = assemble_features(img, rec.age, rec.sex);
      row.outcome_icu = rec.outcome_icu;
      row.outcome_death = rec.outcome_death;
      rows.push_back(std::move(row));
    } catch (const Error& e) {
      warnings.push_back("patient " + rec.patient_id +
                         " skipped: " + e.what());
    }
  }

  for (const auto& w : warnings) log << "warning: " << w << "\n";
  if (rows.empty()) {
    log << "error: feature extraction failed for every patient\n";
    return kExitRuntime;
  }

  write_feature_table(rows, config.output_dir / "features.csv");

  nlohmann::json manifest = {
      {"command", "extract"},
      {"tool_version", kToolVersion},
      {"generated_at", timestamp_utc()},
      {"input_dir", config.input_dir.string()},
      {"config",
       {{"connectivity", connectivity_name(config.connectivity)},
        {"nl_band", {config.nl_band_lo, config.nl_band_hi}},
        {"seed", config.seed}}},
      {"patients_total", records.size()},
      {"patients_extracted", rows.size()},
      {"baseline_segmented", baseline_segmented},
      {"warnings", warnings}};
  write_json_atomic(config.output_dir / "manifest.json", manifest);
  log << "extracted " << rows.size() << "/" << records.size()
      << " patients -> "
      << (config.output_dir / "features.csv").string() << "\n";
  return kExitOk;
}

int cmd_experiment(const ExperimentConfig& config, std::ostream& log) {
  std::vector<FeatureRow> rows;
  try {
    rows = read_feature_table(config.input_csv);
  } catch (const Error& e) {
    log << "error: " << e.what() << "\n";
    return kExitBadInput;
  }
  if (rows.size() < 3) {
    log << "error: feature table has fewer than 3 patients\n";
    return kExitBadInput;
  }
  if (config.repeats < 1) {
    log << "error: repeats must be >= 1\n";
    return kExitBadInput;
  }

  std::vector<Family> families = config.families;
  if (families.empty())
    families = {Family::LogisticL1, Family::SvmRbf, Family::RandomForest,
                Family::AdaBoost, Family::Gbt};

  fs::create_directories(config.output_dir);
  nlohmann::json manifest_runs = nlohmann::json::array();

  for (Outcome outcome : config.outcomes) {
    const Dataset data = to_dataset(rows, outcome);
    const std::size_t pos = data.count_label(1);
    if (pos == 0 || pos == data.n_rows()) {
      log << "error: outcome " << outcome_name(outcome)
          << " has a single class (" << pos << "/" << data.n_rows()
          << " positive); nothing to evaluate\n";
      return kExitBadInput;
    }

    for (Family family : families) {
      const ModelSpec spec = ModelSpec::defaults(family, config.seed);
      ExperimentResult res;
      try {
        res = repeated_experiment(data, spec, config.repeats, config.seed);
      } catch (const Error& e) {
        log << "error: " << outcome_name(outcome) << "/"
            << family_name(family) << ": " << e.what() << "\n";
        return kExitRuntime;
      }

      const std::string tag =
          std::string(outcome_name(outcome)) + "_" + family_name(family);
      const std::size_t d = data.n_features();

      nlohmann::json grid = nlohmann::json::array();
      for (const auto& hp : spec.grid) grid.push_back(hp.to_json(family));

      nlohmann::json correlations;
      for (std::size_t j = 0; j < d; ++j)
        correlations[feature_name(j, d)] = res.correlations[j];

      nlohmann::json summary = {
          {"outcome", outcome_name(outcome)},
          {"family", family_name(family)},
          {"repeats", config.repeats},
          {"seed", config.seed},
          {"grid", grid},
          {"n_patients", data.n_rows()},
          {"auc_mean", res.auc_mean},
          {"ci", {res.ci_low, res.ci_high}},
          {"auc_runs", res.auc_runs},
          {"correlations", correlations},
          {"warnings", res.warnings}};
      if (!res.importance.empty()) {
        nlohmann::json importance;
        for (std::size_t j = 0; j < res.importance.size(); ++j)
          importance[feature_name(j, d)] = res.importance[j];
        summary["importance"] = importance;
      }
      write_json_atomic(config.output_dir / ("summary_" + tag + ".json"),
                        summary);

      std::string roc_csv = "fpr,tpr\n";
      for (const auto& p : res.roc.points)
        roc_csv += fmt_g(p.fpr) + "," + fmt_g(p.tpr) + "\n";
      write_text_atomic(config.output_dir / ("roc_" + tag + ".csv"), roc_csv);

      if (!res.importance.empty()) {
        std::string imp_csv = "feature,importance\n";
        for (std::size_t j = 0; j < res.importance.size(); ++j)
          imp_csv += feature_name(j, d) + "," + fmt_g(res.importance[j]) + "\n";
        write_text_atomic(config.output_dir / ("importance_" + tag + ".csv"),
                          imp_csv);
      }

      char ci_line[128];
      std::snprintf(ci_line, sizeof ci_line,
                    "%s %s: AUC %.3f (%.3f-%.3f) over %d repeats\n",
                    outcome_name(outcome), family_name(family), res.auc_mean,
                    res.ci_low, res.ci_high, config.repeats);
      log << ci_line;
      for (const auto& w : res.warnings) log << "warning: " << w << "\n";
      manifest_runs.push_back(
          {{"outcome", outcome_name(outcome)},
           {"family", family_name(family)},
           {"summary", "summary_" + tag + ".json"}});
    }
  }

  nlohmann::json manifest = {
      {"command", "experiment"},
      {"tool_version", kToolVersion},
      {"generated_at", timestamp_utc()},
      {"input_csv", config.input_csv.string()},
      {"config", {{"repeats", config.repeats}, {"seed", config.seed}}},
      {"runs", manifest_runs}};
  write_json_atomic(config.output_dir / "manifest.json", manifest);
  return kExitOk;
}

int cmd_phantom(const PhantomCmdConfig& config, std::ostream& log) {
  std::vector<PhantomPatient> cohort;
  try {
    cohort = generate_phantom_cohort(config.phantom, config.output_dir);
  } catch (const ArgumentError& e) {
    log << "error: " << e.what() << "\n";
    return kExitBadInput;
  }
  nlohmann::json manifest = {
      {"command", "phantom"},
      {"tool_version", kToolVersion},
      {"generated_at", timestamp_utc()},
      {"config",
       {{"patients", config.phantom.patients},
        {"dims", {config.phantom.nx, config.phantom.ny, config.phantom.nz}},
        {"spacing_mm", config.phantom.spacing_mm},
        {"seed", config.phantom.seed}}}};
  write_json_atomic(config.output_dir / "manifest.json", manifest);
  log << "wrote phantom cohort of " << cohort.size() << " patients to "
      << config.output_dir.string() << "\n";
  return kExitOk;
}

int cmd_segquality(const SegQualityConfig& config, std::ostream& log) {
  if (!fs::is_directory(config.pred_dir) ||
      !fs::is_directory(config.truth_dir)) {
    log << "error: --pred and --truth must be directories\n";
    return kExitBadInput;
  }

  std::vector<std::string> names;
  for (const auto& entry : fs::directory_iterator(config.pred_dir))
    if (entry.path().extension() == ".json")
      names.push_back(entry.path().filename().string());
  std::sort(names.begin(), names.end());

  std::vector<double> dices, rves;
  std::string pairs_csv = "name,dice,rve\n";
  for (const auto& name : names) {
    const fs::path truth_path = config.truth_dir / name;
    if (!fs::exists(truth_path)) {
      log << "warning: " << name << " has no ground-truth pair, skipped\n";
      continue;
    }
    try {
      const LabelMask pred =
          read_mask(config.pred_dir / name, MaskSemantics::Binary);
      const LabelMask truth = read_mask(truth_path, MaskSemantics::Binary);
      const double d = dice(pred, truth);
      const double r = rve(pred, truth);
      dices.push_back(d);
      rves.push_back(r);
      char line[160];
      std::snprintf(line, sizeof line, "%s: dice %.4f, rve %.4f\n",
                    name.c_str(), d, r);
      log << line;
      pairs_csv += name + "," + fmt_g(d) + "," + fmt_g(r) + "\n";
    } catch (const Error& e) {
      log << "warning: " << name << " skipped: " << e.what() << "\n";
    }
  }

  if (dices.empty()) {
    log << "error: no comparable mask pairs found\n";
    return kExitBadInput;
  }

  auto mean_std = [](const std::vector<double>& v) {
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double var = 0.0;
    for (double x : v) var += (x - mean) * (x - mean);
    var = v.size() > 1 ? var / static_cast<double>(v.size() - 1) : 0.0;
    return std::pair<double, double>(mean, std::sqrt(var));
  };
  const auto [dm, ds] = mean_std(dices);
  const auto [rm, rs] = mean_std(rves);
  char line[160];
  std::snprintf(line, sizeof line, "dice %.2f ± %.2g over %zu pairs\n",
                dm, ds, dices.size());
  log << line;
  std::snprintf(line, sizeof line, "rve %.2f ± %.2g over %zu pairs\n",
                rm, rs, rves.size());
  log << line;

  if (!config.output_csv.empty()) {
    if (config.output_csv.has_parent_path())
      fs::create_directories(config.output_csv.parent_path());
    write_text_atomic(config.output_csv, pairs_csv);
  }
  return kExitOk;
}

}  // namespace lungct

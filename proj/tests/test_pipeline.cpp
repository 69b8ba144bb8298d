#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "lungct/commands.hpp"
#include "lungct/errors.hpp"
#include "lungct/evaluation.hpp"
#include "lungct/features.hpp"
#include "lungct/volume.hpp"

using namespace lungct;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const char* tag) {
  const fs::path dir = fs::temp_directory_path() / "lungct_pipeline" / tag;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("phantom generation is byte-identical under a fixed seed") {
  const fs::path a = temp_dir("phantom_a");
  const fs::path b = temp_dir("phantom_b");
  PhantomConfig config;
  config.patients = 4;
  config.seed = 99;
  generate_phantom_cohort(config, a);
  generate_phantom_cohort(config, b);
  int files = 0;
  for (const auto& entry : fs::directory_iterator(a)) {
    const fs::path other = b / entry.path().filename();
    REQUIRE(fs::exists(other));
    CHECK(slurp(entry.path()) == slurp(other));
    ++files;
  }
  CHECK(files > 0);

  PhantomConfig tiny;
  tiny.nx = 8;
  CHECK_THROWS_AS(generate_phantom_cohort(tiny, temp_dir("phantom_tiny")),
                  ArgumentError);
}

TEST_CASE("phantom ground truth NL is the in-band count times voxel volume") {
  const fs::path dir = temp_dir("phantom_nl");
  PhantomConfig config;
  config.patients = 3;
  config.seed = 5;
  const auto cohort = generate_phantom_cohort(config, dir);
  const auto truth = read_ground_truth(dir / "ground_truth.csv");
  REQUIRE(truth.size() == 3);
  for (const auto& [pid, feat] : truth) {
    const PhantomPatient* pp = nullptr;
    for (const auto& c : cohort)
      if (c.record.patient_id == pid) pp = &c;
    REQUIRE(pp != nullptr);
    const std::string sid = pp->record.scans[0].scan_id;
    const VoxelGrid grid = read_volume(dir / (sid + "_vol.json"));
    const LabelMask lung =
        read_mask(dir / (sid + "_lung.json"), MaskSemantics::Binary);
    std::size_t in_band = 0;
    for (std::size_t i = 0; i < grid.size(); ++i)
      if (lung.labels[i] && grid.values[i] >= -900 && grid.values[i] <= -700)
        ++in_band;
    CHECK(feat.nl_litres ==
          doctest::Approx(in_band * voxel_volume_litres(grid)).epsilon(1e-12));
  }
}

TEST_CASE("phantom outcome rates track the configured prevalence") {
  // No images needed for this check: the feature-level generator uses the
  // same outcome model.
  const auto rows = make_synthetic_cohort(2000, 31);
  double icu_expected = 0, icu_seen = 0, death_expected = 0, death_seen = 0;
  for (const auto& r : rows) {
    ImageFeatures f;
    f.nl_perc = r.features[2];
    f.gg_frac = r.features[8];
    const int age = static_cast<int>(r.features[6]);
    const Sex sex = r.features[7] > 0.5 ? Sex::Male : Sex::Female;
    icu_expected += phantom_icu_probability(f, age);
    death_expected += phantom_death_probability(f, age, sex);
    icu_seen += r.outcome_icu;
    death_seen += r.outcome_death;
  }
  const double n = static_cast<double>(rows.size());
  CHECK(std::abs(icu_seen / n - icu_expected / n) <= 0.05);
  CHECK(std::abs(death_seen / n - death_expected / n) <= 0.05);

  // And on the image-backed generator over >= 200 patients.
  const fs::path dir = temp_dir("phantom_rates");
  PhantomConfig config;
  config.patients = 220;
  config.nx = 24;
  config.ny = 24;
  config.nz = 16;
  config.seed = 13;
  const auto cohort = generate_phantom_cohort(config, dir);
  double e_icu = 0, s_icu = 0, e_death = 0, s_death = 0;
  for (const auto& pp : cohort) {
    e_icu += phantom_icu_probability(pp.truth, pp.record.age);
    e_death +=
        phantom_death_probability(pp.truth, pp.record.age, pp.record.sex);
    s_icu += pp.record.outcome_icu;
    s_death += pp.record.outcome_death;
  }
  const double m = static_cast<double>(cohort.size());
  CHECK(std::abs(s_icu / m - e_icu / m) <= 0.05);
  CHECK(std::abs(s_death / m - e_death / m) <= 0.05);
}

TEST_CASE("extract reproduces phantom ground truth to 1e-9 relative") {
  const fs::path cohort_dir = temp_dir("extract_cohort");
  const fs::path out_dir = temp_dir("extract_out");
  PhantomConfig config;
  config.patients = 5;
  config.seed = 41;
  generate_phantom_cohort(config, cohort_dir);

  ExtractConfig ec;
  ec.input_dir = cohort_dir;
  ec.output_dir = out_dir;
  std::ostringstream log;
  REQUIRE(cmd_extract(ec, log) == kExitOk);

  const auto truth = read_ground_truth(cohort_dir / "ground_truth.csv");
  const auto rows = read_feature_table(out_dir / "features.csv");
  REQUIRE(rows.size() == truth.size());
  std::map<std::string, ImageFeatures> by_id(truth.begin(), truth.end());
  for (const auto& row : rows) {
    const ImageFeatures& t = by_id.at(row.patient_id);
    const double expected[9] = {
        t.nl_litres, t.mct_hu,  t.nl_perc,
        t.muscle_litres, t.fat_litres, t.mf_ratio,
        t.gg_frac,   t.gg_volume_litres, t.gg_mhu.value_or(0.0)};
    const double got[9] = {row.features[0], row.features[1], row.features[2],
                           row.features[3], row.features[4], row.features[5],
                           row.features[8], row.features[9],
                           row.features[10]};
    for (int j = 0; j < 9; ++j)
      CHECK(got[j] == doctest::Approx(expected[j]).epsilon(1e-9));
  }
  CHECK(fs::exists(out_dir / "manifest.json"));
}

TEST_CASE("extract skips patients without scans and warns") {
  const fs::path cohort_dir = temp_dir("extract_noscan");
  const fs::path out_dir = temp_dir("extract_noscan_out");
  PhantomConfig config;
  config.patients = 2;
  config.seed = 8;
  generate_phantom_cohort(config, cohort_dir);
  // Append a scanless patient to the EHR.
  std::ofstream(cohort_dir / "ehr.csv", std::ios::app)
      << "ZZZ,50,male,,,,0,0\n";

  ExtractConfig ec;
  ec.input_dir = cohort_dir;
  ec.output_dir = out_dir;
  std::ostringstream log;
  REQUIRE(cmd_extract(ec, log) == kExitOk);
  CHECK(read_feature_table(out_dir / "features.csv").size() == 2);
  CHECK(log.str().find("ZZZ") != std::string::npos);
  CHECK(log.str().find("no scans") != std::string::npos);
}

TEST_CASE("extract on an empty directory exits 2 without a CSV") {
  const fs::path empty = temp_dir("extract_empty");
  const fs::path out_dir = temp_dir("extract_empty_out");
  ExtractConfig ec;
  ec.input_dir = empty;
  ec.output_dir = out_dir;
  std::ostringstream log;
  CHECK(cmd_extract(ec, log) == kExitBadInput);
  CHECK_FALSE(fs::exists(out_dir / "features.csv"));
}

TEST_CASE("extract falls back to the baseline segmenter without lung masks") {
  const fs::path cohort_dir = temp_dir("extract_nolung");
  const fs::path out_dir = temp_dir("extract_nolung_out");
  PhantomConfig config;
  config.patients = 2;
  config.seed = 23;
  generate_phantom_cohort(config, cohort_dir);
  for (const auto& entry : fs::directory_iterator(cohort_dir)) {
    const std::string name = entry.path().filename().string();
    if (name.find("_lung.") != std::string::npos) fs::remove(entry.path());
  }
  ExtractConfig ec;
  ec.input_dir = cohort_dir;
  ec.output_dir = out_dir;
  std::ostringstream log;
  REQUIRE(cmd_extract(ec, log) == kExitOk);
  CHECK(log.str().find("baseline segmenter") != std::string::npos);
  CHECK(read_feature_table(out_dir / "features.csv").size() == 2);
}

TEST_CASE("experiment writes one summary and roc per outcome and family") {
  const fs::path out_dir = temp_dir("experiment_out");
  const fs::path csv_dir = temp_dir("experiment_csv");
  write_feature_table(make_synthetic_cohort(60, 17), csv_dir / "f.csv");

  ExperimentConfig ec;
  ec.input_csv = csv_dir / "f.csv";
  ec.output_dir = out_dir;
  ec.repeats = 2;
  ec.seed = 4;
  std::ostringstream log;
  REQUIRE(cmd_experiment(ec, log) == kExitOk);

  int summaries = 0, rocs = 0;
  for (const auto& entry : fs::directory_iterator(out_dir)) {
    const std::string name = entry.path().filename().string();
    summaries += name.rfind("summary_", 0) == 0;
    rocs += name.rfind("roc_", 0) == 0;
  }
  CHECK(summaries == 10);  // 2 outcomes x 5 families
  CHECK(rocs == 10);
  CHECK(fs::exists(out_dir / "importance_icu_random_forest.csv"));
  CHECK(fs::exists(out_dir / "manifest.json"));
}

TEST_CASE("experiment with repeats=1 notes the degenerate CI") {
  const fs::path out_dir = temp_dir("experiment_r1");
  const fs::path csv_dir = temp_dir("experiment_r1_csv");
  write_feature_table(make_synthetic_cohort(40, 29), csv_dir / "f.csv");
  ExperimentConfig ec;
  ec.input_csv = csv_dir / "f.csv";
  ec.output_dir = out_dir;
  ec.outcomes = {Outcome::Icu};
  ec.families = {Family::LogisticL1};
  ec.repeats = 1;
  std::ostringstream log;
  REQUIRE(cmd_experiment(ec, log) == kExitOk);
  const std::string summary =
      slurp(out_dir / "summary_icu_logistic_l1.json");
  CHECK(summary.find("repeats = 1") != std::string::npos);
}

TEST_CASE("experiment rejects a single-class outcome column") {
  const fs::path out_dir = temp_dir("experiment_oneclass");
  const fs::path csv_dir = temp_dir("experiment_oneclass_csv");
  auto rows = make_synthetic_cohort(30, 3);
  for (auto& r : rows) r.outcome_icu = false;
  write_feature_table(rows, csv_dir / "f.csv");
  ExperimentConfig ec;
  ec.input_csv = csv_dir / "f.csv";
  ec.output_dir = out_dir;
  ec.outcomes = {Outcome::Icu};
  std::ostringstream log;
  CHECK(cmd_experiment(ec, log) == kExitBadInput);
  CHECK(log.str().find("single class") != std::string::npos);
}

TEST_CASE("extract then experiment on a phantom cohort recovers signal") {
  const fs::path cohort_dir = temp_dir("e2e_cohort");
  const fs::path feat_dir = temp_dir("e2e_feat");
  const fs::path exp_dir = temp_dir("e2e_exp");
  PhantomConfig config;
  config.patients = 40;
  config.nx = 24;
  config.ny = 24;
  config.nz = 16;
  config.seed = 71;
  generate_phantom_cohort(config, cohort_dir);

  ExtractConfig xc;
  xc.input_dir = cohort_dir;
  xc.output_dir = feat_dir;
  std::ostringstream log;
  REQUIRE(cmd_extract(xc, log) == kExitOk);

  ExperimentConfig ec;
  ec.input_csv = feat_dir / "features.csv";
  ec.output_dir = exp_dir;
  ec.outcomes = {Outcome::Icu};
  ec.repeats = 2;
  ec.seed = 1;
  REQUIRE(cmd_experiment(ec, log) == kExitOk);

  // At least one family must clearly beat chance.
  double best = 0.0;
  for (const auto& entry : fs::directory_iterator(exp_dir)) {
    const std::string name = entry.path().filename().string();
    if (name.rfind("summary_", 0) != 0) continue;
    const std::string text = slurp(entry.path());
    const auto pos = text.find("\"auc_mean\":");
    REQUIRE(pos != std::string::npos);
    best = std::max(best, std::stod(text.substr(pos + 11)));
  }
  CHECK(best > 0.8);
}

TEST_CASE("segquality on identical directories reports perfect scores") {
  const fs::path pred = temp_dir("segq_pred");
  const fs::path truth = temp_dir("segq_truth");
  LabelMask m = make_mask(4, 4, 2);
  m.labels[0] = m.labels[5] = 1;
  write_mask(m, pred / "a.json");
  write_mask(m, truth / "a.json");
  LabelMask m2 = make_mask(4, 4, 2);
  for (int i = 0; i < 8; ++i) m2.labels[i] = 1;
  write_mask(m2, pred / "b.json");
  write_mask(m2, truth / "b.json");

  SegQualityConfig sc;
  sc.pred_dir = pred;
  sc.truth_dir = truth;
  std::ostringstream log;
  REQUIRE(cmd_segquality(sc, log) == kExitOk);
  CHECK(log.str().find("dice 1.00") != std::string::npos);
  CHECK(log.str().find("rve 0.00") != std::string::npos);
}

TEST_CASE("segquality half-overlap pair and mean +- sd summary line") {
  const fs::path pred = temp_dir("segq2_pred");
  const fs::path truth = temp_dir("segq2_truth");
  LabelMask a = make_mask(4, 1, 1);
  a.labels = {1, 1, 0, 0};
  LabelMask b = make_mask(4, 1, 1);
  b.labels = {0, 1, 1, 0};
  write_mask(a, pred / "pair.json");
  write_mask(b, truth / "pair.json");
  write_mask(a, pred / "unmatched.json");

  SegQualityConfig sc;
  sc.pred_dir = pred;
  sc.truth_dir = truth;
  sc.output_csv = pred / "report.csv";
  std::ostringstream log;
  REQUIRE(cmd_segquality(sc, log) == kExitOk);
  const std::string text = log.str();
  CHECK(text.find("pair.json: dice 0.5000, rve 0.0000") != std::string::npos);
  CHECK(text.find("unmatched.json has no ground-truth pair") !=
        std::string::npos);
  // Summary uses the mean ± std layout.
  CHECK(text.find("dice 0.50 ± 0") != std::string::npos);
  CHECK(slurp(pred / "report.csv").find("pair.json,0.5,0") !=
        std::string::npos);
}

TEST_CASE("render_cohort_table lays out both margins per sex") {
  CohortSummary s;
  s.male = {88, 39, 113, 14};
  s.female = {199, 17, 107, 10};
  const std::string table = render_cohort_table(s);
  CHECK(table.find("88") != std::string::npos);
  CHECK(table.find("39") != std::string::npos);
  CHECK(table.find("113") != std::string::npos);
  CHECK(table.find("14") != std::string::npos);
  CHECK(table.find("199") != std::string::npos);
  CHECK(table.find("107") != std::string::npos);
}

#include "lungct/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "lungct/errors.hpp"
#include "lungct/rng.hpp"

namespace lungct {
namespace {

double sigmoid(double t) { return 1.0 / (1.0 + std::exp(-t)); }

struct Box {
  int x0, x1, y0, y1, z0, z1;  // inclusive
  bool contains(int x, int y, int z) const {
    return x >= x0 && x <= x1 && y >= y0 && y <= y1 && z >= z0 && z <= z1;
  }
};

}  // namespace

// Fixed logistic ground-truth model over the true features. Reference
// centers and scales are constants of the generator, not cohort statistics.
double phantom_icu_probability(const ImageFeatures& f, int age) {
  return sigmoid(-1.6 + 2.6 * (f.gg_frac - 0.10) / 0.08 -
                 2.0 * (f.nl_perc - 0.60) / 0.18 +
                 1.4 * (age - 60.0) / 20.0);
}

double phantom_death_probability(const ImageFeatures& f, int age, Sex sex) {
  return sigmoid(-1.8 + 2.0 * (f.gg_frac - 0.10) / 0.08 -
                 1.4 * (f.nl_perc - 0.60) / 0.18 +
                 2.2 * (age - 60.0) / 20.0 +
                 0.6 * (sex == Sex::Male ? 1.0 : 0.0));
}

std::vector<PhantomPatient> generate_phantom_cohort(
    const PhantomConfig& config, const std::filesystem::path& out_dir) {
  const int nx = config.nx, ny = config.ny, nz = config.nz;
  if (nx < 24 || ny < 24 || nz < 16)
    throw ArgumentError(
        "generate_phantom_cohort: dims too small to place phantom shapes "
        "(need at least 24x24x16)");
  if (config.patients < 1)
    throw ArgumentError("generate_phantom_cohort: need at least 1 patient");

  std::filesystem::create_directories(out_dir);
  RngStream root(config.seed);

  std::vector<PhantomPatient> cohort;
  std::vector<PatientRecord> records;

  const int xm = nx / 2;
  const Box body{2, nx - 3, 2, ny - 3, 0, nz - 1};
  const int lung_z0 = 4, lung_z1 = nz - 5;
  const Box left_lung{4, xm - 2, 5, ny - 6, lung_z0, lung_z1};
  const Box right_lung{xm + 1, nx - 5, 6, ny - 6, lung_z0, lung_z1};

  for (int p = 0; p < config.patients; ++p) {
    char idbuf[16];
    std::snprintf(idbuf, sizeof idbuf, "P%03d", p);
    const std::string pid = idbuf;
    RngStream rng = root.derive("patient/" + pid);

    // Per-patient anatomy variation.
    const double in_band_frac = 0.30 + 0.60 * rng.uniform();
    // Lesion edges cover 40..90% of the left lung extents, so GG_frac
    // spans roughly 0.03..0.35 of the combined lungs.
    auto span = [&](int lo, int hi) {
      const int extent = hi - lo + 1;
      const double f = 0.40 + 0.50 * rng.uniform();
      return std::max(1, static_cast<int>(f * extent));
    };
    const int lesion_w = span(left_lung.x0, left_lung.x1);
    const int lesion_h = span(left_lung.y0, left_lung.y1);
    const int lesion_d = span(left_lung.z0, left_lung.z1);
    const bool has_lesion = rng.uniform() < 0.85;
    const Box lesion{
        left_lung.x0,
        std::min(left_lung.x0 + lesion_w - 1, left_lung.x1),
        left_lung.y0 + 1,
        std::min(left_lung.y0 + lesion_h, left_lung.y1),
        lung_z0 + 1,
        std::min(lung_z0 + lesion_d, lung_z1)};
    const int muscle_w = 6 + static_cast<int>(rng.uniform_int(nx - 12));
    const int fat_w = 4 + static_cast<int>(rng.uniform_int(nx - 10));
    const Box muscle{2, std::min(2 + muscle_w, nx - 3), 2, 3, 0, nz - 1};
    const Box fat{2, std::min(2 + fat_w, nx - 3), ny - 4, ny - 3, 0, nz - 1};

    VoxelGrid grid;
    grid.nx = nx;
    grid.ny = ny;
    grid.nz = nz;
    grid.spacing_mm = config.spacing_mm;
    grid.values.assign(static_cast<std::size_t>(nx) * ny * nz, -1000);
    LabelMask lung_mask = make_mask(nx, ny, nz);
    LabelMask lesion_mask = make_mask(nx, ny, nz);
    LabelMask mf_mask = make_mask(nx, ny, nz, MaskSemantics::MuscleFat);

    for (int z = 0; z < nz; ++z)
      for (int y = 0; y < ny; ++y)
        for (int x = 0; x < nx; ++x) {
          const std::size_t i = grid.index(x, y, z);
          if (!body.contains(x, y, z)) continue;
          grid.values[i] =
              static_cast<std::int16_t>(30 + rng.uniform_int(21));
          const bool in_left = left_lung.contains(x, y, z);
          const bool in_right = right_lung.contains(x, y, z);
          if (in_left || in_right) {
            lung_mask.labels[i] = 1;
            if (rng.uniform() < in_band_frac)
              grid.values[i] = static_cast<std::int16_t>(
                  -900 + static_cast<int>(rng.uniform_int(201)));
            else
              grid.values[i] = static_cast<std::int16_t>(
                  -650 + static_cast<int>(rng.uniform_int(151)));
          }
          if (has_lesion && in_left && lesion.contains(x, y, z)) {
            lesion_mask.labels[i] = 1;
            grid.values[i] = static_cast<std::int16_t>(
                -150 + static_cast<int>(rng.uniform_int(101)));
          }
          if (muscle.contains(x, y, z)) mf_mask.labels[i] = 1;
          if (fat.contains(x, y, z)) mf_mask.labels[i] = 2;
        }

    // Ground truth by direct voxel counting over the generated arrays,
    // independent of the feature-extraction code paths.
    const double vvl = config.spacing_mm[0] * config.spacing_mm[1] *
                       config.spacing_mm[2] / 1e6;
    long long lung_n = 0, in_band_n = 0, lesion_n = 0;
    long long muscle_n = 0, fat_n = 0;
    double lung_hu = 0.0, lesion_hu = 0.0;
    for (int z = 0; z < nz; ++z)
      for (int y = 0; y < ny; ++y)
        for (int x = 0; x < nx; ++x) {
          const std::size_t i = grid.index(x, y, z);
          const int hu = grid.values[i];
          if (lung_mask.labels[i]) {
            ++lung_n;
            lung_hu += hu;
            if (hu >= -900 && hu <= -700) ++in_band_n;
          }
          if (lesion_mask.labels[i]) {
            ++lesion_n;
            lesion_hu += hu;
          }
          // The largest lung component (the bigger left box) spans the full
          // lung z range, so the slice filter keeps exactly those slices.
          if (z >= lung_z0 && z <= lung_z1) {
            if (mf_mask.labels[i] == 1) ++muscle_n;
            if (mf_mask.labels[i] == 2) ++fat_n;
          }
        }

    PhantomPatient pp;
    pp.truth.nl_litres = static_cast<double>(in_band_n) * vvl;
    pp.truth.mct_hu = lung_hu / static_cast<double>(lung_n);
    pp.truth.nl_perc =
        static_cast<double>(in_band_n) / static_cast<double>(lung_n);
    pp.truth.muscle_litres = static_cast<double>(muscle_n) * vvl;
    pp.truth.fat_litres = static_cast<double>(fat_n) * vvl;
    pp.truth.mf_ratio =
        static_cast<double>(muscle_n) / static_cast<double>(fat_n);
    pp.truth.gg_volume_litres = static_cast<double>(lesion_n) * vvl;
    pp.truth.gg_frac =
        static_cast<double>(lesion_n) / static_cast<double>(lung_n);
    if (lesion_n > 0)
      pp.truth.gg_mhu = lesion_hu / static_cast<double>(lesion_n);

    PatientRecord rec;
    rec.patient_id = pid;
    rec.age = 30 + static_cast<int>(rng.uniform_int(61));
    rec.sex = rng.bernoulli(0.5) ? Sex::Male : Sex::Female;
    const Date base = Date::parse("2020-04-01");
    rec.covid_positive_date =
        Date{base.days + static_cast<int>(rng.uniform_int(30))};
    const int n_scans = 1 + static_cast<int>(rng.uniform_int(2));
    for (int s = 0; s < n_scans; ++s) {
      char sid[24];
      std::snprintf(sid, sizeof sid, "%s_S%d", pid.c_str(), s);
      rec.scans.push_back(
          {sid, Date{rec.covid_positive_date->days +
                     static_cast<int>(rng.uniform_int(14)) - 7}});
    }
    rec.outcome_icu = rng.bernoulli(phantom_icu_probability(pp.truth, rec.age));
    rec.outcome_death =
        rng.bernoulli(phantom_death_probability(pp.truth, rec.age, rec.sex));
    pp.record = rec;

    // Every scan of a patient shares the same voxel content, so the
    // extracted features do not depend on which scan gets selected.
    for (const auto& scan : rec.scans) {
      write_volume(grid, out_dir / (scan.scan_id + "_vol.json"));
      write_mask(lung_mask, out_dir / (scan.scan_id + "_lung.json"));
      write_mask(mf_mask, out_dir / (scan.scan_id + "_mf.json"));
      write_mask(lesion_mask, out_dir / (scan.scan_id + "_lesion.json"));
    }

    records.push_back(rec);
    cohort.push_back(std::move(pp));
  }

  write_ehr_table(records, out_dir / "ehr.csv");

  std::ofstream gt(out_dir / "ground_truth.csv", std::ios::trunc);
  gt << "patient_id,NL,MCT,NLperc,Muscle,Fat,MFratio,GG_frac,GG_volume,"
        "GG_MHU\n";
  char buf[64];
  for (const auto& pp : cohort) {
    gt << pp.record.patient_id;
    const double cols[] = {pp.truth.nl_litres,     pp.truth.mct_hu,
                           pp.truth.nl_perc,       pp.truth.muscle_litres,
                           pp.truth.fat_litres,    pp.truth.mf_ratio,
                           pp.truth.gg_frac,       pp.truth.gg_volume_litres,
                           pp.truth.gg_mhu.value_or(0.0)};
    for (double v : cols) {
      std::snprintf(buf, sizeof buf, "%.12g", v);
      gt << ',' << buf;
    }
    gt << '\n';
  }
  return cohort;
}

std::vector<std::pair<std::string, ImageFeatures>> read_ground_truth(
    const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open ground truth: " + path.string());
  std::string line;
  std::getline(in, line);
  std::vector<std::pair<std::string, ImageFeatures>> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::string field;
    std::size_t start = 0;
    while (true) {
      const std::size_t comma = line.find(',', start);
      f.push_back(line.substr(start, comma - start));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (f.size() != 10) throw FormatError("bad ground truth row: " + line);
    ImageFeatures ft;
    ft.nl_litres = std::stod(f[1]);
    ft.mct_hu = std::stod(f[2]);
    ft.nl_perc = std::stod(f[3]);
    ft.muscle_litres = std::stod(f[4]);
    ft.fat_litres = std::stod(f[5]);
    ft.mf_ratio = std::stod(f[6]);
    ft.gg_frac = std::stod(f[7]);
    ft.gg_volume_litres = std::stod(f[8]);
    const double mhu = std::stod(f[9]);
    if (ft.gg_volume_litres > 0) ft.gg_mhu = mhu;
    out.emplace_back(f[0], ft);
  }
  return out;
}

std::vector<FeatureRow> make_synthetic_cohort(int n, std::uint64_t seed) {
  if (n < 3) throw ArgumentError("make_synthetic_cohort: n too small");
  RngStream root(seed);
  std::vector<FeatureRow> rows;
  rows.reserve(n);
  for (int i = 0; i < n; ++i) {
    char idbuf[16];
    std::snprintf(idbuf, sizeof idbuf, "S%04d", i);
    RngStream rng = root.derive("row/" + std::string(idbuf));

    const double nl_perc =
        std::clamp(0.60 + 0.18 * rng.normal(), 0.05, 0.98);
    const double lung_vol = std::max(1.0, 4.0 + 0.8 * rng.normal());
    const double nl = nl_perc * lung_vol;
    const double mct = -750.0 + 180.0 * (1.0 - nl_perc) + 30.0 * rng.normal();
    const double muscle = std::max(0.1, 0.9 + 0.25 * rng.normal());
    const double fat = std::max(0.05, 0.5 + 0.2 * rng.normal());
    const int age = 20 + static_cast<int>(rng.uniform_int(76));
    const Sex sex = rng.bernoulli(0.5) ? Sex::Male : Sex::Female;
    const double gg_frac =
        std::clamp(0.10 + 0.08 * rng.normal(), 0.0, 0.8);
    const double gg_volume = gg_frac * lung_vol;
    const double gg_mhu =
        gg_frac > 0 ? -350.0 + 150.0 * gg_frac + 40.0 * rng.normal() : 0.0;

    ImageFeatures img;
    img.nl_litres = nl;
    img.mct_hu = mct;
    img.nl_perc = nl_perc;
    img.muscle_litres = muscle;
    img.fat_litres = fat;
    img.mf_ratio = muscle / fat;
    img.gg_frac = gg_frac;
    img.gg_volume_litres = gg_volume;
    if (gg_frac > 0) img.gg_mhu = gg_mhu;

    FeatureRow row;
    row.patient_id = idbuf;
    row.features = assemble_features(img, age, sex);
    row.outcome_icu = rng.bernoulli(phantom_icu_probability(img, age));
    row.outcome_death =
        rng.bernoulli(phantom_death_probability(img, age, sex));
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace lungct

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "lungct/errors.hpp"
#include "lungct/features.hpp"

using namespace lungct;

namespace {

// 10x10x10 grid whose first `lung_voxels` scan-order voxels form the lung.
struct LungFixture {
  VoxelGrid grid;
  LabelMask lung;

  LungFixture(int lung_voxels, std::array<double, 3> spacing = {1, 1, 1}) {
    grid.nx = grid.ny = grid.nz = 10;
    grid.spacing_mm = spacing;
    grid.values.assign(1000, 0);
    lung = make_mask(10, 10, 10);
    for (int i = 0; i < lung_voxels; ++i) lung.labels[i] = 1;
  }
};

}  // namespace

TEST_CASE("lung metrics on a 1000-voxel lung") {
  LungFixture fx(1000);
  for (int i = 0; i < 400; ++i) fx.grid.values[i] = -800;
  for (int i = 400; i < 1000; ++i) fx.grid.values[i] = -300;
  const LungMetrics m = lung_metrics(fx.grid, fx.lung);
  CHECK(m.nl_litres == doctest::Approx(4.0e-4).epsilon(1e-12));
  CHECK(m.mct_hu == doctest::Approx(-500.0).epsilon(1e-12));
  CHECK(m.nl_perc == doctest::Approx(0.4).epsilon(1e-12));
}

TEST_CASE("lung metrics edge cases") {
  LungFixture all(1000);
  for (auto& v : all.grid.values) v = -800;
  CHECK(lung_metrics(all.grid, all.lung).nl_perc == doctest::Approx(1.0));

  LungFixture none(1000);
  for (auto& v : none.grid.values) v = -300;
  const LungMetrics m = lung_metrics(none.grid, none.lung);
  CHECK(m.nl_litres == 0.0);
  CHECK(m.nl_perc == 0.0);

  LungFixture empty(0);
  CHECK_THROWS_AS(lung_metrics(empty.grid, empty.lung), EmptyInputError);
}

TEST_CASE("band bounds of lung metrics are configurable and inclusive") {
  LungFixture fx(2);
  fx.grid.values[0] = -900;
  fx.grid.values[1] = -700;
  CHECK(lung_metrics(fx.grid, fx.lung).nl_perc == doctest::Approx(1.0));
  CHECK(lung_metrics(fx.grid, fx.lung, -650, -500).nl_perc ==
        doctest::Approx(0.0));
}

TEST_CASE("muscle fat metrics") {
  LabelMask m = make_mask(10, 10, 10, MaskSemantics::MuscleFat);
  for (int i = 0; i < 300; ++i) m.labels[i] = 1;
  for (int i = 300; i < 400; ++i) m.labels[i] = 2;
  const MuscleFatMetrics mm = muscle_fat_metrics(m, {1, 1, 1});
  CHECK(mm.muscle_litres == doctest::Approx(3.0e-4).epsilon(1e-12));
  CHECK(mm.fat_litres == doctest::Approx(1.0e-4).epsilon(1e-12));
  CHECK(mm.mf_ratio == doctest::Approx(3.0).epsilon(1e-12));

  LabelMask eq = make_mask(4, 1, 1, MaskSemantics::MuscleFat);
  eq.labels = {1, 1, 2, 2};
  CHECK(muscle_fat_metrics(eq, {1, 1, 1}).mf_ratio == doctest::Approx(1.0));

  LabelMask nofat = make_mask(4, 1, 1, MaskSemantics::MuscleFat);
  nofat.labels = {1, 1, 1, 0};
  CHECK_THROWS_AS(muscle_fat_metrics(nofat, {1, 1, 1}), UndefinedError);

  bool imputed = false;
  const MuscleFatMetrics imp =
      muscle_fat_metrics_imputed(nofat, {1, 1, 1}, &imputed);
  CHECK(imputed);
  CHECK(imp.mf_ratio == doctest::Approx(3.0));  // min(muscle voxels, 1e3)
}

TEST_CASE("lesion metrics") {
  LungFixture fx(1000);
  LabelMask lesion = make_mask(10, 10, 10);
  for (int i = 0; i < 50; ++i) {
    lesion.labels[i] = 1;
    fx.grid.values[i] = -100;
  }
  const LesionMetrics lm = lesion_metrics(fx.grid, lesion, fx.lung);
  CHECK(lm.gg_volume_litres == doctest::Approx(5.0e-5).epsilon(1e-12));
  CHECK(lm.gg_frac == doctest::Approx(0.05).epsilon(1e-12));
  REQUIRE(lm.gg_mhu.has_value());
  CHECK(*lm.gg_mhu == doctest::Approx(-100.0).epsilon(1e-12));

  const LabelMask none = make_mask(10, 10, 10);
  const LesionMetrics empty = lesion_metrics(fx.grid, none, fx.lung);
  CHECK(empty.gg_volume_litres == 0.0);
  CHECK(empty.gg_frac == 0.0);
  CHECK_FALSE(empty.gg_mhu.has_value());

  CHECK(lesion_metrics(fx.grid, fx.lung, fx.lung).gg_frac ==
        doctest::Approx(1.0));

  // Lesion voxels outside the lung warn with their count.
  LungFixture small(10);
  LabelMask outside = make_mask(10, 10, 10);
  outside.labels[20] = outside.labels[21] = 1;
  Warnings warnings;
  lesion_metrics(small.grid, outside, small.lung, &warnings);
  REQUIRE(warnings.size() == 1);
  CHECK(warnings[0].find('2') != std::string::npos);
}

TEST_CASE("dice") {
  LabelMask a = make_mask(4, 1, 1);
  a.labels = {1, 1, 0, 0};
  LabelMask b = make_mask(4, 1, 1);
  b.labels = {0, 1, 1, 0};
  CHECK(dice(a, a) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(dice(a, b) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(dice(a, b) == dice(b, a));

  LabelMask c = make_mask(4, 1, 1);
  c.labels = {0, 0, 1, 1};
  CHECK(dice(a, c) == doctest::Approx(0.0));
  CHECK_THROWS_AS(dice(make_mask(4, 1, 1), make_mask(4, 1, 1)),
                  UndefinedError);
  CHECK_THROWS_AS(dice(a, make_mask(2, 1, 1)), ArgumentError);
}

TEST_CASE("rve") {
  LabelMask a = make_mask(4, 1, 1);
  LabelMask b = make_mask(4, 1, 1);
  a.labels = {1, 1, 1, 0};
  b.labels = {1, 1, 0, 0};
  CHECK(rve(a, b) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(rve(b, b) == doctest::Approx(0.0));
  LabelMask empty = make_mask(4, 1, 1);
  b.labels = {1, 1, 1, 1};
  CHECK(rve(empty, b) == doctest::Approx(1.0));
  CHECK_THROWS_AS(rve(a, empty), UndefinedError);
}

TEST_CASE("select_scan prefers the scan closest to the positive date") {
  PatientRecord rec;
  rec.patient_id = "P";
  rec.covid_positive_date = Date::parse("2020-01-08");
  rec.scans = {{"jan01", Date::parse("2020-01-01")},
               {"jan10", Date::parse("2020-01-10")}};
  CHECK(select_scan(rec) == "jan10");

  rec.scans = {{"jan06", Date::parse("2020-01-06")},
               {"jan10", Date::parse("2020-01-10")}};
  CHECK(select_scan(rec) == "jan06");  // tie, earlier wins

  rec.covid_positive_date.reset();
  rec.scans = {{"mar03", Date::parse("2020-03-03")},
               {"may05", Date::parse("2020-05-05")}};
  CHECK(select_scan(rec) == "may05");  // latest-scan fallback

  // Order invariance.
  std::swap(rec.scans[0], rec.scans[1]);
  CHECK(select_scan(rec) == "may05");
  rec.covid_positive_date = Date::parse("2020-01-08");
  rec.scans = {{"jan10", Date::parse("2020-01-10")},
               {"jan06", Date::parse("2020-01-06")}};
  CHECK(select_scan(rec) == "jan06");

  rec.scans.clear();
  CHECK_THROWS_AS(select_scan(rec), EmptyInputError);
}

TEST_CASE("assemble_features places age, sex and the GG_MHU sentinel") {
  ImageFeatures img;
  img.nl_litres = 1.5;
  img.mct_hu = -600;
  img.nl_perc = 0.7;
  img.muscle_litres = 0.9;
  img.fat_litres = 0.45;
  img.mf_ratio = 2.0;
  img.gg_frac = 0.05;
  img.gg_volume_litres = 0.2;
  img.gg_mhu = -120.0;

  const auto v = assemble_features(img, 66, Sex::Male);
  CHECK(v[0] == 1.5);
  CHECK(v[1] == -600);
  CHECK(v[2] == 0.7);
  CHECK(v[3] == 0.9);
  CHECK(v[4] == 0.45);
  CHECK(v[5] == 2.0);
  CHECK(v[6] == 66);
  CHECK(v[7] == 1);
  CHECK(v[8] == 0.05);
  CHECK(v[9] == 0.2);
  CHECK(v[10] == -120.0);

  CHECK(assemble_features(img, 40, Sex::Female)[7] == 0);

  img.gg_volume_litres = 0.0;
  img.gg_frac = 0.0;
  img.gg_mhu.reset();
  CHECK(assemble_features(img, 40, Sex::Female)[10] == 0.0);  // sentinel
}

TEST_CASE("scaling spacing scales volumes cubically, ratios not at all") {
  LungFixture fx(500, {1, 1, 1});
  for (int i = 0; i < 200; ++i) fx.grid.values[i] = -800;
  LabelMask lesion = make_mask(10, 10, 10);
  for (int i = 300; i < 350; ++i) {
    lesion.labels[i] = 1;
    fx.grid.values[i] = -100;
  }
  LabelMask mf = make_mask(10, 10, 10, MaskSemantics::MuscleFat);
  for (int i = 600; i < 660; ++i) mf.labels[i] = 1;
  for (int i = 660; i < 690; ++i) mf.labels[i] = 2;

  const double s = 2.0;
  VoxelGrid scaled = fx.grid;
  scaled.spacing_mm = {s, s, s};

  const LungMetrics l1 = lung_metrics(fx.grid, fx.lung);
  const LungMetrics l2 = lung_metrics(scaled, fx.lung);
  CHECK(l2.nl_litres == doctest::Approx(l1.nl_litres * s * s * s));
  CHECK(l2.nl_perc == doctest::Approx(l1.nl_perc));
  CHECK(l2.mct_hu == doctest::Approx(l1.mct_hu));

  const MuscleFatMetrics m1 = muscle_fat_metrics(mf, fx.grid.spacing_mm);
  const MuscleFatMetrics m2 = muscle_fat_metrics(mf, scaled.spacing_mm);
  CHECK(m2.muscle_litres == doctest::Approx(m1.muscle_litres * s * s * s));
  CHECK(m2.fat_litres == doctest::Approx(m1.fat_litres * s * s * s));
  CHECK(m2.mf_ratio == doctest::Approx(m1.mf_ratio));

  const LesionMetrics g1 = lesion_metrics(fx.grid, lesion, fx.lung);
  const LesionMetrics g2 = lesion_metrics(scaled, lesion, fx.lung);
  CHECK(g2.gg_volume_litres ==
        doctest::Approx(g1.gg_volume_litres * s * s * s));
  CHECK(g2.gg_frac == doctest::Approx(g1.gg_frac));
  CHECK(*g2.gg_mhu == doctest::Approx(*g1.gg_mhu));
}

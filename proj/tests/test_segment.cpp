#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <map>

#include "lungct/errors.hpp"
#include "lungct/rng.hpp"
#include "lungct/segment.hpp"
#include "oracles.hpp"

using namespace lungct;

namespace {

VoxelGrid uniform_grid(int nx, int ny, int nz, std::int16_t hu) {
  VoxelGrid g;
  g.nx = nx;
  g.ny = ny;
  g.nz = nz;
  g.values.assign(static_cast<std::size_t>(nx) * ny * nz, hu);
  return g;
}

LabelMask random_mask(int nx, int ny, int nz, double p, RngStream& rng) {
  LabelMask m = make_mask(nx, ny, nz);
  for (auto& v : m.labels) v = rng.bernoulli(p) ? 1 : 0;
  return m;
}

/// Partitions agree when voxels share a component in one labeling iff they
/// share a component in the other (label names may differ).
bool same_partition(const std::vector<std::int32_t>& a,
                    const std::vector<int>& b) {
  std::map<std::int32_t, int> fwd;
  std::map<int, std::int32_t> rev;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if ((a[i] == 0) != (b[i] == 0)) return false;
    if (a[i] == 0) continue;
    const auto [fit, fnew] = fwd.emplace(a[i], b[i]);
    if (!fnew && fit->second != b[i]) return false;
    const auto [rit, rnew] = rev.emplace(b[i], a[i]);
    if (!rnew && rit->second != a[i]) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("threshold band is inclusive at both ends") {
  VoxelGrid g = uniform_grid(2, 2, 1, 0);
  g.values = {-900, -700, -701, -699};
  const LabelMask m = threshold_band(g, -900, -700);
  CHECK(m.labels == std::vector<std::uint8_t>{1, 1, 1, 0});
  CHECK(threshold_band(uniform_grid(3, 3, 3, 0), -900, -700).count(1) == 0);
  CHECK_THROWS_AS(threshold_band(g, -700, -900), ArgumentError);
}

TEST_CASE("widening the band never removes foreground") {
  RngStream rng(11);
  VoxelGrid g = uniform_grid(6, 6, 6, 0);
  for (auto& v : g.values)
    v = static_cast<std::int16_t>(-1000 + rng.uniform_int(1200));
  const LabelMask narrow = threshold_band(g, -900, -700);
  const LabelMask wide = threshold_band(g, -950, -650);
  for (std::size_t i = 0; i < narrow.labels.size(); ++i)
    if (narrow.labels[i]) CHECK(wide.labels[i] == 1);
}

TEST_CASE("corner voxels connect under 26 but not 6 connectivity") {
  LabelMask m = make_mask(3, 3, 3);
  m.labels[m.index(0, 0, 0)] = 1;
  m.labels[m.index(1, 1, 1)] = 1;
  CHECK(connected_components_3d(m, Connectivity::Face6).num_components() == 2);
  CHECK(connected_components_3d(m, Connectivity::Full26).num_components() ==
        1);

  LabelMask far = make_mask(3, 3, 3);
  far.labels[far.index(0, 0, 0)] = 1;
  far.labels[far.index(2, 2, 2)] = 1;
  CHECK(connected_components_3d(far, Connectivity::Full26).num_components() ==
        2);
}

TEST_CASE("component ids follow first-encounter scan order and sizes add up") {
  LabelMask m = make_mask(4, 1, 1);
  m.labels = {0, 1, 0, 1};
  const auto lab = connected_components_3d(m, Connectivity::Face6);
  CHECK(lab.labels[1] == 1);
  CHECK(lab.labels[3] == 2);
  CHECK(lab.component_sizes == std::vector<std::size_t>{1, 1});

  RngStream rng(5);
  for (int it = 0; it < 50; ++it) {
    const LabelMask r = random_mask(5, 5, 5, 0.4, rng);
    for (auto conn : {Connectivity::Face6, Connectivity::Full26}) {
      const auto got = connected_components_3d(r, conn);
      std::size_t total = 0;
      for (auto s : got.component_sizes) total += s;
      CHECK(total == r.count(1));
      CHECK(same_partition(got.labels,
                           oracles::flood_fill_components(r, conn)));
    }
  }
}

TEST_CASE("largest component keeps the biggest, ties to earliest") {
  LabelMask m = make_mask(8, 1, 1);
  // Sizes 3 and 2.
  m.labels = {1, 1, 1, 0, 1, 1, 0, 0};
  const LabelMask big = largest_component(m, Connectivity::Face6);
  CHECK(big.count(1) == 3);
  CHECK(big.labels[0] == 1);
  CHECK(big.labels[4] == 0);

  // Equal sizes: earlier scan-order component wins.
  LabelMask tie = make_mask(8, 1, 1);
  tie.labels = {0, 1, 1, 0, 0, 1, 1, 0};
  const LabelMask kept = largest_component(tie, Connectivity::Face6);
  CHECK(kept.labels[1] == 1);
  CHECK(kept.labels[5] == 0);

  // Single component: identity.
  LabelMask one = make_mask(3, 1, 1);
  one.labels = {1, 1, 0};
  CHECK(largest_component(one, Connectivity::Face6).labels == one.labels);

  CHECK_THROWS_AS(largest_component(make_mask(2, 2, 2), Connectivity::Face6),
                  EmptyInputError);
}

TEST_CASE("largest component output is one connected subset of its input") {
  RngStream rng(17);
  for (int it = 0; it < 30; ++it) {
    const LabelMask m = random_mask(6, 6, 6, 0.3, rng);
    if (m.count(1) == 0) continue;
    const LabelMask big = largest_component(m, Connectivity::Full26);
    for (std::size_t i = 0; i < m.size(); ++i)
      if (big.labels[i]) CHECK(m.labels[i] == 1);
    CHECK(connected_components_3d(big, Connectivity::Full26)
              .num_components() == 1);
  }
}

TEST_CASE("restrict_to_lung_slices zeroes slices outside the largest lung") {
  const int nx = 4, ny = 4, nz = 10;
  LabelMask lung = make_mask(nx, ny, nz);
  // Largest component spans slices 3..7; a decoy single voxel sits at z=0.
  for (int z = 3; z <= 7; ++z)
    for (int y = 1; y <= 2; ++y)
      for (int x = 1; x <= 2; ++x) lung.labels[lung.index(x, y, z)] = 1;
  lung.labels[lung.index(0, 0, 0)] = 1;

  LabelMask target = make_mask(nx, ny, nz, MaskSemantics::MuscleFat);
  for (int z = 0; z < nz; ++z) target.labels[target.index(0, 1, z)] = 1;

  const LabelMask out = restrict_to_lung_slices(target, lung);
  for (int z = 0; z < nz; ++z) {
    const bool kept = z >= 3 && z <= 7;
    CHECK(out.at(0, 1, z) == (kept ? 1 : 0));
  }

  // Lung everywhere: identity. Empty target: stays empty.
  LabelMask full = make_mask(nx, ny, nz);
  for (auto& v : full.labels) v = 1;
  CHECK(restrict_to_lung_slices(target, full).labels == target.labels);
  const LabelMask empty_target = make_mask(nx, ny, nz);
  CHECK(restrict_to_lung_slices(empty_target, lung).count(1) == 0);

  CHECK_THROWS_AS(restrict_to_lung_slices(target, make_mask(nx, ny, nz)),
                  EmptyInputError);
}

TEST_CASE("restrict_to_lung_slices output is a subset of its target") {
  RngStream rng(23);
  for (int it = 0; it < 20; ++it) {
    const LabelMask lung = random_mask(5, 5, 8, 0.2, rng);
    if (lung.count(1) == 0) continue;
    const LabelMask target = random_mask(5, 5, 8, 0.4, rng);
    const LabelMask out = restrict_to_lung_slices(target, lung);
    for (std::size_t i = 0; i < out.size(); ++i)
      if (out.labels[i]) CHECK(target.labels[i] == 1);
  }
}

TEST_CASE("fill_holes_2d fills enclosed regions and is idempotent") {
  LabelMask ring = make_mask(5, 5, 1);
  for (int y = 1; y <= 3; ++y)
    for (int x = 1; x <= 3; ++x) ring.labels[ring.index(x, y, 0)] = 1;
  ring.labels[ring.index(2, 2, 0)] = 0;  // hole
  const LabelMask filled = fill_holes_2d(ring);
  CHECK(filled.at(2, 2, 0) == 1);
  CHECK(filled.count(1) == 9);

  // Open notch to the border stays open.
  LabelMask notch = ring;
  notch.labels[notch.index(2, 1, 0)] = 0;
  CHECK(fill_holes_2d(notch).at(2, 2, 0) == 0);

  RngStream rng(31);
  for (int it = 0; it < 30; ++it) {
    const LabelMask m = random_mask(6, 6, 3, 0.5, rng);
    const LabelMask once = fill_holes_2d(m);
    CHECK(fill_holes_2d(once).labels == once.labels);
    for (std::size_t i = 0; i < m.size(); ++i)
      if (m.labels[i]) CHECK(once.labels[i] == 1);
  }
}

TEST_CASE("baseline segmenter recovers air regions inside a body") {
  const int n = 16;
  VoxelGrid g = uniform_grid(n, n, n, -1000);
  LabelMask expected = make_mask(n, n, n);
  // Body block with two air pockets.
  for (int z = 1; z < n - 1; ++z)
    for (int y = 2; y < n - 2; ++y)
      for (int x = 2; x < n - 2; ++x) g.values[g.index(x, y, z)] = 40;
  auto carve = [&](int x0, int x1) {
    for (int z = 4; z < n - 4; ++z)
      for (int y = 5; y < n - 5; ++y)
        for (int x = x0; x < x1; ++x) {
          g.values[g.index(x, y, z)] = -850;
          expected.labels[expected.index(x, y, z)] = 1;
        }
  };
  carve(4, 7);
  carve(9, 12);
  const LabelMask seg = baseline_lung_segment(g);
  CHECK(seg.labels == expected.labels);

  // Single pocket: one component.
  VoxelGrid g1 = uniform_grid(n, n, n, -1000);
  for (int z = 1; z < n - 1; ++z)
    for (int y = 2; y < n - 2; ++y)
      for (int x = 2; x < n - 2; ++x) g1.values[g1.index(x, y, z)] = 40;
  for (int z = 4; z < 8; ++z)
    for (int y = 5; y < 8; ++y)
      for (int x = 4; x < 8; ++x) g1.values[g1.index(x, y, z)] = -850;
  const LabelMask one = baseline_lung_segment(g1);
  CHECK(connected_components_3d(one, Connectivity::Full26).num_components() ==
        1);

  CHECK_THROWS_AS(baseline_lung_segment(uniform_grid(8, 8, 8, 0)),
                  SegmentationFailedError);
}

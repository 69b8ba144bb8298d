#include "lungct/segment.hpp"

#include <algorithm>
#include <queue>

#include "lungct/errors.hpp"

namespace lungct {
namespace {

struct Offset {
  int dx, dy, dz;
};

std::vector<Offset> neighbor_offsets(Connectivity c) {
  std::vector<Offset> out;
  if (c == Connectivity::Face6) {
    out = {{-1, 0, 0}, {1, 0, 0}, {0, -1, 0}, {0, 1, 0}, {0, 0, -1}, {0, 0, 1}};
  } else {
    for (int dz = -1; dz <= 1; ++dz)
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx)
          if (dx || dy || dz) out.push_back({dx, dy, dz});
  }
  return out;
}

void require_binary(const LabelMask& mask, const char* op) {
  if (mask.semantics != MaskSemantics::Binary)
    throw ArgumentError(std::string(op) + " requires a binary mask");
}

}  // namespace

LabelMask threshold_band(const VoxelGrid& grid, int lo, int hi) {
  if (lo > hi)
    throw ArgumentError("threshold_band: lo (" + std::to_string(lo) +
                        ") > hi (" + std::to_string(hi) + ")");
  LabelMask mask = make_mask(grid.nx, grid.ny, grid.nz);
  for (std::size_t i = 0; i < grid.values.size(); ++i)
    mask.labels[i] = (grid.values[i] >= lo && grid.values[i] <= hi) ? 1 : 0;
  return mask;
}

ComponentLabeling connected_components_3d(const LabelMask& mask,
                                          Connectivity connectivity) {
  require_binary(mask, "connected_components_3d");
  ComponentLabeling cl;
  cl.nx = mask.nx;
  cl.ny = mask.ny;
  cl.nz = mask.nz;
  cl.connectivity = connectivity;
  cl.labels.assign(mask.size(), 0);
  const auto offsets = neighbor_offsets(connectivity);

  std::queue<std::size_t> frontier;
  for (int z = 0; z < mask.nz; ++z)
    for (int y = 0; y < mask.ny; ++y)
      for (int x = 0; x < mask.nx; ++x) {
        const std::size_t i = mask.index(x, y, z);
        if (!mask.labels[i] || cl.labels[i]) continue;
        const std::int32_t id =
            static_cast<std::int32_t>(cl.component_sizes.size()) + 1;
        cl.component_sizes.push_back(0);
        cl.labels[i] = id;
        frontier.push(i);
        while (!frontier.empty()) {
          const std::size_t j = frontier.front();
          frontier.pop();
          ++cl.component_sizes[id - 1];
          const int jz = static_cast<int>(j / (mask.nx * mask.ny));
          const int jy = static_cast<int>(j / mask.nx) % mask.ny;
          const int jx = static_cast<int>(j % mask.nx);
          for (const auto& o : offsets) {
            const int px = jx + o.dx, py = jy + o.dy, pz = jz + o.dz;
            if (px < 0 || px >= mask.nx || py < 0 || py >= mask.ny ||
                pz < 0 || pz >= mask.nz)
              continue;
            const std::size_t p = mask.index(px, py, pz);
            if (mask.labels[p] && !cl.labels[p]) {
              cl.labels[p] = id;
              frontier.push(p);
            }
          }
        }
      }
  return cl;
}

LabelMask largest_component(const LabelMask& mask, Connectivity connectivity) {
  require_binary(mask, "largest_component");
  const ComponentLabeling cl = connected_components_3d(mask, connectivity);
  if (cl.component_sizes.empty())
    throw EmptyInputError("largest_component: mask has no foreground voxel");
  std::int32_t best = 1;
  for (std::int32_t id = 2; id <= cl.num_components(); ++id)
    if (cl.component_sizes[id - 1] > cl.component_sizes[best - 1]) best = id;
  LabelMask out = make_mask(mask.nx, mask.ny, mask.nz);
  for (std::size_t i = 0; i < out.size(); ++i)
    out.labels[i] = (cl.labels[i] == best) ? 1 : 0;
  return out;
}

LabelMask restrict_to_lung_slices(const LabelMask& target_mask,
                                  const LabelMask& lung_mask,
                                  Connectivity connectivity) {
  require_binary(lung_mask, "restrict_to_lung_slices (lung mask)");
  if (!target_mask.same_dims(lung_mask))
    throw ArgumentError("restrict_to_lung_slices: dims differ");
  const LabelMask core = largest_component(lung_mask, connectivity);

  std::vector<char> keep(target_mask.nz, 0);
  for (int z = 0; z < core.nz; ++z) {
    const std::size_t base = static_cast<std::size_t>(z) * core.nx * core.ny;
    for (std::size_t i = 0; i < static_cast<std::size_t>(core.nx) * core.ny;
         ++i)
      if (core.labels[base + i]) {
        keep[z] = 1;
        break;
      }
  }
  LabelMask out = target_mask;
  for (int z = 0; z < out.nz; ++z) {
    if (keep[z]) continue;
    const std::size_t base = static_cast<std::size_t>(z) * out.nx * out.ny;
    std::fill_n(out.labels.begin() + base,
                static_cast<std::size_t>(out.nx) * out.ny, 0);
  }
  return out;
}

LabelMask fill_holes_2d(const LabelMask& mask) {
  require_binary(mask, "fill_holes_2d");
  LabelMask out = mask;
  std::vector<char> outside;
  std::queue<int> frontier;
  for (int z = 0; z < mask.nz; ++z) {
    const std::size_t base = static_cast<std::size_t>(z) * mask.nx * mask.ny;
    outside.assign(static_cast<std::size_t>(mask.nx) * mask.ny, 0);
    auto push = [&](int x, int y) {
      const int i = y * mask.nx + x;
      if (!outside[i] && !mask.labels[base + i]) {
        outside[i] = 1;
        frontier.push(i);
      }
    };
    for (int x = 0; x < mask.nx; ++x) {
      push(x, 0);
      push(x, mask.ny - 1);
    }
    for (int y = 0; y < mask.ny; ++y) {
      push(0, y);
      push(mask.nx - 1, y);
    }
    while (!frontier.empty()) {
      const int i = frontier.front();
      frontier.pop();
      const int x = i % mask.nx, y = i / mask.nx;
      if (x > 0) push(x - 1, y);
      if (x + 1 < mask.nx) push(x + 1, y);
      if (y > 0) push(x, y - 1);
      if (y + 1 < mask.ny) push(x, y + 1);
    }
    for (std::size_t i = 0; i < outside.size(); ++i)
      if (!mask.labels[base + i] && !outside[i]) out.labels[base + i] = 1;
  }
  return out;
}

LabelMask baseline_lung_segment(const VoxelGrid& grid, int band_lo,
                                int band_hi, Connectivity connectivity) {
  const LabelMask air = threshold_band(grid, band_lo, band_hi);
  const ComponentLabeling cl = connected_components_3d(air, connectivity);

  // Components touching the x/y border are body-exterior air.
  std::vector<char> touches_border(cl.component_sizes.size() + 1, 0);
  for (int z = 0; z < air.nz; ++z)
    for (int y = 0; y < air.ny; ++y)
      for (int x = 0; x < air.nx; ++x) {
        if (x != 0 && x != air.nx - 1 && y != 0 && y != air.ny - 1) continue;
        const std::int32_t id = cl.labels[air.index(x, y, z)];
        if (id) touches_border[id] = 1;
      }

  std::vector<std::int32_t> candidates;
  for (std::int32_t id = 1; id <= cl.num_components(); ++id)
    if (!touches_border[id]) candidates.push_back(id);
  if (candidates.empty())
    throw SegmentationFailedError(
        "baseline_lung_segment: no candidate lung component");

  std::stable_sort(candidates.begin(), candidates.end(),
                   [&](std::int32_t a, std::int32_t b) {
                     return cl.component_sizes[a - 1] > cl.component_sizes[b - 1];
                   });
  if (candidates.size() > 2) candidates.resize(2);

  LabelMask lungs = make_mask(grid.nx, grid.ny, grid.nz);
  for (std::size_t i = 0; i < lungs.size(); ++i)
    lungs.labels[i] = (cl.labels[i] == candidates[0] ||
                       (candidates.size() > 1 && cl.labels[i] == candidates[1]))
                          ? 1
                          : 0;
  return fill_holes_2d(lungs);
}

}  // namespace lungct

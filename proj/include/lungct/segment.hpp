#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "lungct/volume.hpp"

namespace lungct {

enum class Connectivity { Face6, Full26 };

/// Partition of a binary mask's foreground into connected components.
/// Component ids are contiguous 1..K, assigned in first-encounter scan
/// order (x-fastest); 0 is background.
struct ComponentLabeling {
  int nx = 0, ny = 0, nz = 0;
  Connectivity connectivity = Connectivity::Full26;
  std::vector<std::int32_t> labels;
  std::vector<std::size_t> component_sizes;  // size of component k at [k-1]

  int num_components() const {
    return static_cast<int>(component_sizes.size());
  }
};

/// Binary mask of voxels with lo <= HU <= hi (inclusive both ends).
LabelMask threshold_band(const VoxelGrid& grid, int lo, int hi);

ComponentLabeling connected_components_3d(const LabelMask& mask,
                                          Connectivity connectivity);

/// Keeps only the component with the most voxels; ties go to the smallest
/// component id (earliest first-encounter in scan order).
LabelMask largest_component(const LabelMask& mask, Connectivity connectivity);

/// Zeroes every axial slice of target_mask where the largest 3D component
/// of lung_mask has no voxel; other slices are left unchanged.
LabelMask restrict_to_lung_slices(const LabelMask& target_mask,
                                  const LabelMask& lung_mask,
                                  Connectivity connectivity =
                                      Connectivity::Full26);

/// Per axial slice, background regions not face-4 connected to the slice
/// border become foreground.
LabelMask fill_holes_2d(const LabelMask& mask);

/// Classical lung segmenter: HU band threshold, drop components touching
/// the x/y border (exterior air), keep the up-to-two largest remaining
/// components, fill 2D holes.
LabelMask baseline_lung_segment(const VoxelGrid& grid, int band_lo = -1000,
                                int band_hi = -400,
                                Connectivity connectivity =
                                    Connectivity::Full26);

}  // namespace lungct

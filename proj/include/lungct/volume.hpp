#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace lungct {

using Warnings = std::vector<std::string>;

/// 3D scalar field of Hounsfield-unit samples with physical spacing.
/// Values are stored x-fastest, z slowest; axial slice k is the set of
/// voxels with z == k. Immutable after construction by convention.
struct VoxelGrid {
  int nx = 0, ny = 0, nz = 0;
  std::array<double, 3> spacing_mm{1.0, 1.0, 1.0};
  std::vector<std::int16_t> values;

  std::size_t size() const { return values.size(); }
  std::size_t index(int x, int y, int z) const {
    return static_cast<std::size_t>(z) * ny * nx +
           static_cast<std::size_t>(y) * nx + x;
  }
  std::int16_t at(int x, int y, int z) const { return values[index(x, y, z)]; }
};

enum class MaskSemantics {
  Binary,     // 0 = background, 1 = foreground
  MuscleFat,  // 0 = background, 1 = muscle, 2 = fat
};

/// Integer label volume aligned to a VoxelGrid. Same axis convention.
struct LabelMask {
  int nx = 0, ny = 0, nz = 0;
  MaskSemantics semantics = MaskSemantics::Binary;
  std::vector<std::uint8_t> labels;

  std::size_t size() const { return labels.size(); }
  std::size_t index(int x, int y, int z) const {
    return static_cast<std::size_t>(z) * ny * nx +
           static_cast<std::size_t>(y) * nx + x;
  }
  std::uint8_t at(int x, int y, int z) const { return labels[index(x, y, z)]; }

  std::size_t count(std::uint8_t label) const;
  bool same_dims(const LabelMask& other) const {
    return nx == other.nx && ny == other.ny && nz == other.nz;
  }
  bool same_dims(const VoxelGrid& grid) const {
    return nx == grid.nx && ny == grid.ny && nz == grid.nz;
  }
};

/// Makes an all-background mask with the given dims.
LabelMask make_mask(int nx, int ny, int nz,
                    MaskSemantics semantics = MaskSemantics::Binary);

/// Reads a volume described by a JSON sidecar:
///   {"dims":[nx,ny,nz], "spacing_mm":[sx,sy,sz], "raw":"<relative path>"}
/// The raw file holds little-endian signed 16-bit samples, x-fastest.
/// HU values outside [-1024, 3071] produce a warning, not an error.
VoxelGrid read_volume(const std::filesystem::path& sidecar_path,
                      Warnings* warnings = nullptr);

/// Writes the sidecar and the raw samples ("<stem>.raw" next to the sidecar).
void write_volume(const VoxelGrid& grid,
                  const std::filesystem::path& sidecar_path);

/// Reads a label mask (same sidecar scheme, raw uint8). Labels outside the
/// declared semantics set raise a ValidationError naming label and index.
LabelMask read_mask(const std::filesystem::path& sidecar_path,
                    MaskSemantics semantics);

void write_mask(const LabelMask& mask,
                const std::filesystem::path& sidecar_path);

/// Writes bytes to a sibling temp file, then renames over the target, so
/// readers never observe a partial file.
void write_file_atomic(const std::filesystem::path& path, const void* data,
                       std::size_t bytes);
void write_text_atomic(const std::filesystem::path& path,
                       const std::string& text);

/// Physical volume of one voxel in litres: sx*sy*sz / 1e6 (mm^3 -> L).
double voxel_volume_litres(const VoxelGrid& grid);
double voxel_volume_litres(const std::array<double, 3>& spacing_mm);

}  // namespace lungct

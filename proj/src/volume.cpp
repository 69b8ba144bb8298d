#include "lungct/volume.hpp"

#include <fstream>
#include <json.hpp>

#include "lungct/errors.hpp"

namespace lungct {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

json load_sidecar(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open sidecar: " + path.string());
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw FormatError("garbled sidecar " + path.string() + ": " + e.what());
  }
  return doc;
}

void parse_dims(const json& doc, const fs::path& path, int& nx, int& ny,
                int& nz) {
  if (!doc.contains("dims") || !doc["dims"].is_array() ||
      doc["dims"].size() != 3)
    throw FormatError("sidecar missing dims[3]: " + path.string());
  nx = doc["dims"][0].get<int>();
  ny = doc["dims"][1].get<int>();
  nz = doc["dims"][2].get<int>();
  if (nx <= 0 || ny <= 0 || nz <= 0)
    throw ValidationError("non-positive dims in " + path.string());
}

fs::path raw_path(const json& doc, const fs::path& sidecar) {
  if (!doc.contains("raw") || !doc["raw"].is_string())
    throw FormatError("sidecar missing raw path: " + sidecar.string());
  return sidecar.parent_path() / doc["raw"].get<std::string>();
}

std::vector<std::uint8_t> read_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open raw file: " + path.string());
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in),
                                   std::istreambuf_iterator<char>());
}

}  // namespace

void write_file_atomic(const fs::path& path, const void* data,
                       std::size_t bytes) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out.write(static_cast<const char*>(data), bytes);
    if (!out) throw Error("short write to " + tmp.string());
  }
  fs::rename(tmp, path);
}

void write_text_atomic(const fs::path& path, const std::string& text) {
  write_file_atomic(path, text.data(), text.size());
}

std::size_t LabelMask::count(std::uint8_t label) const {
  std::size_t n = 0;
  for (std::uint8_t v : labels) n += (v == label);
  return n;
}

LabelMask make_mask(int nx, int ny, int nz, MaskSemantics semantics) {
  LabelMask m;
  m.nx = nx;
  m.ny = ny;
  m.nz = nz;
  m.semantics = semantics;
  m.labels.assign(static_cast<std::size_t>(nx) * ny * nz, 0);
  return m;
}

VoxelGrid read_volume(const fs::path& sidecar_path, Warnings* warnings) {
  const json doc = load_sidecar(sidecar_path);
  VoxelGrid grid;
  parse_dims(doc, sidecar_path, grid.nx, grid.ny, grid.nz);
  if (!doc.contains("spacing_mm") || !doc["spacing_mm"].is_array() ||
      doc["spacing_mm"].size() != 3)
    throw FormatError("sidecar missing spacing_mm[3]: " +
                      sidecar_path.string());
  for (int i = 0; i < 3; ++i)
    grid.spacing_mm[i] = doc["spacing_mm"][i].get<double>();
  for (double s : grid.spacing_mm)
    if (!(s > 0.0))
      throw ValidationError("non-positive spacing in " + sidecar_path.string());

  const auto bytes = read_bytes(raw_path(doc, sidecar_path));
  const std::size_t n =
      static_cast<std::size_t>(grid.nx) * grid.ny * grid.nz;
  if (bytes.size() != 2 * n)
    throw IntegrityError("raw size mismatch for " + sidecar_path.string() +
                         ": declared dims need " + std::to_string(2 * n) +
                         " bytes, file has " + std::to_string(bytes.size()));
  grid.values.resize(n);
  std::size_t out_of_range = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint16_t u =
        static_cast<std::uint16_t>(bytes[2 * i]) |
        (static_cast<std::uint16_t>(bytes[2 * i + 1]) << 8);
    const std::int16_t v = static_cast<std::int16_t>(u);
    grid.values[i] = v;
    out_of_range += (v < -1024 || v > 3071);
  }
  if (out_of_range > 0 && warnings)
    warnings->push_back(sidecar_path.string() + ": " +
                        std::to_string(out_of_range) +
                        " HU sample(s) outside [-1024, 3071]");
  return grid;
}

void write_volume(const VoxelGrid& grid, const fs::path& sidecar_path) {
  const std::string raw_name = sidecar_path.stem().string() + ".raw";
  std::vector<std::uint8_t> bytes(grid.values.size() * 2);
  for (std::size_t i = 0; i < grid.values.size(); ++i) {
    const std::uint16_t u = static_cast<std::uint16_t>(grid.values[i]);
    bytes[2 * i] = static_cast<std::uint8_t>(u & 0xff);
    bytes[2 * i + 1] = static_cast<std::uint8_t>(u >> 8);
  }
  write_file_atomic(sidecar_path.parent_path() / raw_name, bytes.data(),
                    bytes.size());
  json doc;
  doc["dims"] = {grid.nx, grid.ny, grid.nz};
  doc["spacing_mm"] = {grid.spacing_mm[0], grid.spacing_mm[1],
                       grid.spacing_mm[2]};
  doc["raw"] = raw_name;
  const std::string text = doc.dump(2) + "\n";
  write_file_atomic(sidecar_path, text.data(), text.size());
}

LabelMask read_mask(const fs::path& sidecar_path, MaskSemantics semantics) {
  const json doc = load_sidecar(sidecar_path);
  LabelMask mask;
  mask.semantics = semantics;
  parse_dims(doc, sidecar_path, mask.nx, mask.ny, mask.nz);
  auto bytes = read_bytes(raw_path(doc, sidecar_path));
  const std::size_t n =
      static_cast<std::size_t>(mask.nx) * mask.ny * mask.nz;
  if (bytes.size() != n)
    throw IntegrityError("raw size mismatch for " + sidecar_path.string() +
                         ": declared dims need " + std::to_string(n) +
                         " bytes, file has " + std::to_string(bytes.size()));
  const std::uint8_t max_label =
      semantics == MaskSemantics::Binary ? 1 : 2;
  for (std::size_t i = 0; i < n; ++i) {
    if (bytes[i] > max_label)
      throw ValidationError("label " + std::to_string(bytes[i]) +
                            " outside semantics set at voxel index " +
                            std::to_string(i) + " in " +
                            sidecar_path.string());
  }
  mask.labels = std::move(bytes);
  return mask;
}

void write_mask(const LabelMask& mask, const fs::path& sidecar_path) {
  const std::string raw_name = sidecar_path.stem().string() + ".raw";
  write_file_atomic(sidecar_path.parent_path() / raw_name, mask.labels.data(),
                    mask.labels.size());
  json doc;
  doc["dims"] = {mask.nx, mask.ny, mask.nz};
  doc["raw"] = raw_name;
  const std::string text = doc.dump(2) + "\n";
  write_file_atomic(sidecar_path, text.data(), text.size());
}

double voxel_volume_litres(const std::array<double, 3>& spacing_mm) {
  return spacing_mm[0] * spacing_mm[1] * spacing_mm[2] / 1e6;
}

double voxel_volume_litres(const VoxelGrid& grid) {
  return voxel_volume_litres(grid.spacing_mm);
}

}  // namespace lungct

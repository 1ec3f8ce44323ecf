#ifndef ROOMLAY_ROOMGEN_HPP
#define ROOMLAY_ROOMGEN_HPP

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "roomlay/layout.hpp"

namespace roomlay {

// Bounding-rectangle side lengths are drawn from [min, max] meters.
struct SizeRange {
  double min = 3.0;
  double max = 8.0;
};

inline constexpr double kMinAnchorEdge = 0.5;

// Rectilinear room with `walls` in {4, 6, 8, 10}: a rectangle whose corners are
// cut by staircase notches, each step adding two walls.
RoomLayout generate_anchor(std::uint64_t seed, int walls, SizeRange size = {},
                           std::string id = "anchor");

struct AugmentationRecord {
  std::string anchor_id;
  int wall_index = 0;
  double offset = 0.0;  // meters along the outward normal
  double l_min = 0.0;   // shortest wall of the anchor
};

struct AugmentedRoom {
  RoomLayout layout;
  AugmentationRecord record;
};

double shortest_wall(const Polygon& corners);

// Moves both endpoints of wall `wall_index` (corner i to corner i+1) along the
// wall's outward normal. Neighbouring walls stretch or shrink accordingly.
RoomLayout translate_wall(const RoomLayout& room, int wall_index, double offset);

// Conditional uniform augmentation: uniform wall choice, offset uniform in
// [-l_min/2, l_min/2]. Invalid results are resampled (offset only).
AugmentedRoom augment(const RoomLayout& anchor, std::uint64_t seed, std::string id = {});

struct ManifestEntry {
  std::string id;
  std::string split;  // train | val | test
  std::optional<std::string> anchor;
  std::optional<int> wall_index;
  std::optional<double> offset;
  std::optional<double> l_min;
};

struct Manifest {
  std::vector<ManifestEntry> layouts;
};

// Deterministic train/val/test assignment from the id hash (80/10/10).
std::string split_for_id(const std::string& id);

std::string manifest_to_json(const Manifest& manifest);
Manifest manifest_from_json(const std::string& text);

struct DatasetOptions {
  int anchors = 10;
  int augment_factor = 0;
  std::uint64_t seed = 0;
  SizeRange size;
  std::vector<int> wall_choices = {4, 6, 8, 10};
  std::string id_prefix = "room";
};

struct GeneratedDataset {
  std::vector<RoomLayout> layouts;
  Manifest manifest;
};

GeneratedDataset generate_dataset(const DatasetOptions& options);

// Writes <out_dir>/manifest.json and <out_dir>/layouts/<id>.json.
Manifest build_dataset(const DatasetOptions& options, const std::filesystem::path& out_dir);

}  // namespace roomlay

#endif  // ROOMLAY_ROOMGEN_HPP

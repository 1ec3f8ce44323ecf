#ifndef ROOMLAY_DATASET_HPP
#define ROOMLAY_DATASET_HPP

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "roomlay/layout.hpp"
#include "roomlay/panorama.hpp"
#include "roomlay/roomgen.hpp"

namespace roomlay {

// A manifest plus its layouts, either loaded from a dataset directory or
// held in memory.
struct Dataset {
  std::filesystem::path root;  // empty for in-memory datasets
  Manifest manifest;
  std::vector<RoomLayout> layouts;  // parallel to manifest.layouts

  std::size_t size() const { return layouts.size(); }
  // FNV-1a of the canonical manifest JSON.
  std::string manifest_hash() const;
};

// Keys: anchors, augment_factor, seed, size_min, size_max, wall_choices,
// id_prefix. Missing keys keep their defaults.
DatasetOptions dataset_options_from_json(const std::string& text);

Dataset load_dataset(const std::filesystem::path& root);
Dataset make_dataset(GeneratedDataset generated);

// Indices whose split matches `split`; "all" selects everything and
// "train+val" selects both. Order follows the manifest.
std::vector<std::size_t> select_split(const Dataset& dataset, const std::string& split);

std::filesystem::path boundary_map_path(const std::filesystem::path& root, const std::string& id);

// Renders <root>/sbm/<id>.sbm.pgm for every layout; returns the count written.
std::size_t render_dataset_boundaries(const Dataset& dataset, int width, int height, double sigma_px);

// Reads one stored boundary map; missing files throw kIo naming the id.
BoundaryMap load_boundary_map(const Dataset& dataset, std::size_t index);

}  // namespace roomlay

#endif  // ROOMLAY_DATASET_HPP

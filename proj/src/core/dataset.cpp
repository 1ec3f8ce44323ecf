#include "roomlay/dataset.hpp"

#include <set>

#include <json.hpp>

#include "roomlay/error.hpp"
#include "roomlay/hash.hpp"
#include "roomlay/layout_io.hpp"

namespace roomlay {

std::string Dataset::manifest_hash() const { return hex64(fnv1a64(manifest_to_json(manifest))); }

DatasetOptions dataset_options_from_json(const std::string& text) {
  using nlohmann::json;
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    fail(ErrorCode::kParse, "dataset config malformed at offset " + std::to_string(e.byte) + ": " + e.what());
  }
  if (!j.is_object()) fail(ErrorCode::kConfig, "dataset config must be a JSON object");
  static const std::set<std::string> known = {"anchors", "augment_factor", "seed", "size_min",
                                              "size_max", "wall_choices", "id_prefix"};
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!known.count(it.key())) fail(ErrorCode::kConfig, "unknown dataset config key \"" + it.key() + "\"");
  }
  DatasetOptions o;
  try {
    o.anchors = j.value("anchors", o.anchors);
    o.augment_factor = j.value("augment_factor", o.augment_factor);
    o.seed = j.value("seed", o.seed);
    o.size.min = j.value("size_min", o.size.min);
    o.size.max = j.value("size_max", o.size.max);
    o.wall_choices = j.value("wall_choices", o.wall_choices);
    o.id_prefix = j.value("id_prefix", o.id_prefix);
  } catch (const json::exception& e) {
    fail(ErrorCode::kConfig, std::string("dataset config: ") + e.what());
  }
  if (o.anchors < 0 || o.augment_factor < 0) fail(ErrorCode::kConfig, "anchors and augment_factor must be >= 0");
  if (!(o.size.min >= kMinAnchorEdge * 2) || !(o.size.max >= o.size.min)) {
    fail(ErrorCode::kConfig, "size range must satisfy 1 <= size_min <= size_max");
  }
  for (int w : o.wall_choices) {
    if (w != 4 && w != 6 && w != 8 && w != 10) fail(ErrorCode::kConfig, "wall counts must be 4, 6, 8 or 10");
  }
  return o;
}

Dataset load_dataset(const std::filesystem::path& root) {
  Dataset ds;
  ds.root = root;
  ds.manifest = manifest_from_json(read_file(root / "manifest.json"));
  ds.layouts.reserve(ds.manifest.layouts.size());
  for (const ManifestEntry& e : ds.manifest.layouts) {
    RoomLayout layout = read_layout(root / "layouts" / (e.id + ".json"));
    if (layout.id != e.id) {
      fail(ErrorCode::kParse, "layout file for '" + e.id + "' carries id '" + layout.id + "'");
    }
    const std::string problem = layout_problem(layout);
    if (!problem.empty()) fail(ErrorCode::kInvalidLayout, "layout '" + e.id + "': " + problem);
    ds.layouts.push_back(std::move(layout));
  }
  return ds;
}

Dataset make_dataset(GeneratedDataset generated) {
  Dataset ds;
  ds.manifest = std::move(generated.manifest);
  ds.layouts = std::move(generated.layouts);
  return ds;
}

std::vector<std::size_t> select_split(const Dataset& dataset, const std::string& split) {
  if (split != "all" && split != "train" && split != "val" && split != "test" && split != "train+val") {
    fail(ErrorCode::kConfig, "unknown split '" + split + "' (expected train, val, test, train+val or all)");
  }
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < dataset.manifest.layouts.size(); ++i) {
    const std::string& s = dataset.manifest.layouts[i].split;
    if (split == "all" || s == split || (split == "train+val" && (s == "train" || s == "val"))) {
      out.push_back(i);
    }
  }
  return out;
}

std::filesystem::path boundary_map_path(const std::filesystem::path& root, const std::string& id) {
  return root / "sbm" / (id + ".sbm.pgm");
}

std::size_t render_dataset_boundaries(const Dataset& dataset, int width, int height, double sigma_px) {
  if (dataset.root.empty()) fail(ErrorCode::kInvalidArgument, "dataset has no directory to write maps into");
  std::filesystem::create_directories(dataset.root / "sbm");
  for (const RoomLayout& layout : dataset.layouts) {
    write_boundary_map(boundary_map_path(dataset.root, layout.id),
                       render_boundaries(layout, width, height, sigma_px));
  }
  return dataset.layouts.size();
}

BoundaryMap load_boundary_map(const Dataset& dataset, std::size_t index) {
  const std::string& id = dataset.layouts.at(index).id;
  if (dataset.root.empty()) fail(ErrorCode::kIo, "no boundary map for '" + id + "': dataset is in memory");
  const std::filesystem::path path = boundary_map_path(dataset.root, id);
  if (!std::filesystem::exists(path)) {
    fail(ErrorCode::kIo, "missing boundary map for '" + id + "' (" + path.string() +
                             "); run `roomlay panorama` on the dataset first");
  }
  return read_boundary_map(path);
}

}  // namespace roomlay

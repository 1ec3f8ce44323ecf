#include "roomlay/roomgen.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>

#include <json.hpp>

#include "roomlay/error.hpp"
#include "roomlay/hash.hpp"
#include "roomlay/layout_io.hpp"
#include "roomlay/random.hpp"

namespace roomlay {

namespace {

constexpr int kMaxGenerationAttempts = 1000;
constexpr int kMaxAugmentResamples = 100;
constexpr double kMinAugmentedEdge = 1e-3;
constexpr double kCornerMargin = 0.25;

// `steps` strictly decreasing cut depths from `total` down to 0 with every
// gap >= kMinAnchorEdge; returns {total, ..., 0} (steps + 1 entries).
std::vector<double> staircase_depths(Rng& rng, double total, int steps) {
  std::vector<double> cuts;
  for (int i = 0; i + 1 < steps; ++i) cuts.push_back(rng.uniform());
  std::sort(cuts.begin(), cuts.end());
  cuts.insert(cuts.begin(), 0.0);
  cuts.push_back(1.0);
  const double slack = total - kMinAnchorEdge * steps;
  std::vector<double> depths(steps + 1, 0.0);
  // depths[t] = remaining depth after t steps.
  double consumed = 0.0;
  depths[0] = total;
  for (int t = 1; t <= steps; ++t) {
    consumed += kMinAnchorEdge + slack * (cuts[t] - cuts[t - 1]);
    depths[t] = (t == steps) ? 0.0 : total - consumed;
  }
  return depths;
}

double camera_clearance(Vec2 p, const Polygon& poly) {
  if (!point_in_polygon(p, poly, 0.0)) return -1.0;
  return boundary_distance(p, poly);
}

bool augmented_ok(const RoomLayout& room) {
  if (room.corners.size() < 3) return false;
  if (!(signed_area(room.corners) > 0.0)) return false;
  if (min_edge_length(room.corners) < kMinAugmentedEdge) return false;
  if (!is_simple_polygon(room.corners)) return false;
  return camera_clearance({room.camera.x, room.camera.y}, room.corners) > 1e-6;
}

}  // namespace

RoomLayout generate_anchor(std::uint64_t seed, int walls, SizeRange size, std::string id) {
  if (walls != 4 && walls != 6 && walls != 8 && walls != 10) {
    fail(ErrorCode::kInvalidArgument, "anchor wall count must be one of 4, 6, 8, 10");
  }
  if (!(size.min > 0.0 && size.max >= size.min)) {
    fail(ErrorCode::kInvalidArgument, "size range must satisfy 0 < min <= max");
  }
  Rng rng(seed);
  const int total_steps = (walls - 4) / 2;
  for (int attempt = 0; attempt < kMaxGenerationAttempts; ++attempt) {
    const double width = rng.uniform(size.min, size.max);
    const double height = rng.uniform(size.min, size.max);
    std::array<int, 4> steps{0, 0, 0, 0};
    for (int k = 0; k < total_steps; ++k) ++steps[rng.below(4)];

    // CCW rectangle corners; e_in is the travel direction arriving at the
    // corner, e_out the direction leaving it.
    const std::array<Vec2, 4> corner = {Vec2{0, 0}, Vec2{width, 0}, Vec2{width, height},
                                        Vec2{0, height}};
    const std::array<Vec2, 4> e_in = {Vec2{0, -1}, Vec2{1, 0}, Vec2{0, 1}, Vec2{-1, 0}};
    const std::array<Vec2, 4> e_out = {Vec2{1, 0}, Vec2{0, 1}, Vec2{-1, 0}, Vec2{0, -1}};
    const std::array<double, 4> in_len = {height, width, height, width};
    const std::array<double, 4> out_len = {width, height, width, height};

    bool feasible = true;
    Polygon poly;
    for (int k = 0; k < 4 && feasible; ++k) {
      const int s = steps[k];
      if (s == 0) {
        poly.push_back(corner[k]);
        continue;
      }
      const double max_in = 0.5 * in_len[k] - kCornerMargin;
      const double max_out = 0.5 * out_len[k] - kCornerMargin;
      const double need = kMinAnchorEdge * s;
      if (max_in < need || max_out < need) {
        feasible = false;
        break;
      }
      const std::vector<double> along_in = staircase_depths(rng, rng.uniform(need, max_in), s);
      // Heights along e_out increase from 0 to the full depth.
      std::vector<double> along_out = staircase_depths(rng, rng.uniform(need, max_out), s);
      std::reverse(along_out.begin(), along_out.end());
      poly.push_back(corner[k] - along_in[0] * e_in[k]);
      for (int t = 1; t <= s; ++t) {
        poly.push_back(corner[k] - along_in[t - 1] * e_in[k] + along_out[t] * e_out[k]);
        poly.push_back(corner[k] - along_in[t] * e_in[k] + along_out[t] * e_out[k]);
      }
    }
    if (!feasible) continue;
    if (static_cast<int>(poly.size()) != walls || !is_simple_polygon(poly) ||
        min_edge_length(poly) < kMinAnchorEdge - 1e-9 || !(signed_area(poly) > 0.0)) {
      continue;
    }

    RoomLayout room;
    room.id = std::move(id);
    room.corners = std::move(poly);
    room.ceiling_height = rng.uniform(2.4, 3.2);
    room.camera.height = rng.uniform(1.2, 1.8);
    // Best-clearance candidate keeps the camera away from walls, which keeps
    // wall translations from pushing it outside.
    double best = -1.0;
    for (int c = 0; c < 32; ++c) {
      const Vec2 p{rng.uniform(0.0, width), rng.uniform(0.0, height)};
      const double clearance = camera_clearance(p, room.corners);
      if (clearance > best) {
        best = clearance;
        room.camera.x = p.x;
        room.camera.y = p.y;
      }
    }
    if (best <= 0.0) continue;
    if (!layout_problem(room).empty()) continue;
    return room;
  }
  fail(ErrorCode::kGeneration, "anchor generation failed after " +
                                   std::to_string(kMaxGenerationAttempts) + " attempts");
}

double shortest_wall(const Polygon& corners) { return min_edge_length(corners); }

RoomLayout translate_wall(const RoomLayout& room, int wall_index, double offset) {
  const int n = static_cast<int>(room.corners.size());
  if (wall_index < 0 || wall_index >= n) {
    fail(ErrorCode::kInvalidArgument, "wall index out of range");
  }
  const int j = (wall_index + 1) % n;
  const Vec2 a = room.corners[wall_index];
  const Vec2 b = room.corners[j];
  const Vec2 d = b - a;
  const double len = norm(d);
  if (len == 0.0) fail(ErrorCode::kInvalidLayout, "zero-length wall");
  // CCW winding: the outward normal is the edge direction rotated clockwise.
  const Vec2 outward{d.y / len, -d.x / len};
  RoomLayout out = room;
  out.corners[wall_index] = a + offset * outward;
  out.corners[j] = b + offset * outward;
  return out;
}

AugmentedRoom augment(const RoomLayout& anchor, std::uint64_t seed, std::string id) {
  validate_layout(anchor);
  Rng rng(seed);
  const double l_min = shortest_wall(anchor.corners);
  const int wall = static_cast<int>(rng.below(anchor.corners.size()));
  for (int attempt = 0; attempt < kMaxAugmentResamples; ++attempt) {
    const double offset = rng.uniform(-0.5 * l_min, 0.5 * l_min);
    RoomLayout room = translate_wall(anchor, wall, offset);
    if (!augmented_ok(room)) continue;
    room.id = id.empty() ? anchor.id + "-aug" : std::move(id);
    return {std::move(room), {anchor.id, wall, offset, l_min}};
  }
  fail(ErrorCode::kAugmentation, "augmentation of '" + anchor.id + "' failed after " +
                                     std::to_string(kMaxAugmentResamples) + " resamples");
}

std::string split_for_id(const std::string& id) {
  switch (fnv1a64(id) % 10) {
    case 0: return "test";
    case 1: return "val";
    default: return "train";
  }
}

std::string manifest_to_json(const Manifest& manifest) {
  using nlohmann::json;
  json layouts = json::array();
  for (const ManifestEntry& e : manifest.layouts) {
    json item = {{"id", e.id}, {"split", e.split}};
    item["anchor"] = e.anchor ? json(*e.anchor) : json(nullptr);
    item["wall_index"] = e.wall_index ? json(*e.wall_index) : json(nullptr);
    item["offset"] = e.offset ? json(*e.offset) : json(nullptr);
    item["l_min"] = e.l_min ? json(*e.l_min) : json(nullptr);
    layouts.push_back(std::move(item));
  }
  return json{{"layouts", layouts}}.dump(2) + "\n";
}

Manifest manifest_from_json(const std::string& text) {
  using nlohmann::json;
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    fail(ErrorCode::kParse, "manifest JSON malformed at offset " + std::to_string(e.byte) + ": " +
                                e.what());
  }
  if (!doc.is_object() || !doc.contains("layouts") || !doc["layouts"].is_array()) {
    fail(ErrorCode::kParse, "manifest JSON: missing array \"layouts\"");
  }
  Manifest manifest;
  for (const json& item : doc["layouts"]) {
    if (!item.is_object() || !item.contains("id") || !item["id"].is_string()) {
      fail(ErrorCode::kParse, "manifest JSON: entry without string \"id\"");
    }
    ManifestEntry e;
    e.id = item["id"].get<std::string>();
    e.split = item.value("split", split_for_id(e.id));
    if (e.split != "train" && e.split != "val" && e.split != "test") {
      fail(ErrorCode::kParse, "manifest JSON: bad split '" + e.split + "' for " + e.id);
    }
    if (item.contains("anchor") && item["anchor"].is_string()) e.anchor = item["anchor"].get<std::string>();
    if (item.contains("wall_index") && item["wall_index"].is_number_integer()) {
      e.wall_index = item["wall_index"].get<int>();
    }
    if (item.contains("offset") && item["offset"].is_number()) e.offset = item["offset"].get<double>();
    if (item.contains("l_min") && item["l_min"].is_number()) e.l_min = item["l_min"].get<double>();
    manifest.layouts.push_back(std::move(e));
  }
  return manifest;
}

GeneratedDataset generate_dataset(const DatasetOptions& options) {
  if (options.anchors < 0 || options.augment_factor < 0) {
    fail(ErrorCode::kInvalidArgument, "anchors and augment_factor must be >= 0");
  }
  if (options.wall_choices.empty()) fail(ErrorCode::kInvalidArgument, "no wall choices");
  GeneratedDataset out;
  char buf[64];
  for (int a = 0; a < options.anchors; ++a) {
    const std::uint64_t anchor_seed = derive_seed(options.seed, static_cast<std::uint64_t>(a));
    Rng pick(derive_seed(anchor_seed, 0));
    const int walls = options.wall_choices[pick.below(options.wall_choices.size())];
    std::snprintf(buf, sizeof buf, "%s%05d", options.id_prefix.c_str(), a);
    const std::string anchor_id = buf;
    RoomLayout anchor = generate_anchor(derive_seed(anchor_seed, 1), walls, options.size, anchor_id);
    out.manifest.layouts.push_back({anchor_id, split_for_id(anchor_id), {}, {}, {}, {}});
    out.layouts.push_back(anchor);
    for (int v = 0; v < options.augment_factor; ++v) {
      std::snprintf(buf, sizeof buf, "%s-v%02d", anchor_id.c_str(), v + 1);
      AugmentedRoom aug = augment(anchor, derive_seed(anchor_seed, 2 + static_cast<std::uint64_t>(v)), buf);
      out.manifest.layouts.push_back({aug.layout.id, split_for_id(anchor_id), anchor_id,
                                      aug.record.wall_index, aug.record.offset, aug.record.l_min});
      out.layouts.push_back(std::move(aug.layout));
    }
  }
  return out;
}

Manifest build_dataset(const DatasetOptions& options, const std::filesystem::path& out_dir) {
  GeneratedDataset data = generate_dataset(options);
  std::error_code ec;
  for (const char* sub : {"layouts", "sbm"}) std::filesystem::remove_all(out_dir / sub, ec);
  std::filesystem::create_directories(out_dir / "layouts", ec);
  if (ec) fail(ErrorCode::kIo, "cannot create '" + (out_dir / "layouts").string() + "': " + ec.message());
  for (const RoomLayout& room : data.layouts) {
    write_layout(out_dir / "layouts" / (room.id + ".json"), room);
  }
  write_file(out_dir / "manifest.json", manifest_to_json(data.manifest));
  return data.manifest;
}

}  // namespace roomlay

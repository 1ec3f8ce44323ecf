#include "roomlay/panorama.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "roomlay/error.hpp"
#include "roomlay/layout_io.hpp"

namespace roomlay {

BoundaryMap::BoundaryMap(int width, int height)
    : width_(width), height_(height),
      data_(3 * static_cast<std::size_t>(std::max(width, 0)) * std::max(height, 0), 0.0) {
  if (width <= 0 || height <= 0) fail(ErrorCode::kInvalidArgument, "boundary map needs positive size");
}

double column_azimuth(int column, int width) {
  return ((column + 0.5) / width) * 2.0 * std::numbers::pi - std::numbers::pi;
}

double elevation_to_row(double phi, int height) {
  return (0.5 - phi / std::numbers::pi) * height;
}

ColumnHit cast_column(const RoomLayout& layout, double azimuth) {
  const Vec2 origin{layout.camera.x, layout.camera.y};
  const Vec2 dir{std::cos(azimuth), std::sin(azimuth)};
  const std::size_t n = layout.corners.size();
  ColumnHit best{std::numeric_limits<double>::infinity(), -1};
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 a = layout.corners[i];
    const Vec2 e = layout.corners[(i + 1) % n] - a;
    const double denom = cross(dir, e);
    if (denom == 0.0) continue;  // parallel
    const Vec2 w = a - origin;
    const double t = cross(w, e) / denom;
    const double s = cross(w, dir) / denom;
    if (t <= 0.0 || s < -1e-12 || s > 1.0 + 1e-12) continue;
    // Lower index wins ties.
    if (t < best.distance * (1.0 - 1e-12)) best = {t, static_cast<int>(i)};
  }
  if (best.wall_index < 0) {
    fail(ErrorCode::kInternal, "ray from camera hit no wall in layout '" + layout.id + "'");
  }
  return best;
}

BoundaryCurves boundary_curves(const RoomLayout& layout, int width, int height) {
  validate_layout(layout);
  if (width != 2 * height) {
    fail(ErrorCode::kInvalidArgument, "equirectangular map needs width == 2 * height");
  }
  BoundaryCurves curves;
  curves.floor_row.resize(width);
  curves.ceiling_row.resize(width);
  curves.wall_index.resize(width);
  const double below = layout.camera.height;
  const double above = layout.ceiling_height - layout.camera.height;
  for (int u = 0; u < width; ++u) {
    const ColumnHit hit = cast_column(layout, column_azimuth(u, width));
    curves.floor_row[u] = elevation_to_row(std::atan(-below / hit.distance), height);
    curves.ceiling_row[u] = elevation_to_row(std::atan(above / hit.distance), height);
    curves.wall_index[u] = hit.wall_index;
  }
  for (int u = 0; u < width; ++u) {
    const int prev = (u + width - 1) % width;
    if (curves.wall_index[prev] != curves.wall_index[u]) {
      curves.wall_wall_columns.push_back(static_cast<double>(u));
    }
  }
  return curves;
}

BoundaryMap render_boundaries(const RoomLayout& layout, int width, int height, double sigma_px) {
  if (!(sigma_px > 0.0)) fail(ErrorCode::kInvalidArgument, "sigma_px must be positive");
  const BoundaryCurves curves = boundary_curves(layout, width, height);
  BoundaryMap map(width, height);
  const double inv2s2 = 1.0 / (2.0 * sigma_px * sigma_px);
  auto span_distance = [](double v, double lo, double hi) {
    if (v < lo) return lo - v;
    if (v > hi) return v - hi;
    return 0.0;
  };

  // Floor and ceiling: per column, a vertical span reaching halfway to the
  // neighbouring samples on the same wall, blurred vertically.
  for (int ch : {kWallFloor, kWallCeiling}) {
    const std::vector<double>& rows = (ch == kWallFloor) ? curves.floor_row : curves.ceiling_row;
    for (int u = 0; u < width; ++u) {
      double lo = rows[u], hi = rows[u];
      for (int nb : {(u + width - 1) % width, (u + 1) % width}) {
        if (curves.wall_index[nb] != curves.wall_index[u]) continue;
        const double mid = 0.5 * (rows[u] + rows[nb]);
        lo = std::min(lo, mid);
        hi = std::max(hi, mid);
      }
      for (int r = 0; r < height; ++r) {
        const double d = span_distance(r + 0.5, lo, hi);
        map.at(ch, r, u) = std::exp(-d * d * inv2s2);
      }
    }
  }

  // Wall-wall: vertical segment at each column edge where the visible wall
  // changes, spanning the union of both columns' wall extents.
  const int reach = static_cast<int>(std::ceil(4.0 * sigma_px)) + 1;
  for (double edge : curves.wall_wall_columns) {
    const int right = static_cast<int>(edge);
    const int left = (right + width - 1) % width;
    const double top = std::min(curves.ceiling_row[left], curves.ceiling_row[right]);
    const double bottom = std::max(curves.floor_row[left], curves.floor_row[right]);
    for (int du = -reach; du < reach; ++du) {
      const int u = ((right + du) % width + width) % width;
      const double dh = (right + du + 0.5) - edge;
      for (int r = 0; r < height; ++r) {
        const double dv = span_distance(r + 0.5, top, bottom);
        const double v = std::exp(-(dh * dh + dv * dv) * inv2s2);
        double& cell = map.at(kWallWall, r, u);
        cell = std::max(cell, v);
      }
    }
  }

  const std::size_t plane = static_cast<std::size_t>(width) * height;
  for (int ch = 0; ch < 3; ++ch) {
    auto begin = map.data().begin() + static_cast<std::ptrdiff_t>(ch * plane);
    auto end = begin + static_cast<std::ptrdiff_t>(plane);
    const double peak = *std::max_element(begin, end);
    if (peak > 0.0) {
      for (auto it = begin; it != end; ++it) *it /= peak;
    }
  }
  return map;
}

std::string encode_boundary_map(const BoundaryMap& map) {
  GrayImage image{map.width(), 3 * map.height(), {}};
  image.pixels.reserve(map.data().size());
  for (double v : map.data()) {
    image.pixels.push_back(static_cast<std::uint8_t>(std::lround(255.0 * std::clamp(v, 0.0, 1.0))));
  }
  return encode_pgm(image);
}

BoundaryMap decode_boundary_map(const std::string& bytes) {
  const GrayImage image = decode_pgm(bytes);
  if (image.height % 3 != 0) {
    fail(ErrorCode::kParse, "boundary map PGM height " + std::to_string(image.height) +
                                " is not a multiple of 3");
  }
  BoundaryMap map(image.width, image.height / 3);
  for (std::size_t i = 0; i < image.pixels.size(); ++i) map.data()[i] = image.pixels[i] / 255.0;
  return map;
}

void write_boundary_map(const std::filesystem::path& path, const BoundaryMap& map) {
  write_file(path, encode_boundary_map(map));
}

BoundaryMap read_boundary_map(const std::filesystem::path& path) {
  try {
    return decode_boundary_map(read_file(path));
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kParse) fail(ErrorCode::kParse, path.string() + ": " + e.what());
    throw;
  }
}

}  // namespace roomlay

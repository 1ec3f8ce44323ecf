#include "roomlay/layout.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "roomlay/error.hpp"
#include "roomlay/random.hpp"

namespace roomlay {

namespace {

constexpr double kMinArea = 1e-9;

bool finite(Vec2 p) { return std::isfinite(p.x) && std::isfinite(p.y); }

}  // namespace

std::string layout_problem(const RoomLayout& layout) {
  const Polygon& c = layout.corners;
  if (c.size() < 3) return "polygon needs at least 3 corners";
  for (const Vec2& p : c) {
    if (!finite(p)) return "corner coordinates must be finite";
  }
  const double area = signed_area(c);
  if (std::abs(area) < kMinArea) return "degenerate polygon (area < 1e-9 m^2)";
  if (area < 0.0) return "corners must be counter-clockwise";
  if (!is_simple_polygon(c)) return "polygon is not simple";
  if (!(layout.ceiling_height > 0.0) || !std::isfinite(layout.ceiling_height)) {
    return "ceiling_height must be positive";
  }
  const Vec2 cam{layout.camera.x, layout.camera.y};
  if (!finite(cam) || !std::isfinite(layout.camera.height)) return "camera must be finite";
  if (!point_in_polygon(cam, c, 0.0) || boundary_distance(cam, c) <= 0.0) {
    return "camera must lie strictly inside the polygon";
  }
  if (!(layout.camera.height > 0.0 && layout.camera.height < layout.ceiling_height)) {
    return "camera height must be in (0, ceiling_height)";
  }
  return {};
}

void validate_layout(const RoomLayout& layout) {
  const std::string problem = layout_problem(layout);
  if (!problem.empty()) {
    fail(ErrorCode::kInvalidLayout, "layout '" + layout.id + "': " + problem);
  }
}

GridFrame fit_frame(std::span<const Vec2> corners, const FitPolicy& fit) {
  if (fit.mode == FitPolicy::Mode::kFixed) {
    if (!(fit.frame.meters_per_unit > 0.0)) {
      fail(ErrorCode::kInvalidArgument, "fixed frame needs meters_per_unit > 0");
    }
    return fit.frame;
  }
  if (!(fit.extent > 0.0 && fit.extent <= 1.0)) {
    fail(ErrorCode::kInvalidArgument, "fit extent must be in (0, 1]");
  }
  const Bounds b = bounding_box(corners);
  const double half = 0.5 * std::max(b.max.x - b.min.x, b.max.y - b.min.y);
  GridFrame frame;
  frame.center = {0.5 * (b.min.x + b.max.x), 0.5 * (b.min.y + b.max.y)};
  frame.meters_per_unit = half / fit.extent;
  return frame;
}

OccupancyGrid::OccupancyGrid(int resolution, GridFrame frame)
    : OccupancyGrid(resolution, frame,
                    std::vector<std::uint8_t>(static_cast<std::size_t>(resolution) *
                                              std::max(resolution, 0))) {}

OccupancyGrid::OccupancyGrid(int resolution, GridFrame frame, std::vector<std::uint8_t> values)
    : resolution_(resolution), frame_(frame), values_(std::move(values)) {
  if (resolution < kMinGridResolution) {
    fail(ErrorCode::kInvalidArgument,
         "grid resolution must be >= " + std::to_string(kMinGridResolution));
  }
  if (values_.size() != static_cast<std::size_t>(resolution) * resolution) {
    fail(ErrorCode::kShapeMismatch, "grid values do not match resolution");
  }
  for (std::uint8_t v : values_) {
    if (v > 1) fail(ErrorCode::kInvalidArgument, "grid values must be 0 or 1");
  }
}

std::size_t OccupancyGrid::count_occupied() const {
  return static_cast<std::size_t>(std::count(values_.begin(), values_.end(), 1));
}

Vec2 pixel_center(int row, int col, int resolution) {
  const double step = 2.0 / resolution;
  return {(col + 0.5) * step - 1.0, 1.0 - (row + 0.5) * step};
}

OccupancyGrid rasterize_normalized(std::span<const Vec2> polygon, int resolution) {
  OccupancyGrid grid(resolution, GridFrame{});
  const double eps = 1e-12;
  for (int r = 0; r < resolution; ++r) {
    for (int c = 0; c < resolution; ++c) {
      grid.set(r, c, point_in_polygon(pixel_center(r, c, resolution), polygon, eps) ? 1 : 0);
    }
  }
  return grid;
}

OccupancyGrid rasterize(const RoomLayout& layout, int resolution, const FitPolicy& fit) {
  validate_layout(layout);
  const GridFrame frame = fit_frame(layout.corners, fit);
  Polygon normalized;
  normalized.reserve(layout.corners.size());
  for (const Vec2& p : layout.corners) normalized.push_back(frame.to_normalized(p));
  OccupancyGrid raw = rasterize_normalized(normalized, resolution);
  return OccupancyGrid(resolution, frame,
                       std::vector<std::uint8_t>(raw.values().begin(), raw.values().end()));
}

double bilinear(const OccupancyGrid& grid, Vec2 p) {
  const int res = grid.resolution();
  auto continuous = [res](double v) {
    double c = std::clamp(v, 0.0, static_cast<double>(res - 1));
    const double nearest = std::round(c);
    if (std::abs(c - nearest) < 1e-9) c = nearest;
    return c;
  };
  const double u = continuous((p.x + 1.0) * 0.5 * res - 0.5);
  const double v = continuous((1.0 - p.y) * 0.5 * res - 0.5);
  const int c0 = std::min(static_cast<int>(u), res - 1);
  const int r0 = std::min(static_cast<int>(v), res - 1);
  const int c1 = std::min(c0 + 1, res - 1);
  const int r1 = std::min(r0 + 1, res - 1);
  const double fu = u - c0;
  const double fv = v - r0;
  const double top = (1.0 - fu) * grid.at(r0, c0) + fu * grid.at(r0, c1);
  const double bottom = (1.0 - fu) * grid.at(r1, c0) + fu * grid.at(r1, c1);
  return (1.0 - fv) * top + fv * bottom;
}

CoordBatch::CoordBatch(std::span<const Vec2> points)
    : count_(static_cast<int>(points.size())), data_(3 * points.size(), 1.0) {
  for (int k = 0; k < count_; ++k) {
    data_[k] = points[k].x;
    data_[count_ + k] = points[k].y;
  }
}

SampleMode parse_sample_mode(const std::string& name) {
  if (name == "uniform-random") return SampleMode::kUniformRandom;
  if (name == "pixel-centers") return SampleMode::kPixelCenters;
  if (name == "boundary-biased") return SampleMode::kBoundaryBiased;
  fail(ErrorCode::kConfig, "unknown sample mode '" + name + "'");
}

const char* sample_mode_name(SampleMode mode) {
  switch (mode) {
    case SampleMode::kUniformRandom: return "uniform-random";
    case SampleMode::kPixelCenters: return "pixel-centers";
    case SampleMode::kBoundaryBiased: return "boundary-biased";
  }
  return "?";
}

namespace {

// Pixels whose Chebyshev 3-neighbourhood contains both values.
std::vector<int> boundary_band(const OccupancyGrid& grid, int radius) {
  const int res = grid.resolution();
  // Prefix sums of occupancy for O(1) window counts.
  std::vector<int> prefix(static_cast<std::size_t>(res + 1) * (res + 1), 0);
  auto P = [&](int r, int c) -> int& { return prefix[static_cast<std::size_t>(r) * (res + 1) + c]; };
  for (int r = 0; r < res; ++r) {
    for (int c = 0; c < res; ++c) {
      P(r + 1, c + 1) = grid.at(r, c) + P(r, c + 1) + P(r + 1, c) - P(r, c);
    }
  }
  std::vector<int> band;
  for (int r = 0; r < res; ++r) {
    for (int c = 0; c < res; ++c) {
      const int r0 = std::max(0, r - radius), r1 = std::min(res, r + radius + 1);
      const int c0 = std::max(0, c - radius), c1 = std::min(res, c + radius + 1);
      const int ones = P(r1, c1) - P(r0, c1) - P(r1, c0) + P(r0, c0);
      const int total = (r1 - r0) * (c1 - c0);
      if (ones > 0 && ones < total) band.push_back(r * res + c);
    }
  }
  return band;
}

}  // namespace

CoordSample sample_coords(const OccupancyGrid& grid, int n, SampleMode mode,
                          std::uint64_t seed) {
  const int res = grid.resolution();
  std::vector<Vec2> points;
  if (mode == SampleMode::kPixelCenters) {
    points.reserve(static_cast<std::size_t>(res) * res);
    for (int r = 0; r < res; ++r) {
      for (int c = 0; c < res; ++c) points.push_back(pixel_center(r, c, res));
    }
  } else {
    if (n < 1) fail(ErrorCode::kInvalidArgument, "sample count must be >= 1");
    Rng rng(seed);
    points.reserve(n);
    int uniform_count = n;
    if (mode == SampleMode::kBoundaryBiased) {
      const std::vector<int> band = boundary_band(grid, 3);
      if (!band.empty()) {
        const int biased = n / 2;
        uniform_count = n - biased;
        const double step = 2.0 / res;
        for (int k = 0; k < biased; ++k) {
          const int pix = band[rng.below(band.size())];
          const Vec2 center = pixel_center(pix / res, pix % res, res);
          points.push_back({center.x + (rng.uniform() - 0.5) * step,
                            center.y + (rng.uniform() - 0.5) * step});
        }
      }
    }
    for (int k = 0; k < uniform_count; ++k) {
      points.push_back({rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)});
    }
  }
  CoordSample out{CoordBatch(points), {}};
  out.truth.reserve(points.size());
  for (const Vec2& p : points) out.truth.push_back(bilinear(grid, p));
  return out;
}

IoUReport compute_iou(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b) {
  if (a.size() != b.size()) {
    std::ostringstream msg;
    msg << "IoU operands differ in size: " << a.size() << " vs " << b.size();
    fail(ErrorCode::kShapeMismatch, msg.str());
  }
  IoUReport report;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const bool x = a[i] != 0;
    const bool y = b[i] != 0;
    report.intersection += (x && y) ? 1 : 0;
    report.union_count += (x || y) ? 1 : 0;
  }
  if (report.union_count == 0) fail(ErrorCode::kUndefinedIoU, "IoU undefined: both grids empty");
  report.iou = static_cast<double>(report.intersection) / static_cast<double>(report.union_count);
  return report;
}

IoUReport compute_iou(const OccupancyGrid& a, const OccupancyGrid& b) {
  if (a.resolution() != b.resolution()) {
    fail(ErrorCode::kShapeMismatch, "IoU operands differ in resolution: " +
                                        std::to_string(a.resolution()) + " vs " +
                                        std::to_string(b.resolution()));
  }
  return compute_iou(a.values(), b.values());
}

}  // namespace roomlay

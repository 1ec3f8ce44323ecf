#ifndef ROOMLAY_LAYOUT_HPP
#define ROOMLAY_LAYOUT_HPP

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "roomlay/geometry.hpp"

namespace roomlay {

struct Camera {
  double x = 0.0;
  double y = 0.0;
  double height = 1.6;
};

// A single room: CCW floor polygon in meters, flat ceiling, panorama camera.
struct RoomLayout {
  std::string id;
  Polygon corners;
  double ceiling_height = 3.0;
  Camera camera;
};

// Returns an empty string when the layout is valid, otherwise the first
// violated invariant.
std::string layout_problem(const RoomLayout& layout);
void validate_layout(const RoomLayout& layout);

// Maps meters to normalized grid coordinates: n = (m - center) / meters_per_unit.
struct GridFrame {
  double meters_per_unit = 1.0;
  Vec2 center;

  Vec2 to_normalized(Vec2 m) const {
    return {(m.x - center.x) / meters_per_unit, (m.y - center.y) / meters_per_unit};
  }
  Vec2 to_meters(Vec2 n) const {
    return {center.x + n.x * meters_per_unit, center.y + n.y * meters_per_unit};
  }
};

struct FitPolicy {
  enum class Mode { kCenterAndScale, kFixed };
  Mode mode = Mode::kCenterAndScale;
  // Half-width of the normalized square the bounding box is fitted into.
  double extent = 0.9;
  // Used as-is in kFixed mode.
  GridFrame frame;

  static FitPolicy fixed(GridFrame frame) {
    FitPolicy p;
    p.mode = Mode::kFixed;
    p.frame = frame;
    return p;
  }
};

GridFrame fit_frame(std::span<const Vec2> corners, const FitPolicy& fit);

// R x R binary raster spanning [-1,1]^2. Row 0 is the +y edge.
class OccupancyGrid {
 public:
  OccupancyGrid() = default;
  OccupancyGrid(int resolution, GridFrame frame);
  OccupancyGrid(int resolution, GridFrame frame, std::vector<std::uint8_t> values);

  int resolution() const { return resolution_; }
  const GridFrame& frame() const { return frame_; }
  std::span<const std::uint8_t> values() const { return values_; }

  std::uint8_t at(int row, int col) const {
    return values_[static_cast<std::size_t>(row) * resolution_ + col];
  }
  void set(int row, int col, std::uint8_t v) {
    values_[static_cast<std::size_t>(row) * resolution_ + col] = v;
  }

  std::size_t count_occupied() const;

  friend bool operator==(const OccupancyGrid& a, const OccupancyGrid& b) {
    return a.resolution_ == b.resolution_ && a.values_ == b.values_;
  }

 private:
  int resolution_ = 0;
  GridFrame frame_;
  std::vector<std::uint8_t> values_;
};

inline constexpr int kMinGridResolution = 8;

// Normalized center of pixel (row, col).
Vec2 pixel_center(int row, int col, int resolution);

OccupancyGrid rasterize(const RoomLayout& layout, int resolution,
                        const FitPolicy& fit = {});

// Rasterizes an arbitrary polygon given directly in normalized coordinates.
OccupancyGrid rasterize_normalized(std::span<const Vec2> polygon, int resolution);

// Bilinear read of grid values at a normalized coordinate; clamps to the
// border outside [-1,1]^2.
double bilinear(const OccupancyGrid& grid, Vec2 p);

// Homogeneous query coordinates, stored row-major as 3 x count with the last
// row identically 1.
class CoordBatch {
 public:
  CoordBatch() = default;
  explicit CoordBatch(std::span<const Vec2> points);

  int count() const { return count_; }
  std::span<const double> data() const { return data_; }
  Vec2 point(int k) const { return {data_[k], data_[count_ + k]}; }

 private:
  int count_ = 0;
  std::vector<double> data_;
};

enum class SampleMode { kUniformRandom, kPixelCenters, kBoundaryBiased };

SampleMode parse_sample_mode(const std::string& name);
const char* sample_mode_name(SampleMode mode);

struct CoordSample {
  CoordBatch coords;
  std::vector<double> truth;
};

// In kPixelCenters mode `n` is ignored and all R^2 centers are returned in
// row-major order. kBoundaryBiased draws half of the samples from pixels
// within 3 pixels of an in/out transition.
CoordSample sample_coords(const OccupancyGrid& grid, int n, SampleMode mode,
                          std::uint64_t seed);

struct IoUReport {
  std::size_t intersection = 0;
  std::size_t union_count = 0;
  double iou = 0.0;
};

IoUReport compute_iou(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b);
IoUReport compute_iou(const OccupancyGrid& a, const OccupancyGrid& b);

struct Contour {
  std::vector<Vec2> points;  // normalized coordinates
  bool closed = true;        // false only when the level set leaves the grid
};

// Marching squares over the pixel-center lattice of a row-major R x R field.
std::vector<Contour> extract_contour(std::span<const double> field, int resolution,
                                     double threshold = 0.5);

}  // namespace roomlay

#endif  // ROOMLAY_LAYOUT_HPP

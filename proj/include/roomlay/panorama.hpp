#ifndef ROOMLAY_PANORAMA_HPP
#define ROOMLAY_PANORAMA_HPP

#include <filesystem>
#include <string>
#include <vector>

#include "roomlay/layout.hpp"

namespace roomlay {

enum BoundaryChannel : int { kWallFloor = 0, kWallCeiling = 1, kWallWall = 2 };

// Equirectangular semantic boundary map, 3 x height x width, values in [0,1].
class BoundaryMap {
 public:
  BoundaryMap() = default;
  BoundaryMap(int width, int height);

  int width() const { return width_; }
  int height() const { return height_; }
  const std::vector<double>& data() const { return data_; }
  std::vector<double>& data() { return data_; }

  double at(int channel, int row, int col) const {
    return data_[(static_cast<std::size_t>(channel) * height_ + row) * width_ + col];
  }
  double& at(int channel, int row, int col) {
    return data_[(static_cast<std::size_t>(channel) * height_ + row) * width_ + col];
  }

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<double> data_;
};

struct ColumnHit {
  double distance = 0.0;
  int wall_index = -1;
};

// Azimuth of column u's center; column 0 starts at -pi, +x is the image center.
double column_azimuth(int column, int width);

// Nearest wall hit by the horizontal ray from the camera at `azimuth`.
ColumnHit cast_column(const RoomLayout& layout, double azimuth);

// Continuous image row of a boundary at elevation `phi` (radians).
double elevation_to_row(double phi, int height);

// Per-column analytic curves before splatting.
struct BoundaryCurves {
  std::vector<double> floor_row;
  std::vector<double> ceiling_row;
  std::vector<int> wall_index;
  // Column-edge positions (in columns, [0, width)) where the visible wall changes.
  std::vector<double> wall_wall_columns;
};

BoundaryCurves boundary_curves(const RoomLayout& layout, int width, int height);

BoundaryMap render_boundaries(const RoomLayout& layout, int width, int height,
                              double sigma_px = 1.5);

// Single P5 image of size width x (3 * height), channels stacked top to bottom
// in channel order; pixel = round(255 * value).
std::string encode_boundary_map(const BoundaryMap& map);
BoundaryMap decode_boundary_map(const std::string& bytes);
void write_boundary_map(const std::filesystem::path& path, const BoundaryMap& map);
BoundaryMap read_boundary_map(const std::filesystem::path& path);

}  // namespace roomlay

#endif  // ROOMLAY_PANORAMA_HPP

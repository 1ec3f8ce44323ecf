#ifndef ROOMLAY_LAYOUT_IO_HPP
#define ROOMLAY_LAYOUT_IO_HPP

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "roomlay/layout.hpp"

namespace roomlay {

std::string layout_to_json(const RoomLayout& layout);
// Throws ErrorCode::kParse with line/column on malformed input; the result is
// not validated (call validate_layout for the geometric invariants).
RoomLayout layout_from_json(const std::string& text);

void write_layout(const std::filesystem::path& path, const RoomLayout& layout);
RoomLayout read_layout(const std::filesystem::path& path);

// 8-bit greyscale image, row-major.
struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;
};

std::string encode_pgm(const GrayImage& image);
GrayImage decode_pgm(const std::string& bytes);

// Grid files: P5, maxval 255, values in {0, 255}.
std::string encode_grid_pgm(const OccupancyGrid& grid);
OccupancyGrid decode_grid_pgm(const std::string& bytes);
void write_grid(const std::filesystem::path& path, const OccupancyGrid& grid);
OccupancyGrid read_grid(const std::filesystem::path& path);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& bytes);

}  // namespace roomlay

#endif  // ROOMLAY_LAYOUT_IO_HPP

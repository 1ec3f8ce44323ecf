#ifndef ROOMLAY_PNG_WRITER_HPP
#define ROOMLAY_PNG_WRITER_HPP

#include <cstdint>
#include <filesystem>
#include <vector>

namespace roomlay {

// 8-bit PNG; `channels` is 1 (grey) or 3 (RGB), pixels interleaved row-major.
void write_png(const std::filesystem::path& path, int width, int height, int channels,
               const std::vector<std::uint8_t>& pixels);

}  // namespace roomlay

#endif  // ROOMLAY_PNG_WRITER_HPP

#include "roomlay/layout_io.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "roomlay/error.hpp"

namespace roomlay {

using nlohmann::json;

namespace {

// Line/column of a byte offset, both 1-based.
std::string describe_offset(const std::string& text, std::size_t offset) {
  std::size_t line = 1, column = 1;
  for (std::size_t i = 0; i < offset && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      column = 1;
    } else {
      ++column;
    }
  }
  std::ostringstream out;
  out << "line " << line << ", column " << column << " (offset " << offset << ")";
  return out.str();
}

double number_field(const json& obj, const char* key, const std::string& where) {
  if (!obj.contains(key) || !obj.at(key).is_number()) {
    fail(ErrorCode::kParse, where + ": missing or non-numeric \"" + key + "\"");
  }
  return obj.at(key).get<double>();
}

}  // namespace

std::string layout_to_json(const RoomLayout& layout) {
  json corners = json::array();
  for (const Vec2& p : layout.corners) corners.push_back({p.x, p.y});
  json doc = {
      {"id", layout.id},
      {"corners", corners},
      {"ceiling_height", layout.ceiling_height},
      {"camera", {{"x", layout.camera.x}, {"y", layout.camera.y}, {"height", layout.camera.height}}},
  };
  return doc.dump(2) + "\n";
}

RoomLayout layout_from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    fail(ErrorCode::kParse, "layout JSON malformed at " + describe_offset(text, e.byte) +
                                ": " + e.what());
  }
  if (!doc.is_object()) fail(ErrorCode::kParse, "layout JSON: top level must be an object");
  RoomLayout layout;
  if (!doc.contains("id") || !doc["id"].is_string()) {
    fail(ErrorCode::kParse, "layout JSON: missing string \"id\"");
  }
  layout.id = doc["id"].get<std::string>();
  if (!doc.contains("corners") || !doc["corners"].is_array()) {
    fail(ErrorCode::kParse, "layout JSON: missing array \"corners\"");
  }
  const json& corners = doc["corners"];
  for (std::size_t i = 0; i < corners.size(); ++i) {
    const json& c = corners[i];
    if (!c.is_array() || c.size() != 2 || !c[0].is_number() || !c[1].is_number()) {
      fail(ErrorCode::kParse, "layout JSON: corners[" + std::to_string(i) + "] must be [x, y]");
    }
    layout.corners.push_back({c[0].get<double>(), c[1].get<double>()});
  }
  layout.ceiling_height = number_field(doc, "ceiling_height", "layout JSON");
  if (!doc.contains("camera") || !doc["camera"].is_object()) {
    fail(ErrorCode::kParse, "layout JSON: missing object \"camera\"");
  }
  const json& cam = doc["camera"];
  layout.camera.x = number_field(cam, "x", "layout JSON camera");
  layout.camera.y = number_field(cam, "y", "layout JSON camera");
  layout.camera.height = number_field(cam, "height", "layout JSON camera");
  return layout;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIo, "cannot open '" + path.string() + "' for reading");
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) fail(ErrorCode::kIo, "read failed for '" + path.string() + "'");
  return buf.str();
}

void write_file(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::kIo, "cannot open '" + path.string() + "' for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(ErrorCode::kIo, "write failed for '" + path.string() + "'");
}

void write_layout(const std::filesystem::path& path, const RoomLayout& layout) {
  write_file(path, layout_to_json(layout));
}

RoomLayout read_layout(const std::filesystem::path& path) {
  try {
    return layout_from_json(read_file(path));
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kParse) fail(ErrorCode::kParse, path.string() + ": " + e.what());
    throw;
  }
}

std::string encode_pgm(const GrayImage& image) {
  std::string out = "P5\n" + std::to_string(image.width) + " " + std::to_string(image.height) +
                    "\n255\n";
  out.append(reinterpret_cast<const char*>(image.pixels.data()), image.pixels.size());
  return out;
}

GrayImage decode_pgm(const std::string& bytes) {
  std::size_t pos = 0;
  auto skip_space = [&] {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(static_cast<unsigned char>(bytes[pos]))) {
        ++pos;
      } else {
        break;
      }
    }
  };
  auto read_int = [&](const char* what) {
    skip_space();
    const std::size_t start = pos;
    long long v = 0;
    while (pos < bytes.size() && std::isdigit(static_cast<unsigned char>(bytes[pos]))) {
      v = v * 10 + (bytes[pos] - '0');
      if (v > (1LL << 30)) break;
      ++pos;
    }
    if (pos == start || v > (1LL << 30)) {
      fail(ErrorCode::kParse, std::string("PGM: bad ") + what + " at offset " + std::to_string(start));
    }
    return static_cast<int>(v);
  };
  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '5') {
    fail(ErrorCode::kParse, "PGM: missing P5 magic at offset 0");
  }
  pos = 2;
  GrayImage image;
  image.width = read_int("width");
  image.height = read_int("height");
  const int maxval = read_int("maxval");
  if (maxval != 255) {
    fail(ErrorCode::kParse, "PGM: maxval must be 255, got " + std::to_string(maxval));
  }
  if (pos >= bytes.size() || !std::isspace(static_cast<unsigned char>(bytes[pos]))) {
    fail(ErrorCode::kParse, "PGM: expected whitespace after header at offset " + std::to_string(pos));
  }
  ++pos;
  const std::size_t count = static_cast<std::size_t>(image.width) * image.height;
  if (image.width <= 0 || image.height <= 0) fail(ErrorCode::kParse, "PGM: empty image");
  if (bytes.size() - pos != count) {
    fail(ErrorCode::kParse, "PGM: expected " + std::to_string(count) + " payload bytes at offset " +
                                std::to_string(pos) + ", found " + std::to_string(bytes.size() - pos));
  }
  image.pixels.assign(bytes.begin() + static_cast<std::ptrdiff_t>(pos), bytes.end());
  return image;
}

std::string encode_grid_pgm(const OccupancyGrid& grid) {
  GrayImage image{grid.resolution(), grid.resolution(), {}};
  image.pixels.reserve(grid.values().size());
  for (std::uint8_t v : grid.values()) image.pixels.push_back(v ? 255 : 0);
  return encode_pgm(image);
}

OccupancyGrid decode_grid_pgm(const std::string& bytes) {
  const GrayImage image = decode_pgm(bytes);
  if (image.width != image.height) {
    fail(ErrorCode::kParse, "grid PGM must be square, got " + std::to_string(image.width) + "x" +
                                std::to_string(image.height));
  }
  const std::size_t header = bytes.size() - image.pixels.size();
  std::vector<std::uint8_t> values;
  values.reserve(image.pixels.size());
  for (std::size_t i = 0; i < image.pixels.size(); ++i) {
    const std::uint8_t p = image.pixels[i];
    if (p != 0 && p != 255) {
      fail(ErrorCode::kParse, "grid PGM: value " + std::to_string(p) + " at offset " +
                                  std::to_string(header + i) + " (only 0 and 255 allowed)");
    }
    values.push_back(p ? 1 : 0);
  }
  return OccupancyGrid(image.width, GridFrame{}, std::move(values));
}

void write_grid(const std::filesystem::path& path, const OccupancyGrid& grid) {
  write_file(path, encode_grid_pgm(grid));
}

OccupancyGrid read_grid(const std::filesystem::path& path) {
  try {
    return decode_grid_pgm(read_file(path));
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kParse) fail(ErrorCode::kParse, path.string() + ": " + e.what());
    throw;
  }
}

}  // namespace roomlay

#include "roomlay/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <limits>
#include <map>
#include <set>

#include "roomlay/error.hpp"
#include "roomlay/layout_io.hpp"

namespace roomlay {

namespace {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

template <typename T>
void put(std::string& out, T v) {
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.append(buf, sizeof(T));
}

class Reader {
 public:
  explicit Reader(const std::string& bytes) : bytes_(bytes) {}

  template <typename T>
  T get(const char* what) {
    need(sizeof(T), what);
    T v;
    std::memcpy(&v, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }

  std::string take(std::size_t n, const char* what) {
    need(n, what);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  std::size_t pos() const { return pos_; }
  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  void need(std::size_t n, const char* what) {
    if (bytes_.size() - pos_ < n) {
      fail(ErrorCode::kCheckpoint, std::string("checkpoint truncated while reading ") + what +
                                       " at offset " + std::to_string(pos_));
    }
  }

  const std::string& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string encode_checkpoint(const Checkpoint& checkpoint, StorageType type) {
  std::string out = "RLIE";
  put<std::uint32_t>(out, kCheckpointVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(checkpoint.arrays.size()));
  for (const NamedArray& a : checkpoint.arrays) {
    if (a.name.size() > std::numeric_limits<std::uint16_t>::max()) {
      fail(ErrorCode::kCheckpoint, "array name too long: " + a.name.substr(0, 32) + "...");
    }
    put<std::uint16_t>(out, static_cast<std::uint16_t>(a.name.size()));
    out += a.name;
    put<std::uint8_t>(out, static_cast<std::uint8_t>(a.value.rank()));
    for (int d : a.value.shape()) put<std::uint32_t>(out, static_cast<std::uint32_t>(d));
    put<std::uint8_t>(out, static_cast<std::uint8_t>(type));
    for (double v : a.value.values()) {
      if (type == StorageType::kF64) {
        put<double>(out, v);
      } else {
        put<float>(out, static_cast<float>(v));
      }
    }
  }
  put<std::uint32_t>(out, static_cast<std::uint32_t>(checkpoint.config_json.size()));
  out += checkpoint.config_json;
  return out;
}

Checkpoint decode_checkpoint(const std::string& bytes) {
  Reader r(bytes);
  if (r.take(4, "magic") != "RLIE") fail(ErrorCode::kCheckpoint, "bad checkpoint magic (expected RLIE)");
  const auto version = r.get<std::uint32_t>("version");
  if (version != kCheckpointVersion) {
    fail(ErrorCode::kCheckpoint, "unsupported checkpoint version " + std::to_string(version));
  }
  const auto count = r.get<std::uint32_t>("array count");
  Checkpoint ck;
  for (std::uint32_t i = 0; i < count; ++i) {
    NamedArray a;
    const auto len = r.get<std::uint16_t>("name length");
    a.name = r.take(len, "array name");
    const auto ndim = r.get<std::uint8_t>("ndim");
    nn::Shape shape;
    std::size_t n = 1;
    for (int d = 0; d < ndim; ++d) {
      const auto dim = r.get<std::uint32_t>("dims");
      if (dim > static_cast<std::uint32_t>(std::numeric_limits<int>::max())) {
        fail(ErrorCode::kCheckpoint, "dimension too large in array " + a.name);
      }
      shape.push_back(static_cast<int>(dim));
      n *= dim;
    }
    const auto dtype = r.get<std::uint8_t>("dtype");
    if (dtype > 1) fail(ErrorCode::kCheckpoint, "unknown dtype " + std::to_string(dtype) + " in array " + a.name);
    const std::size_t width = dtype == 0 ? 4 : 8;
    if (n > r.remaining() / width) {
      fail(ErrorCode::kCheckpoint, "checkpoint truncated in payload of array " + a.name);
    }
    std::vector<double> values(n);
    for (std::size_t k = 0; k < n; ++k) {
      values[k] = dtype == 0 ? static_cast<double>(r.get<float>("payload")) : r.get<double>("payload");
    }
    a.value = nn::Tensor(std::move(shape), std::move(values));
    ck.arrays.push_back(std::move(a));
  }
  const auto cfg_len = r.get<std::uint32_t>("config length");
  ck.config_json = r.take(cfg_len, "config");
  if (r.remaining() != 0) {
    fail(ErrorCode::kCheckpoint, "trailing bytes after checkpoint at offset " + std::to_string(r.pos()));
  }
  return ck;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint, StorageType type) {
  write_file(path, encode_checkpoint(checkpoint, type));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) { return decode_checkpoint(read_file(path)); }

Checkpoint capture(const std::vector<nn::Parameter*>& params, std::string config_json) {
  Checkpoint ck;
  std::set<std::string> seen;
  for (const nn::Parameter* p : params) {
    if (!seen.insert(p->name).second) fail(ErrorCode::kInternal, "duplicate parameter name " + p->name);
    ck.arrays.push_back({p->name, p->value});
  }
  ck.config_json = std::move(config_json);
  return ck;
}

void restore(const std::vector<nn::Parameter*>& params, const Checkpoint& checkpoint) {
  std::map<std::string, const nn::Tensor*> by_name;
  for (const NamedArray& a : checkpoint.arrays) by_name[a.name] = &a.value;
  for (nn::Parameter* p : params) {
    auto it = by_name.find(p->name);
    if (it == by_name.end()) fail(ErrorCode::kCheckpoint, "checkpoint has no array named " + p->name);
    if (it->second->shape() != p->value.shape()) {
      fail(ErrorCode::kCheckpoint, "array " + p->name + " has shape " + nn::shape_string(it->second->shape()) +
                                       ", model expects " + nn::shape_string(p->value.shape()));
    }
    p->value = *it->second;
  }
}

}  // namespace roomlay

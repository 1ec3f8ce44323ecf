#ifndef ROOMLAY_CHECKPOINT_HPP
#define ROOMLAY_CHECKPOINT_HPP

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "roomlay/nn/graph.hpp"

namespace roomlay {

enum class StorageType : std::uint8_t { kF32 = 0, kF64 = 1 };

struct NamedArray {
  std::string name;
  nn::Tensor value;
};

struct Checkpoint {
  std::vector<NamedArray> arrays;
  std::string config_json;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

// Binary layout: "RLIE", u32 version, u32 array count, arrays, u32 config
// length, config bytes. All integers little-endian.
std::string encode_checkpoint(const Checkpoint& checkpoint, StorageType type = StorageType::kF64);
Checkpoint decode_checkpoint(const std::string& bytes);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint,
                     StorageType type = StorageType::kF64);
Checkpoint load_checkpoint(const std::filesystem::path& path);

Checkpoint capture(const std::vector<nn::Parameter*>& params, std::string config_json);
// Copies every parameter from the array with the same name; missing names and
// shape differences throw kCheckpoint.
void restore(const std::vector<nn::Parameter*>& params, const Checkpoint& checkpoint);

}  // namespace roomlay

#endif  // ROOMLAY_CHECKPOINT_HPP

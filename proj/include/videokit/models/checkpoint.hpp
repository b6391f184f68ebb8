#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

#include <json.hpp>

#include "videokit/models/module.hpp"

// Weight checkpoints: a flat binary name -> array file plus a JSON sidecar
// at "<path>.json" holding {factory, args, param_count}.
//
// Binary layout (little-endian): magic "VKCKPT01", u64 entry count, then per
// entry u32 name length, name bytes, u32 rank, i64 dims[rank], f32 data.
namespace videokit::models {

using StateDict = std::map<std::string, Tensor>;

struct CheckpointMeta {
  std::string factory;
  nlohmann::json args = nlohmann::json::object();
  std::int64_t param_count = 0;
};

// Every parameter and buffer by qualified name.
StateDict state_dict(const Module& m);

// Copies tensors into the module. Throws KeyError when a name is missing on
// either side and ShapeError on shape mismatch.
void load_state_dict(Module& m, const StateDict& state);

std::filesystem::path sidecar_path(const std::filesystem::path& path);

void save_checkpoint(const Module& m, const std::filesystem::path& path,
                     const CheckpointMeta& meta);
StateDict read_checkpoint(const std::filesystem::path& path);
CheckpointMeta read_checkpoint_meta(const std::filesystem::path& path);

}  // namespace videokit::models

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "asucnn/model.hpp"
#include "asucnn/trainer.hpp"

namespace asucnn {

// Checkpoint file layout, all integers little-endian:
//
//   "ASUCNNCK"                 8-byte magic
//   u32 version                currently 1
//   u32 activation             0 = asu, 1 = gcu, 2 = relu
//   u32 n, n bytes             config echo (JSON: architecture + train config)
//   u32 tensor count
//   per tensor:
//     u32 n, n bytes           name
//     u32 rank, rank x u32     dims
//     f32 x elements           values, row-major
//
// Nothing may follow the last tensor.
inline constexpr char kCheckpointMagic[8] = {'A', 'S', 'U', 'C', 'N', 'N', 'C', 'K'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct RawCheckpoint {
  std::uint32_t version = kCheckpointVersion;
  ActivationKind activation = ActivationKind::kAsu;
  std::string config_json = "{}";
  std::vector<Parameter<float>> tensors;
};

std::vector<std::uint8_t> encode_checkpoint(const RawCheckpoint& raw);
RawCheckpoint decode_checkpoint(const std::vector<std::uint8_t>& bytes);

void write_checkpoint_file(const std::filesystem::path& path, const RawCheckpoint& raw);
RawCheckpoint read_checkpoint_file(const std::filesystem::path& path);

struct Checkpoint {
  ModelParams<float> params;
  TrainConfig config;
};

void save_checkpoint(const std::filesystem::path& path, const ModelParams<float>& params,
                     const TrainConfig& config);

// Rebuilds the architecture from the config echo and checks every tensor's
// name and dims against it.
Checkpoint load_checkpoint(const std::filesystem::path& path);

std::string config_to_json(const Architecture& arch, const TrainConfig& config);

}  // namespace asucnn

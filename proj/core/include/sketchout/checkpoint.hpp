#pragma once

#include <torch/torch.h>

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "sketchout/scale.hpp"

namespace sketchout {

inline constexpr uint32_t kCheckpointVersion = 1;

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct NamedTensor {
  std::string name;
  torch::Tensor value;
};

/// Everything needed to resume a run or serve a model.
///
/// On disk: magic "SKOUTCKP", u32 format version, u64 payload length, the
/// payload, then a CRC-32 of the payload. All integers little-endian.
struct ModelCheckpoint {
  uint32_t version = kCheckpointVersion;
  std::string fingerprint;
  std::string config_text;
  ArchitectureScale scale;
  int64_t epoch = 0;           // completed epochs
  int64_t batch_in_epoch = 0;  // batches already consumed of `epoch`
  int64_t step = 0;            // generator updates so far
  std::vector<NamedTensor> generator;
  std::vector<NamedTensor> critic_global;
  std::vector<NamedTensor> critic_local;
  std::vector<NamedTensor> generator_optimizer;  // Adam moments, parameter order
  std::vector<NamedTensor> critic_optimizer;
};

/// Writes atomically (temporary file + rename). Throws CheckpointError.
void save_checkpoint(const ModelCheckpoint& checkpoint, const std::filesystem::path& path);

/// Throws CheckpointError on a missing, truncated, corrupted or
/// version-mismatched file.
ModelCheckpoint load_checkpoint(const std::filesystem::path& path);

/// Copies every parameter and buffer of `module` (detached, contiguous).
std::vector<NamedTensor> snapshot(const torch::nn::Module& module);

/// Copies `tensors` into `module`; names and shapes must match exactly.
void restore(torch::nn::Module& module, const std::vector<NamedTensor>& tensors,
             const std::string& what);

}  // namespace sketchout

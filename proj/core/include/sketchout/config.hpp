#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "sketchout/data.hpp"
#include "sketchout/losses.hpp"
#include "sketchout/scale.hpp"

namespace sketchout {

/// Training run configuration. The text form is a flat `key = value`
/// document whose keys are the field names below (loss weights as
/// `weights.<name>`); `#` starts a comment.
struct TrainConfig {
  int64_t batch_size = 8;
  double lr0 = 1e-4;
  int64_t lr_decay_epoch = 200;
  double lr_decay_factor = 0.1;
  int64_t epochs = 800;
  LossWeights weights;
  int64_t critic_steps_per_gen_step = 1;
  uint64_t seed = 0;
  ArchitectureScale scale = ArchitectureScale::desk();
  double mask_floor = 0.2;

  double adam_beta1 = 0.5;
  double adam_beta2 = 0.9;
  /// Extra border (fraction of the target size) kept when loading images so
  /// random crops have room to move.
  double crop_margin = 0.125;
  std::string edge_detector = "sobel";

  // Run control; excluded from the fingerprint so a run can be extended.
  int64_t max_steps = 0;  // 0 = no limit
  int64_t checkpoint_interval = 50;

  /// Reference schedule: batch 30, 800 epochs, 128x128 halves.
  static TrainConfig full_scale();
  /// Same hyperparameters on the reduced architecture with batch 8.
  static TrainConfig desk_scale();

  static TrainConfig parse(std::string_view text);
  static TrainConfig load(const std::filesystem::path& path);
  std::string to_text() const;

  void validate() const;
  /// 16 hex digits identifying everything that affects the optimisation
  /// trajectory (all fields except epochs, max_steps, checkpoint_interval).
  std::string fingerprint() const;
  MaskingPolicy masking_policy() const;
  /// Corpus resolution before random cropping: the training size enlarged
  /// by crop_margin (rounded to even width).
  std::pair<int64_t, int64_t> source_size() const;
};

/// lr0 before lr_decay_epoch, lr0 * lr_decay_factor from then on.
double lr_at(int64_t epoch, const TrainConfig& cfg);

/// FNV-1a 64-bit hash as 16 lowercase hex digits.
std::string fnv1a_hex(std::string_view text);

}  // namespace sketchout

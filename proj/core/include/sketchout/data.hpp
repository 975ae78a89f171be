#pragma once

#include <torch/torch.h>

#include <vector>

#include "sketchout/edges.hpp"
#include "sketchout/rng.hpp"
#include "sketchout/scale.hpp"

namespace sketchout {

/// Right-sketch augmentation: keep it, or zero a random patch in its top or
/// bottom half. Patch sizes are given for a 128x128 half and scale linearly
/// with the actual half size.
struct MaskingPolicy {
  double p_unchanged = 0.4;
  double p_top = 0.2;
  double p_bottom = 0.4;
  int64_t patch_min_h = 48;
  int64_t patch_min_w = 48;
  int64_t patch_max_h = 64;
  int64_t patch_max_w = 128;
  int64_t reference_size = 128;

  void validate() const;
};

enum class MaskBranch { kUnchanged, kTop, kBottom };

struct PatchRect {
  int64_t top = 0;
  int64_t left = 0;
  int64_t height = 0;
  int64_t width = 0;
};

struct MaskResult {
  torch::Tensor sketch;  // [1,H,W]
  MaskBranch branch = MaskBranch::kUnchanged;
  PatchRect patch;  // empty when unchanged
};

MaskResult random_sketch_mask(const torch::Tensor& sketch_right, const MaskingPolicy& policy,
                              Rng& rng);

/// Random crop of a [3,H',W'] image to target size, then a horizontal flip
/// with probability 0.5.
torch::Tensor random_crop_flip(const torch::Tensor& image, int64_t target_height,
                               int64_t target_width, Rng& rng);

struct TrainingExample {
  torch::Tensor image_left, image_right;    // [3,H,W_half]
  torch::Tensor sketch_left, sketch_right;  // [1,H,W_half]; right is the guidance
  torch::Tensor pos_left, pos_right;        // [2,H,W_half]
  torch::Tensor full_image;                 // [3,H,2W_half]
  torch::Tensor full_sketch;                // concat(sketch_left, sketch_right)
};

/// crop/flip -> sketch extraction -> split -> right-sketch masking ->
/// position halves.
TrainingExample make_example(const torch::Tensor& image, const EdgeDetector& detector, Rng& rng,
                             const MaskingPolicy& policy, const ArchitectureScale& scale);

/// Same split without any augmentation; the guidance is the true sketch.
TrainingExample make_plain_example(const torch::Tensor& image, const EdgeDetector& detector,
                                   const ArchitectureScale& scale);

/// Example fields stacked along a new batch dimension.
struct Batch {
  torch::Tensor image_left, image_right;
  torch::Tensor sketch_left, sketch_right;
  torch::Tensor full_image, full_sketch;

  int64_t size() const { return full_image.size(0); }
};

Batch collate(const std::vector<TrainingExample>& examples);

}  // namespace sketchout

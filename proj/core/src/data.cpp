#include "sketchout/data.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "sketchout/raster.hpp"

namespace sketchout {
namespace {

int64_t scaled(int64_t value, int64_t actual, int64_t reference) {
  return std::max<int64_t>(1, (value * actual + reference / 2) / reference);
}

}  // namespace

void MaskingPolicy::validate() const {
  if (p_unchanged < 0 || p_top < 0 || p_bottom < 0 ||
      std::abs(p_unchanged + p_top + p_bottom - 1.0) > 1e-9) {
    throw std::invalid_argument("MaskingPolicy: probabilities must be nonnegative and sum to 1");
  }
  if (patch_min_h > patch_max_h || patch_min_w > patch_max_w || patch_min_h < 1 ||
      patch_min_w < 1) {
    throw std::invalid_argument("MaskingPolicy: patch_min must not exceed patch_max");
  }
}

MaskResult random_sketch_mask(const torch::Tensor& sketch_right, const MaskingPolicy& policy,
                              Rng& rng) {
  if (sketch_right.dim() != 3 || sketch_right.size(0) != 1) {
    throw std::invalid_argument("random_sketch_mask: expected [1,H,W], got " +
                                c10::str(sketch_right.sizes()));
  }
  const int64_t height = sketch_right.size(1);
  const int64_t width = sketch_right.size(2);
  const double u = uniform01(rng);
  MaskResult result{sketch_right, MaskBranch::kUnchanged, {}};
  if (u < policy.p_unchanged) return result;
  result.branch = u < policy.p_unchanged + policy.p_top ? MaskBranch::kTop : MaskBranch::kBottom;

  const int64_t half_h = height / 2;
  const auto ph_lo = std::min(scaled(policy.patch_min_h, height, policy.reference_size), half_h);
  const auto ph_hi = std::min(scaled(policy.patch_max_h, height, policy.reference_size), half_h);
  const auto pw_lo = std::min(scaled(policy.patch_min_w, width, policy.reference_size), width);
  const auto pw_hi = std::min(scaled(policy.patch_max_w, width, policy.reference_size), width);

  PatchRect& rect = result.patch;
  rect.height = uniform_int(rng, ph_lo, ph_hi);
  rect.width = uniform_int(rng, pw_lo, pw_hi);
  const int64_t band_top = result.branch == MaskBranch::kTop ? 0 : half_h;
  const int64_t band_height = result.branch == MaskBranch::kTop ? half_h : height - half_h;
  rect.top = band_top + uniform_int(rng, 0, band_height - rect.height);
  rect.left = uniform_int(rng, 0, width - rect.width);

  result.sketch = sketch_right.clone();
  result.sketch.narrow(1, rect.top, rect.height).narrow(2, rect.left, rect.width).zero_();
  return result;
}

torch::Tensor random_crop_flip(const torch::Tensor& image, int64_t target_height,
                               int64_t target_width, Rng& rng) {
  if (image.dim() != 3) {
    throw std::invalid_argument("random_crop_flip: expected [C,H,W], got " +
                                c10::str(image.sizes()));
  }
  if (image.size(1) < target_height || image.size(2) < target_width) {
    throw std::invalid_argument("random_crop_flip: source " + std::to_string(image.size(1)) + "x" +
                                std::to_string(image.size(2)) + " is smaller than target " +
                                std::to_string(target_height) + "x" +
                                std::to_string(target_width));
  }
  const int64_t top = uniform_int(rng, 0, image.size(1) - target_height);
  const int64_t left = uniform_int(rng, 0, image.size(2) - target_width);
  auto crop = image.narrow(1, top, target_height).narrow(2, left, target_width);
  const bool flip = uniform01(rng) < 0.5;
  return flip ? crop.flip({2}).contiguous() : crop.contiguous();
}

namespace {

TrainingExample assemble(const torch::Tensor& full, const torch::Tensor& sketch,
                         const torch::Tensor& guide_right, const ArchitectureScale& scale) {
  TrainingExample ex;
  ex.full_image = full;
  std::tie(ex.image_left, ex.image_right) = split_halves(full);
  std::tie(ex.sketch_left, std::ignore) = split_halves(sketch);
  ex.sketch_right = guide_right;
  ex.full_sketch = concat_halves(ex.sketch_left, ex.sketch_right);
  std::tie(ex.pos_left, ex.pos_right) =
      split_halves(make_position_channels(scale.half_height, scale.full_width()));
  return ex;
}

void check_full(const torch::Tensor& image, const ArchitectureScale& scale) {
  if (image.dim() != 3 || image.size(0) != 3) {
    throw std::invalid_argument("make_example: expected [3,H,W] image, got " +
                                c10::str(image.sizes()));
  }
  if (image.size(1) < scale.half_height || image.size(2) < scale.full_width()) {
    throw std::invalid_argument("make_example: image smaller than " +
                                std::to_string(scale.half_height) + "x" +
                                std::to_string(scale.full_width()));
  }
}

}  // namespace

TrainingExample make_example(const torch::Tensor& image, const EdgeDetector& detector, Rng& rng,
                             const MaskingPolicy& policy, const ArchitectureScale& scale) {
  check_full(image, scale);
  auto full = random_crop_flip(image, scale.half_height, scale.full_width(), rng);
  auto sketch = extract_sketch(full, detector);
  auto right = split_halves(sketch).second;
  auto masked = random_sketch_mask(right, policy, rng);
  return assemble(full, sketch, masked.sketch, scale);
}

TrainingExample make_plain_example(const torch::Tensor& image, const EdgeDetector& detector,
                                   const ArchitectureScale& scale) {
  check_full(image, scale);
  auto full = image.narrow(1, 0, scale.half_height).narrow(2, 0, scale.full_width()).contiguous();
  auto sketch = extract_sketch(full, detector);
  return assemble(full, sketch, split_halves(sketch).second, scale);
}

Batch collate(const std::vector<TrainingExample>& examples) {
  if (examples.empty()) throw std::invalid_argument("collate: empty batch");
  const auto stack = [&](auto member) {
    std::vector<torch::Tensor> parts;
    parts.reserve(examples.size());
    for (const auto& ex : examples) parts.push_back(ex.*member);
    return torch::stack(parts);
  };
  Batch b;
  b.image_left = stack(&TrainingExample::image_left);
  b.image_right = stack(&TrainingExample::image_right);
  b.sketch_left = stack(&TrainingExample::sketch_left);
  b.sketch_right = stack(&TrainingExample::sketch_right);
  b.full_image = stack(&TrainingExample::full_image);
  b.full_sketch = stack(&TrainingExample::full_sketch);
  return b;
}

}  // namespace sketchout

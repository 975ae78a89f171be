#pragma once

#include <torch/torch.h>

#include "sketchout/rng.hpp"

namespace sketchout {

/// Coarse layout of a synthetic scene; doubles as a class label.
struct SceneryLayout {
  int ridges = 1;  // 1..3
  bool sun = false;
  int clouds = 0;

  static constexpr int kClasses = 6;
  int label() const { return (ridges - 1) * 2 + (sun ? 1 : 0); }
};

struct SyntheticScene {
  torch::Tensor image;  // [3,H,W] in [-1,1]
  SceneryLayout layout;
};

/// Procedural landscape: vertical sky gradient, optional sun disk, one to
/// three midpoint-displacement mountain ridges, a ground band and elliptical
/// clouds. Deterministic in the rng state; H and W must be >= 32.
SyntheticScene synth_scenery(Rng& rng, int64_t height, int64_t width);

}  // namespace sketchout

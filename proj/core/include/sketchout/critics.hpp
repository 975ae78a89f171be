#pragma once

#include <torch/torch.h>

#include "sketchout/blocks.hpp"
#include "sketchout/scale.hpp"

namespace sketchout {

/// Wasserstein critic over channel-concat(image, sketch).
///
/// Five stride-2 5x5 convolutions (LeakyReLU 0.2) followed by a linear head
/// to one unbounded scalar per sample.
class CriticImpl : public torch::nn::Module {
 public:
  CriticImpl(int64_t height, int64_t width, const ArchitectureScale& scale);

  /// image [N,3,H,W], sketch [N,1,H,W] -> [N]
  torch::Tensor forward(const torch::Tensor& image, const torch::Tensor& sketch);

  int64_t height() const { return height_; }
  int64_t width() const { return width_; }

  torch::nn::ModuleList convs;
  torch::nn::Linear head{nullptr};

 private:
  int64_t height_;
  int64_t width_;
};
TORCH_MODULE(Critic);

/// Judges full H x 2W_half images.
Critic make_global_critic(const ArchitectureScale& scale, uint64_t seed);
/// Judges the synthesized H x W_half right half.
Critic make_local_critic(const ArchitectureScale& scale, uint64_t seed);

}  // namespace sketchout

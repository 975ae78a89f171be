#include "sketchout/critics.hpp"

#include <stdexcept>
#include <string>

namespace sketchout {

CriticImpl::CriticImpl(int64_t height, int64_t width, const ArchitectureScale& scale)
    : height_(height), width_(width) {
  const int64_t widths[] = {64, 128, 256, 512, 512};
  int64_t in = 4;
  int64_t h = height;
  int64_t w = width;
  for (int64_t ref : widths) {
    const int64_t out = scale.channels(ref);
    convs->push_back(SameConv2d(ConvSpec(in, out, 5, 2, Activation::kLeakyRelu)));
    in = out;
    h = (h + 1) / 2;
    w = (w + 1) / 2;
  }
  register_module("convs", convs);
  head = register_module("head", torch::nn::Linear(in * h * w, 1));
}

torch::Tensor CriticImpl::forward(const torch::Tensor& image, const torch::Tensor& sketch) {
  const auto expect = [&](const torch::Tensor& t, int64_t channels, const char* what) {
    if (t.dim() != 4 || t.size(1) != channels || t.size(2) != height_ || t.size(3) != width_) {
      throw std::invalid_argument(std::string("critic: ") + what + " must be [N," +
                                  std::to_string(channels) + "," + std::to_string(height_) + "," +
                                  std::to_string(width_) + "], got " + c10::str(t.sizes()));
    }
  };
  expect(image, 3, "image");
  expect(sketch, 1, "sketch");
  if (sketch.size(0) != image.size(0)) throw std::invalid_argument("critic: batch sizes differ");
  auto x = torch::cat({image, sketch}, 1);
  for (const auto& layer : *convs) x = layer->as<SameConv2dImpl>()->forward(x);
  return head->forward(x.flatten(1)).squeeze(1);
}

Critic make_global_critic(const ArchitectureScale& scale, uint64_t seed) {
  Critic critic(scale.half_height, scale.full_width(), scale);
  init_parameters(*critic, seed);
  return critic;
}

Critic make_local_critic(const ArchitectureScale& scale, uint64_t seed) {
  Critic critic(scale.half_height, scale.half_width, scale);
  init_parameters(*critic, seed);
  return critic;
}

}  // namespace sketchout

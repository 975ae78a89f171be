#pragma once

#include <torch/torch.h>

#include <array>

namespace sketchout {

enum class Activation { kIdentity, kElu, kLeakyRelu };

torch::Tensor apply_activation(const torch::Tensor& x, Activation act);

/// Pads [N,C,H,W] so that a convolution with the given kernel/stride yields
/// ceil(H/s) x ceil(W/s) outputs. Extra odd padding goes to the bottom/right.
torch::Tensor pad_same(const torch::Tensor& x, std::array<int64_t, 2> kernel,
                       std::array<int64_t, 2> stride);

struct ConvSpec {
  int64_t in_channels = 0;
  int64_t out_channels = 0;
  std::array<int64_t, 2> kernel{3, 3};
  std::array<int64_t, 2> stride{1, 1};
  Activation activation = Activation::kElu;

  ConvSpec(int64_t in, int64_t out, int64_t k, int64_t s = 1, Activation act = Activation::kElu)
      : in_channels(in), out_channels(out), kernel{k, k}, stride{s, s}, activation(act) {}
  ConvSpec(int64_t in, int64_t out, std::array<int64_t, 2> k, std::array<int64_t, 2> s,
           Activation act)
      : in_channels(in), out_channels(out), kernel(k), stride(s), activation(act) {}
};

/// Plain same-padded convolution followed by an activation.
class SameConv2dImpl : public torch::nn::Module {
 public:
  explicit SameConv2dImpl(const ConvSpec& spec);
  torch::Tensor forward(const torch::Tensor& x);

  const ConvSpec& spec() const { return spec_; }
  torch::nn::Conv2d conv{nullptr};

 private:
  ConvSpec spec_;
};
TORCH_MODULE(SameConv2d);

/// act(feature(x)) * sigmoid(gate(x)) with two parallel same-padded
/// convolutions of identical geometry.
class GatedConv2dImpl : public torch::nn::Module {
 public:
  explicit GatedConv2dImpl(const ConvSpec& spec);
  torch::Tensor forward(const torch::Tensor& x);

  const ConvSpec& spec() const { return spec_; }
  torch::nn::Conv2d feature{nullptr};
  torch::nn::Conv2d gate{nullptr};

 private:
  ConvSpec spec_;
};
TORCH_MODULE(GatedConv2d);

/// Nearest-neighbour 2x upsampling followed by a stride-1 3x3 gated conv.
class GatedDeconv2dImpl : public torch::nn::Module {
 public:
  GatedDeconv2dImpl(int64_t in_channels, int64_t out_channels,
                    Activation activation = Activation::kElu);
  torch::Tensor forward(const torch::Tensor& x);

  GatedConv2d conv{nullptr};
};
TORCH_MODULE(GatedDeconv2d);

/// x + g1x1(g3x3(g1x1(x))). The inner width is channels/4 (bottleneck).
class GatedResBlockImpl : public torch::nn::Module {
 public:
  explicit GatedResBlockImpl(int64_t channels);
  torch::Tensor forward(const torch::Tensor& x);
  /// The residual branch alone.
  torch::Tensor branch(const torch::Tensor& x);

  int64_t channels() const { return channels_; }
  GatedConv2d reduce{nullptr};
  GatedConv2d spatial{nullptr};
  GatedConv2d expand{nullptr};

 private:
  int64_t channels_;
};
TORCH_MODULE(GatedResBlock);

/// Builds `count` residual blocks of width `channels`.
torch::nn::Sequential make_resblocks(int64_t count, int64_t channels);

/// Weights ~ N(0, std^2) truncated at two standard deviations, biases zero.
/// Applies to every parameter whose name contains "weight"/"bias". The draw
/// depends only on `seed` and the parameter registration order.
void init_parameters(torch::nn::Module& module, uint64_t seed, double std = 0.02);

/// Fills `t` in place with a truncated normal sample.
void truncated_normal_(torch::Tensor& t, double std, at::Generator gen);

/// Throws std::invalid_argument if x is not [N,channels,H,W].
void check_channels(const torch::Tensor& x, int64_t channels, const char* where);

}  // namespace sketchout

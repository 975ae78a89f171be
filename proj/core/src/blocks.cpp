#include "sketchout/blocks.hpp"

#include <ATen/CPUGeneratorImpl.h>

#include <stdexcept>
#include <string>

namespace sketchout {
namespace {

torch::nn::Conv2d make_conv(const ConvSpec& spec) {
  return torch::nn::Conv2d(
      torch::nn::Conv2dOptions(spec.in_channels, spec.out_channels,
                               {spec.kernel[0], spec.kernel[1]})
          .stride({spec.stride[0], spec.stride[1]})
          .padding(0)
          .bias(true));
}

int64_t same_total_padding(int64_t in, int64_t kernel, int64_t stride) {
  const int64_t out = (in + stride - 1) / stride;
  return std::max<int64_t>((out - 1) * stride + kernel - in, 0);
}

}  // namespace

torch::Tensor apply_activation(const torch::Tensor& x, Activation act) {
  switch (act) {
    case Activation::kElu:
      return torch::elu(x);
    case Activation::kLeakyRelu:
      return torch::leaky_relu(x, 0.2);
    case Activation::kIdentity:
      break;
  }
  return x;
}

torch::Tensor pad_same(const torch::Tensor& x, std::array<int64_t, 2> kernel,
                       std::array<int64_t, 2> stride) {
  const int64_t ph = same_total_padding(x.size(2), kernel[0], stride[0]);
  const int64_t pw = same_total_padding(x.size(3), kernel[1], stride[1]);
  if (ph == 0 && pw == 0) return x;
  return torch::constant_pad_nd(x, {pw / 2, pw - pw / 2, ph / 2, ph - ph / 2}, 0.0);
}

void check_channels(const torch::Tensor& x, int64_t channels, const char* where) {
  if (x.dim() != 4) {
    throw std::invalid_argument(std::string(where) + ": expected [N,C,H,W], got " +
                                c10::str(x.sizes()));
  }
  if (x.size(1) != channels) {
    throw std::invalid_argument(std::string(where) + ": expected " + std::to_string(channels) +
                                " input channels, got " + std::to_string(x.size(1)));
  }
}

SameConv2dImpl::SameConv2dImpl(const ConvSpec& spec) : spec_(spec) {
  conv = register_module("conv", make_conv(spec));
}

torch::Tensor SameConv2dImpl::forward(const torch::Tensor& x) {
  check_channels(x, spec_.in_channels, "conv");
  return apply_activation(conv->forward(pad_same(x, spec_.kernel, spec_.stride)),
                          spec_.activation);
}

GatedConv2dImpl::GatedConv2dImpl(const ConvSpec& spec) : spec_(spec) {
  feature = register_module("feature", make_conv(spec));
  gate = register_module("gate", make_conv(spec));
}

torch::Tensor GatedConv2dImpl::forward(const torch::Tensor& x) {
  check_channels(x, spec_.in_channels, "gated_conv");
  auto padded = pad_same(x, spec_.kernel, spec_.stride);
  return apply_activation(feature->forward(padded), spec_.activation) *
         torch::sigmoid(gate->forward(padded));
}

GatedDeconv2dImpl::GatedDeconv2dImpl(int64_t in_channels, int64_t out_channels,
                                     Activation activation) {
  conv = register_module("conv",
                         GatedConv2d(ConvSpec(in_channels, out_channels, 3, 1, activation)));
}

torch::Tensor GatedDeconv2dImpl::forward(const torch::Tensor& x) {
  check_channels(x, conv->spec().in_channels, "gated_deconv");
  namespace F = torch::nn::functional;
  auto up = F::interpolate(x, F::InterpolateFuncOptions()
                                  .size(std::vector<int64_t>{2 * x.size(2), 2 * x.size(3)})
                                  .mode(torch::kNearest));
  return conv->forward(up);
}

GatedResBlockImpl::GatedResBlockImpl(int64_t channels) : channels_(channels) {
  const int64_t inner = std::max<int64_t>(channels / 4, 1);
  reduce = register_module("reduce", GatedConv2d(ConvSpec(channels, inner, 1)));
  spatial = register_module("spatial", GatedConv2d(ConvSpec(inner, inner, 3)));
  expand = register_module("expand", GatedConv2d(ConvSpec(inner, channels, 1)));
}

torch::Tensor GatedResBlockImpl::branch(const torch::Tensor& x) {
  return expand->forward(spatial->forward(reduce->forward(x)));
}

torch::Tensor GatedResBlockImpl::forward(const torch::Tensor& x) {
  check_channels(x, channels_, "gated_resblock");
  return x + branch(x);
}

torch::nn::Sequential make_resblocks(int64_t count, int64_t channels) {
  torch::nn::Sequential seq;
  for (int64_t i = 0; i < count; ++i) seq->push_back(GatedResBlock(channels));
  return seq;
}

void truncated_normal_(torch::Tensor& t, double std, at::Generator gen) {
  torch::NoGradGuard no_grad;
  t.normal_(0.0, std, gen);
  const double bound = 2.0 * std;
  for (int attempt = 0; attempt < 64; ++attempt) {
    auto outside = t.abs() > bound;
    const auto n = outside.sum().item<int64_t>();
    if (n == 0) return;
    t.masked_scatter_(outside, torch::empty({n}, t.options()).normal_(0.0, std, gen));
  }
  t.clamp_(-bound, bound);
}

void init_parameters(torch::nn::Module& module, uint64_t seed, double std) {
  torch::NoGradGuard no_grad;
  auto gen = at::detail::createCPUGenerator(seed);
  for (auto& item : module.named_parameters(/*recurse=*/true)) {
    const auto& name = item.key();
    auto& param = item.value();
    const auto leaf = name.substr(name.rfind('.') + 1);
    if (leaf.find("weight") != std::string::npos) {
      truncated_normal_(param, std, gen);
    } else if (leaf.find("bias") != std::string::npos) {
      param.zero_();
    }
  }
}

}  // namespace sketchout

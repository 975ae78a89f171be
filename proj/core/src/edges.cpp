#include "sketchout/edges.hpp"

#include <cmath>
#include <stdexcept>

#include "sketchout/raster.hpp"

namespace sketchout {
namespace {

void check_images(const torch::Tensor& images) {
  if (images.dim() != 4 || images.size(1) != 3) {
    throw std::invalid_argument("edge detector expects [N,3,H,W] images, got " +
                                c10::str(images.sizes()));
  }
}

}  // namespace

SobelEdgeDetector::SobelEdgeDetector(double ramp) : ramp_(ramp) {
  if (!(ramp > 0.0)) throw std::invalid_argument("SobelEdgeDetector: ramp must be positive");
  luma_ = torch::tensor({0.299, 0.587, 0.114}, torch::kDouble).view({1, 3, 1, 1});
  kernels_ = torch::tensor({-1.0, 0.0, 1.0, -2.0, 0.0, 2.0, -1.0, 0.0, 1.0,   // d/dx
                            -1.0, -2.0, -1.0, 0.0, 0.0, 0.0, 1.0, 2.0, 1.0},  // d/dy
                           torch::kDouble)
                 .view({2, 1, 3, 3});
}

torch::Tensor SobelEdgeDetector::detect(const torch::Tensor& images) const {
  check_images(images);
  const auto opts = images.options();
  // luminance in [0,1]
  auto gray = ((images * luma_.to(opts)).sum(1, /*keepdim=*/true) + 1.0) * 0.5;
  auto padded = torch::replication_pad2d(gray, {1, 1, 1, 1});
  auto grad = torch::conv2d(padded, kernels_.to(opts));
  // |g|^2 / (4 sqrt 2)^2, kept squared so the map is smooth at zero
  auto magnitude_sq = grad.pow(2).sum(1, /*keepdim=*/true) / 32.0;
  return 1.0 - torch::exp(-magnitude_sq / (ramp_ * ramp_));
}

std::vector<torch::Tensor> SobelEdgeDetector::parameters() const {
  return {luma_, kernels_, torch::tensor({ramp_}, torch::kDouble)};
}

ScriptedEdgeDetector::ScriptedEdgeDetector(const std::filesystem::path& path) : path_(path) {
  module_ = torch::jit::load(path.string());
  module_.eval();
  for (auto p : module_.parameters()) p.set_requires_grad(false);
}

torch::Tensor ScriptedEdgeDetector::detect(const torch::Tensor& images) const {
  check_images(images);
  auto out = module_.forward({images}).toTensor();
  if (out.dim() != 4 || out.size(1) != 1 || out.size(2) != images.size(2) ||
      out.size(3) != images.size(3)) {
    throw std::runtime_error("scripted edge detector returned shape " + c10::str(out.sizes()));
  }
  return out.clamp(0.0, 1.0);
}

std::vector<torch::Tensor> ScriptedEdgeDetector::parameters() const {
  std::vector<torch::Tensor> params;
  for (const auto& p : module_.parameters()) params.push_back(p);
  for (const auto& b : module_.buffers()) params.push_back(b);
  return params;
}

std::shared_ptr<const EdgeDetector> make_edge_detector(const std::string& name) {
  if (name.empty() || name == "sobel") return std::make_shared<SobelEdgeDetector>();
  constexpr std::string_view kScript = "script:";
  if (name.rfind(kScript, 0) == 0) {
    return std::make_shared<ScriptedEdgeDetector>(name.substr(kScript.size()));
  }
  throw std::invalid_argument("unknown edge detector '" + name + "'");
}

torch::Tensor detect_edges(const torch::Tensor& image, const EdgeDetector& detector) {
  const bool single = image.dim() == 3;
  auto out = detector.detect(as_batch(image));
  return single ? out.squeeze(0) : out;
}

torch::Tensor extract_sketch(const torch::Tensor& image, const EdgeDetector& detector,
                             double threshold) {
  torch::NoGradGuard no_grad;
  return binarize_sketch(detect_edges(image, detector), threshold);
}

}  // namespace sketchout

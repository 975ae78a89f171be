#include "sketchout/raster.hpp"

#include <stdexcept>
#include <string>

namespace sketchout {

torch::Tensor make_position_channels(int64_t height, int64_t width, torch::Dtype dtype) {
  if (height < 1 || width < 1) {
    throw std::invalid_argument("make_position_channels: dimensions must be positive, got " +
                                std::to_string(height) + "x" + std::to_string(width));
  }
  auto maps = torch::empty({2, height, width}, torch::kDouble);
  auto acc = maps.accessor<double, 3>();
  const auto h = static_cast<double>(height);
  for (int64_t i = 0; i < height; ++i) {
    const double y = static_cast<double>(2 * i - height) / h;
    for (int64_t j = 0; j < width; ++j) {
      acc[0][i][j] = static_cast<double>(2 * j - width) / h;
      acc[1][i][j] = y;
    }
  }
  return maps.to(dtype);
}

torch::Tensor binarize_sketch(const torch::Tensor& edge_map, double threshold) {
  if (edge_map.numel() > 0) {
    const auto lo = edge_map.min().item<double>();
    const auto hi = edge_map.max().item<double>();
    if (!(lo >= 0.0 && hi <= 1.0)) {
      throw std::invalid_argument("binarize_sketch: edge map entries must lie in [0,1], got range [" +
                                  std::to_string(lo) + ", " + std::to_string(hi) + "]");
    }
  }
  return (edge_map > threshold).to(edge_map.scalar_type());
}

bool is_binary(const torch::Tensor& plane) {
  if (plane.numel() == 0) return true;
  return torch::logical_or(plane == 0, plane == 1).all().item<bool>();
}

std::pair<torch::Tensor, torch::Tensor> split_halves(const torch::Tensor& plane) {
  if (plane.dim() < 2) throw std::invalid_argument("split_halves: need at least a 2-d raster");
  const int64_t width = plane.size(-1);
  if (width % 2 != 0) {
    throw std::invalid_argument("split_halves: width must be even, got " + std::to_string(width));
  }
  const int64_t half = width / 2;
  return {plane.narrow(-1, 0, half).contiguous(), plane.narrow(-1, half, half).contiguous()};
}

torch::Tensor concat_halves(const torch::Tensor& left, const torch::Tensor& right) {
  return torch::cat({left, right}, -1);
}

torch::Tensor as_batch(const torch::Tensor& plane) {
  if (plane.dim() == 4) return plane;
  if (plane.dim() == 3) return plane.unsqueeze(0);
  throw std::invalid_argument("expected a [C,H,W] or [N,C,H,W] raster, got " +
                              std::to_string(plane.dim()) + " dims");
}

}  // namespace sketchout

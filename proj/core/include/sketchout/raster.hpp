#pragma once

// Raster conventions shared by the whole library.
//
//   image   : float tensor [3,H,W] or [N,3,H,W], values in [-1,1]
//   sketch  : tensor [1,H,W] or [N,1,H,W], entries exactly 0 or 1
//   position: tensor [2,H,W] (channel 0 = x map, channel 1 = y map)
//
// Width is always the last dimension.

#include <torch/torch.h>

#include <utility>

namespace sketchout {

/// Coordinate maps x(i,j) = (2j - W)/H and y(i,j) = (2i - H)/H as a
/// [2,H,W] tensor. Each value is one integer divided once by H in double
/// precision, then converted to `dtype`.
torch::Tensor make_position_channels(int64_t height, int64_t width,
                                     torch::Dtype dtype = torch::kFloat);

/// 1 where edge_map > threshold, else 0. Entries must lie in [0,1].
torch::Tensor binarize_sketch(const torch::Tensor& edge_map, double threshold = 0.6);

/// True when every entry is exactly 0 or 1.
bool is_binary(const torch::Tensor& plane);

/// Splits along the last (width) dimension; width must be even.
std::pair<torch::Tensor, torch::Tensor> split_halves(const torch::Tensor& plane);

/// Inverse of split_halves.
torch::Tensor concat_halves(const torch::Tensor& left, const torch::Tensor& right);

/// Adds a leading batch dimension to a 3-d raster; 4-d input is returned as is.
torch::Tensor as_batch(const torch::Tensor& plane);

}  // namespace sketchout

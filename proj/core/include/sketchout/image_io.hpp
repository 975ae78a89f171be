#pragma once

#include <opencv2/core.hpp>
#include <torch/torch.h>

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace sketchout {

/// 8-bit BGR or grayscale Mat -> float [C,H,W] in [-1,1] (RGB order for
/// colour input).
torch::Tensor image_from_mat(const cv::Mat& mat);

/// [3,H,W] or [1,H,W] in [-1,1] -> 8-bit Mat (BGR for colour), rounding
/// (x+1)/2*255 to the nearest integer.
cv::Mat mat_from_image(const torch::Tensor& image);

/// Grayscale 8-bit Mat -> [1,H,W] in [0,1].
torch::Tensor plane_from_gray(const cv::Mat& gray);

/// [1,H,W] in [0,1] -> 8-bit grayscale.
cv::Mat gray_from_plane(const torch::Tensor& plane);

std::vector<uint8_t> encode_png(const cv::Mat& mat);
/// Returns an empty Mat when the bytes cannot be decoded.
cv::Mat decode_image(const std::vector<uint8_t>& bytes, bool grayscale);

cv::Mat read_image(const std::filesystem::path& path, bool grayscale = false);
void write_image(const std::filesystem::path& path, const cv::Mat& mat);

std::string base64_encode(const std::vector<uint8_t>& bytes);
/// Throws std::invalid_argument on malformed input.
std::vector<uint8_t> base64_decode(std::string_view text);

}  // namespace sketchout

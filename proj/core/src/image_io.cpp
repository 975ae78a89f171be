#include "sketchout/image_io.hpp"

#include <openssl/evp.h>

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>
#include <stdexcept>

namespace sketchout {

torch::Tensor image_from_mat(const cv::Mat& mat) {
  if (mat.empty() || mat.depth() != CV_8U) {
    throw std::invalid_argument("image_from_mat: expected a non-empty 8-bit image");
  }
  cv::Mat rgb;
  switch (mat.channels()) {
    case 1:
      cv::cvtColor(mat, rgb, cv::COLOR_GRAY2RGB);
      break;
    case 3:
      cv::cvtColor(mat, rgb, cv::COLOR_BGR2RGB);
      break;
    case 4:
      cv::cvtColor(mat, rgb, cv::COLOR_BGRA2RGB);
      break;
    default:
      throw std::invalid_argument("image_from_mat: unsupported channel count");
  }
  auto hwc = torch::from_blob(rgb.data, {rgb.rows, rgb.cols, 3}, torch::kUInt8).clone();
  return hwc.permute({2, 0, 1}).to(torch::kFloat).div(127.5).sub(1.0).contiguous();
}

cv::Mat mat_from_image(const torch::Tensor& image) {
  if (image.dim() != 3 || (image.size(0) != 3 && image.size(0) != 1)) {
    throw std::invalid_argument("mat_from_image: expected [3,H,W] or [1,H,W], got " +
                                c10::str(image.sizes()));
  }
  auto bytes = ((image.detach().to(torch::kFloat).clamp(-1.0, 1.0) + 1.0) * 127.5)
                   .round()
                   .to(torch::kUInt8)
                   .permute({1, 2, 0})
                   .contiguous();
  const int rows = static_cast<int>(image.size(1));
  const int cols = static_cast<int>(image.size(2));
  if (image.size(0) == 1) {
    return cv::Mat(rows, cols, CV_8UC1, bytes.data_ptr<uint8_t>()).clone();
  }
  cv::Mat rgb(rows, cols, CV_8UC3, bytes.data_ptr<uint8_t>());
  cv::Mat bgr;
  cv::cvtColor(rgb, bgr, cv::COLOR_RGB2BGR);
  return bgr;
}

torch::Tensor plane_from_gray(const cv::Mat& gray) {
  if (gray.empty() || gray.type() != CV_8UC1) {
    throw std::invalid_argument("plane_from_gray: expected an 8-bit single-channel image");
  }
  cv::Mat dense = gray.isContinuous() ? gray : gray.clone();
  return torch::from_blob(dense.data, {1, dense.rows, dense.cols}, torch::kUInt8)
      .to(torch::kFloat)
      .div(255.0);
}

cv::Mat gray_from_plane(const torch::Tensor& plane) {
  if (plane.dim() != 3 || plane.size(0) != 1) {
    throw std::invalid_argument("gray_from_plane: expected [1,H,W]");
  }
  auto bytes = (plane.detach().to(torch::kFloat).clamp(0.0, 1.0) * 255.0)
                   .round()
                   .to(torch::kUInt8)
                   .squeeze(0)
                   .contiguous();
  return cv::Mat(static_cast<int>(plane.size(1)), static_cast<int>(plane.size(2)), CV_8UC1,
                 bytes.data_ptr<uint8_t>())
      .clone();
}

std::vector<uint8_t> encode_png(const cv::Mat& mat) {
  std::vector<uint8_t> out;
  if (!cv::imencode(".png", mat, out)) throw std::runtime_error("PNG encoding failed");
  return out;
}

cv::Mat decode_image(const std::vector<uint8_t>& bytes, bool grayscale) {
  if (bytes.empty()) return {};
  try {
    return cv::imdecode(bytes, grayscale ? cv::IMREAD_GRAYSCALE : cv::IMREAD_COLOR);
  } catch (const cv::Exception&) {
    return {};
  }
}

cv::Mat read_image(const std::filesystem::path& path, bool grayscale) {
  try {
    return cv::imread(path.string(), grayscale ? cv::IMREAD_GRAYSCALE : cv::IMREAD_COLOR);
  } catch (const cv::Exception&) {
    return {};
  }
}

void write_image(const std::filesystem::path& path, const cv::Mat& mat) {
  if (!cv::imwrite(path.string(), mat)) {
    throw std::runtime_error("cannot write image " + path.string());
  }
}

std::string base64_encode(const std::vector<uint8_t>& bytes) {
  std::string out(4 * ((bytes.size() + 2) / 3), '\0');
  const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()), bytes.data(),
                                static_cast<int>(bytes.size()));
  out.resize(static_cast<size_t>(n));
  return out;
}

std::vector<uint8_t> base64_decode(std::string_view text) {
  std::string clean;
  clean.reserve(text.size());
  for (char c : text) {
    if (c != '\n' && c != '\r' && c != ' ') clean.push_back(c);
  }
  if (clean.size() % 4 != 0) throw std::invalid_argument("base64: length is not a multiple of 4");
  std::vector<uint8_t> out(3 * clean.size() / 4);
  const int n = EVP_DecodeBlock(out.data(), reinterpret_cast<const unsigned char*>(clean.data()),
                                static_cast<int>(clean.size()));
  if (n < 0) throw std::invalid_argument("base64: malformed payload");
  size_t padding = 0;
  if (!clean.empty() && clean.back() == '=') ++padding;
  if (clean.size() > 1 && clean[clean.size() - 2] == '=') ++padding;
  out.resize(static_cast<size_t>(n) - padding);
  return out;
}

}  // namespace sketchout

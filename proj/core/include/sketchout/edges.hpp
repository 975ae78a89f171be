#pragma once

#include <torch/script.h>
#include <torch/torch.h>

#include <filesystem>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

namespace sketchout {

enum class EdgeDetectorKind { kSobelSurrogate, kExternalPretrained };

/// Frozen, differentiable edge operator.
///
/// detect() maps images [N,3,H,W] in [-1,1] to soft edge maps [N,1,H,W] in
/// [0,1]. Gradients flow to the image only; implementations never expose
/// trainable parameters.
class EdgeDetector {
 public:
  virtual ~EdgeDetector() = default;

  virtual torch::Tensor detect(const torch::Tensor& images) const = 0;
  virtual EdgeDetectorKind kind() const = 0;
  /// Snapshot of the frozen parameter set, for integrity checks.
  virtual std::vector<torch::Tensor> parameters() const = 0;
  virtual std::string name() const = 0;
};

/// Sobel gradient magnitude on luminance, normalised by its maximum
/// (4*sqrt(2)) and passed through the ramp 1 - exp(-(m/ramp)^2).
///
/// Borders use replicate padding so a constant image yields exactly zero.
class SobelEdgeDetector final : public EdgeDetector {
 public:
  static constexpr double kDefaultRamp = 0.15;

  explicit SobelEdgeDetector(double ramp = kDefaultRamp);

  torch::Tensor detect(const torch::Tensor& images) const override;
  EdgeDetectorKind kind() const override { return EdgeDetectorKind::kSobelSurrogate; }
  std::vector<torch::Tensor> parameters() const override;
  std::string name() const override { return "sobel"; }

  double ramp() const { return ramp_; }

 private:
  double ramp_;
  torch::Tensor luma_;     // [1,3,1,1]
  torch::Tensor kernels_;  // [2,1,3,3]: d/dx then d/dy
};

/// A TorchScript module loaded from disk (e.g. an exported HED network).
/// Its forward must accept [N,3,H,W] in [-1,1] and return [N,1,H,W]; the
/// output is clamped into [0,1].
class ScriptedEdgeDetector final : public EdgeDetector {
 public:
  explicit ScriptedEdgeDetector(const std::filesystem::path& path);

  torch::Tensor detect(const torch::Tensor& images) const override;
  EdgeDetectorKind kind() const override { return EdgeDetectorKind::kExternalPretrained; }
  std::vector<torch::Tensor> parameters() const override;
  std::string name() const override { return "script:" + path_.string(); }

 private:
  std::filesystem::path path_;
  mutable torch::jit::Module module_;
};

/// "sobel" (default) or "script:<path>".
std::shared_ptr<const EdgeDetector> make_edge_detector(const std::string& name);

/// Free-function form of EdgeDetector::detect accepting [3,H,W] or [N,3,H,W].
torch::Tensor detect_edges(const torch::Tensor& image, const EdgeDetector& detector);

/// binarize_sketch(detect_edges(image), 0.6), without gradient tracking.
torch::Tensor extract_sketch(const torch::Tensor& image, const EdgeDetector& detector,
                             double threshold = 0.6);

}  // namespace sketchout

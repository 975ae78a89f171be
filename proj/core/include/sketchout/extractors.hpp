#pragma once

#include <torch/script.h>
#include <torch/torch.h>

#include <filesystem>
#include <memory>
#include <string>

namespace sketchout {

/// Maps images [N,3,H,W] in [-1,1] to feature rows [N,d] (double).
class FeatureExtractor {
 public:
  virtual ~FeatureExtractor() = default;
  virtual torch::Tensor extract(const torch::Tensor& images) const = 0;
  virtual std::string name() const = 0;
};

/// Fixed-seed random 3x3 filter bank, ReLU, 4x4 average pooling grid, then a
/// random projection to `dim` with tanh. Size-agnostic and deterministic.
class RandomProjectionExtractor : public FeatureExtractor {
 public:
  static constexpr int64_t kDefaultDim = 64;
  static constexpr uint64_t kDefaultSeed = 20211;

  explicit RandomProjectionExtractor(int64_t dim = kDefaultDim, uint64_t seed = kDefaultSeed);
  torch::Tensor extract(const torch::Tensor& images) const override;
  std::string name() const override { return "random-projection"; }
  int64_t dim() const { return dim_; }

 private:
  int64_t dim_;
  torch::Tensor filters_;     // [16,3,3,3]
  torch::Tensor projection_;  // [16*4*4, dim]
};

/// TorchScript feature network (e.g. an exported 2048-d pool layer).
/// Output is flattened per sample.
class ScriptedExtractor : public FeatureExtractor {
 public:
  explicit ScriptedExtractor(const std::filesystem::path& path);
  torch::Tensor extract(const torch::Tensor& images) const override;
  std::string name() const override { return "script:" + path_.string(); }

 private:
  std::filesystem::path path_;
  mutable torch::jit::Module module_;
};

/// "random-projection" (default) or "script:<path>".
std::shared_ptr<const FeatureExtractor> make_feature_extractor(const std::string& name);

/// Maps images [N,3,H,W] to class posteriors [N,K] (double, rows sum to 1).
class Classifier {
 public:
  virtual ~Classifier() = default;
  virtual torch::Tensor probabilities(const torch::Tensor& images) const = 0;
  virtual int64_t classes() const = 0;
  virtual std::string name() const = 0;
};

/// Softmax regression over random-projection features, fit at construction
/// on freshly synthesized scenery labelled by layout class.
class SceneryLayoutClassifier : public Classifier {
 public:
  SceneryLayoutClassifier(int64_t height, int64_t width, uint64_t seed = 7,
                          int64_t training_scenes = 240);
  torch::Tensor probabilities(const torch::Tensor& images) const override;
  int64_t classes() const override;
  std::string name() const override { return "scenery-layout"; }

  /// Fraction of `images` whose argmax matches `labels`.
  double accuracy(const torch::Tensor& images, const torch::Tensor& labels) const;

 private:
  RandomProjectionExtractor features_;
  torch::Tensor weight_;  // [d,K]
  torch::Tensor bias_;    // [K]
  torch::Tensor mean_, scale_;
};

/// TorchScript classifier producing logits [N,K].
class ScriptedClassifier : public Classifier {
 public:
  ScriptedClassifier(const std::filesystem::path& path, int64_t classes);
  torch::Tensor probabilities(const torch::Tensor& images) const override;
  int64_t classes() const override { return classes_; }
  std::string name() const override { return "script:" + path_.string(); }

 private:
  std::filesystem::path path_;
  int64_t classes_;
  mutable torch::jit::Module module_;
};

/// "scenery-layout" (default, fit for height x width) or "script:<path>:<K>".
std::shared_ptr<const Classifier> make_classifier(const std::string& name, int64_t height,
                                                  int64_t width);

}  // namespace sketchout

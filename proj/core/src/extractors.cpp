#include "sketchout/extractors.hpp"

#include <ATen/CPUGeneratorImpl.h>

#include <cmath>
#include <stdexcept>

#include "sketchout/rng.hpp"
#include "sketchout/scenery.hpp"

namespace sketchout {
namespace {

constexpr int64_t kFilters = 16;
constexpr int64_t kGrid = 4;

void check_images(const torch::Tensor& images, const char* who) {
  if (images.dim() != 4 || images.size(1) != 3) {
    throw std::invalid_argument(std::string(who) + " expects [N,3,H,W] images, got " +
                                c10::str(images.sizes()));
  }
}

torch::jit::Module load_script(const std::filesystem::path& path) {
  auto module = torch::jit::load(path.string());
  module.eval();
  for (auto p : module.parameters()) p.set_requires_grad(false);
  return module;
}

std::pair<std::string, std::string> split_prefix(const std::string& name) {
  const auto colon = name.find(':');
  if (colon == std::string::npos) return {name, ""};
  return {name.substr(0, colon), name.substr(colon + 1)};
}

}  // namespace

RandomProjectionExtractor::RandomProjectionExtractor(int64_t dim, uint64_t seed) : dim_(dim) {
  if (dim <= 0) throw std::invalid_argument("feature dimension must be positive");
  auto gen = at::detail::createCPUGenerator(seed);
  const auto opts = torch::TensorOptions().dtype(torch::kDouble);
  filters_ = torch::randn({kFilters, 3, 3, 3}, gen, opts) * std::sqrt(2.0 / 27.0);
  const int64_t pooled = kFilters * kGrid * kGrid;
  projection_ = torch::randn({pooled, dim}, gen, opts) * std::sqrt(4.0 / pooled);
}

torch::Tensor RandomProjectionExtractor::extract(const torch::Tensor& images) const {
  check_images(images, "feature extractor");
  torch::NoGradGuard no_grad;
  auto x = images.to(torch::kDouble);
  auto y = torch::relu(torch::conv2d(x, filters_, {}, 1, 1));
  auto pooled = torch::adaptive_avg_pool2d(y, {kGrid, kGrid}).flatten(1);
  return torch::tanh(pooled.matmul(projection_));
}

ScriptedExtractor::ScriptedExtractor(const std::filesystem::path& path)
    : path_(path), module_(load_script(path)) {}

torch::Tensor ScriptedExtractor::extract(const torch::Tensor& images) const {
  check_images(images, "feature extractor");
  torch::NoGradGuard no_grad;
  auto out = module_.forward({images}).toTensor();
  return out.reshape({images.size(0), -1}).to(torch::kDouble);
}

std::shared_ptr<const FeatureExtractor> make_feature_extractor(const std::string& name) {
  if (name.empty() || name == "random-projection") {
    return std::make_shared<RandomProjectionExtractor>();
  }
  auto [kind, rest] = split_prefix(name);
  if (kind == "script" && !rest.empty()) return std::make_shared<ScriptedExtractor>(rest);
  throw std::invalid_argument("unknown feature extractor '" + name + "'");
}

// ---------------------------------------------------------------------------

SceneryLayoutClassifier::SceneryLayoutClassifier(int64_t height, int64_t width, uint64_t seed,
                                                 int64_t training_scenes) {
  if (training_scenes < SceneryLayout::kClasses) {
    throw std::invalid_argument("classifier needs at least one scene per class");
  }
  std::vector<torch::Tensor> images;
  std::vector<int64_t> labels;
  for (int64_t i = 0; i < training_scenes; ++i) {
    auto rng = make_rng(seed, {static_cast<uint64_t>(i)});
    auto scene = synth_scenery(rng, height, width);
    images.push_back(scene.image);
    labels.push_back(scene.layout.label());
  }
  auto x = features_.extract(torch::stack(images));
  mean_ = x.mean(0);
  scale_ = x.std(0).clamp_min(1e-6);
  x = (x - mean_) / scale_;
  auto y = torch::tensor(labels, torch::kLong);

  const auto opts = torch::TensorOptions().dtype(torch::kDouble);
  weight_ = torch::zeros({x.size(1), SceneryLayout::kClasses}, opts).requires_grad_(true);
  bias_ = torch::zeros({SceneryLayout::kClasses}, opts).requires_grad_(true);
  torch::optim::Adam opt({weight_, bias_}, torch::optim::AdamOptions(0.05));
  for (int iter = 0; iter < 400; ++iter) {
    opt.zero_grad();
    auto loss = torch::nn::functional::cross_entropy(x.matmul(weight_) + bias_, y) +
                1e-3 * weight_.pow(2).sum();
    loss.backward();
    opt.step();
  }
  weight_ = weight_.detach();
  bias_ = bias_.detach();
}

int64_t SceneryLayoutClassifier::classes() const { return SceneryLayout::kClasses; }

torch::Tensor SceneryLayoutClassifier::probabilities(const torch::Tensor& images) const {
  torch::NoGradGuard no_grad;
  auto x = (features_.extract(images) - mean_) / scale_;
  return torch::softmax(x.matmul(weight_) + bias_, 1);
}

double SceneryLayoutClassifier::accuracy(const torch::Tensor& images,
                                         const torch::Tensor& labels) const {
  auto predicted = probabilities(images).argmax(1);
  return predicted.eq(labels.to(torch::kLong)).to(torch::kDouble).mean().item<double>();
}

ScriptedClassifier::ScriptedClassifier(const std::filesystem::path& path, int64_t classes)
    : path_(path), classes_(classes), module_(load_script(path)) {
  if (classes < 1) throw std::invalid_argument("classifier needs at least one class");
}

torch::Tensor ScriptedClassifier::probabilities(const torch::Tensor& images) const {
  check_images(images, "classifier");
  torch::NoGradGuard no_grad;
  auto logits = module_.forward({images}).toTensor().to(torch::kDouble);
  if (logits.dim() != 2 || logits.size(0) != images.size(0) || logits.size(1) != classes_) {
    throw std::runtime_error("scripted classifier returned shape " + c10::str(logits.sizes()));
  }
  return torch::softmax(logits, 1);
}

std::shared_ptr<const Classifier> make_classifier(const std::string& name, int64_t height,
                                                  int64_t width) {
  if (name.empty() || name == "scenery-layout") {
    return std::make_shared<SceneryLayoutClassifier>(height, width);
  }
  auto [kind, rest] = split_prefix(name);
  const auto colon = rest.rfind(':');
  if (kind == "script" && colon != std::string::npos && colon > 0) {
    return std::make_shared<ScriptedClassifier>(rest.substr(0, colon),
                                                std::stoll(rest.substr(colon + 1)));
  }
  throw std::invalid_argument("unknown classifier '" + name + "' (use scenery-layout or "
                              "script:<path>:<classes>)");
}

}  // namespace sketchout

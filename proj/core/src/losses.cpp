#include "sketchout/losses.hpp"

#include <stdexcept>
#include <string>

#include "sketchout/raster.hpp"

namespace sketchout {
namespace {

void require_same_shape(const torch::Tensor& a, const torch::Tensor& b, const char* where) {
  if (a.sizes() != b.sizes()) {
    throw std::invalid_argument(std::string(where) + ": shape mismatch " + c10::str(a.sizes()) +
                                " vs " + c10::str(b.sizes()));
  }
}

}  // namespace

void LossWeights::validate() const {
  if (lambda_r < 0 || lambda_a < 0 || lambda_s < 0 || lambda_w < 0) {
    throw std::invalid_argument("loss weights must be nonnegative");
  }
  if (alpha < 0 || alpha > 1) throw std::invalid_argument("alpha must lie in [0,1]");
}

torch::Tensor build_loss_mask(int64_t height, int64_t full_width, double floor,
                              torch::Dtype dtype) {
  if (!(floor > 0.0 && floor <= 1.0)) {
    throw std::invalid_argument("build_loss_mask: floor must be in (0,1], got " +
                                std::to_string(floor));
  }
  if (height < 1 || full_width < 4 || full_width % 2 != 0) {
    throw std::invalid_argument("build_loss_mask: need height >= 1 and an even width >= 4");
  }
  const int64_t half = full_width / 2;
  auto row = torch::ones({full_width}, torch::kDouble);
  auto acc = row.accessor<double, 1>();
  for (int64_t j = half; j < full_width; ++j) {
    const double t = static_cast<double>(j - half) / static_cast<double>(half - 1);
    acc[j] = 1.0 - (1.0 - floor) * t;
  }
  return row.unsqueeze(0).expand({height, full_width}).contiguous().to(dtype);
}

torch::Tensor masked_l1(const torch::Tensor& image, const torch::Tensor& reconstruction,
                        const torch::Tensor& mask) {
  require_same_shape(image, reconstruction, "masked_l1");
  if (mask.size(-1) != image.size(-1) || mask.size(-2) != image.size(-2)) {
    throw std::invalid_argument("masked_l1: mask " + c10::str(mask.sizes()) +
                                " does not match image " + c10::str(image.sizes()));
  }
  return (mask * (image - reconstruction).abs()).mean();
}

torch::Tensor gradient_penalty(const CriticFn& critic, const torch::Tensor& real,
                               const torch::Tensor& fake, const torch::Tensor& sketch,
                               double lambda_w, const torch::Tensor& eps) {
  require_same_shape(real, fake, "gradient_penalty");
  if (eps.dim() != 1 || eps.size(0) != real.size(0)) {
    throw std::invalid_argument("gradient_penalty: eps must hold one value per sample");
  }
  std::vector<int64_t> bshape(static_cast<size_t>(real.dim()), 1);
  bshape[0] = real.size(0);
  const auto e = eps.to(real.options()).view(bshape);
  auto interp = (e * real.detach() + (1.0 - e) * fake.detach()).requires_grad_(true);
  auto scores = critic(interp, sketch);
  if (!scores.requires_grad()) {
    throw std::logic_error("gradient_penalty: critic output is not differentiable in its input");
  }
  auto grads = torch::autograd::grad({scores.sum()}, {interp}, /*grad_outputs=*/{},
                                     /*retain_graph=*/true, /*create_graph=*/true)[0];
  auto norms = grads.flatten(1).norm(2, 1);
  return lambda_w * (norms - 1.0).pow(2).mean();
}

torch::Tensor critic_loss(const torch::Tensor& d_real, const torch::Tensor& d_fake,
                          const torch::Tensor& gp) {
  return d_fake.mean() - d_real.mean() + gp;
}

torch::Tensor generator_adv_loss(const torch::Tensor& dg_fake, const torch::Tensor& dl_fake,
                                 double alpha) {
  if (alpha < 0 || alpha > 1) throw std::invalid_argument("alpha must lie in [0,1]");
  return alpha * (-dg_fake.mean()) + (1.0 - alpha) * (-dl_fake.mean());
}

torch::Tensor sketch_alignment_loss(const torch::Tensor& reconstruction,
                                    const torch::Tensor& sketch, const EdgeDetector& detector) {
  auto edges = detector.detect(as_batch(reconstruction));
  auto target = as_batch(sketch).to(edges.scalar_type());
  require_same_shape(edges, target, "sketch_alignment_loss");
  return (edges - target).pow(2).mean();
}

torch::Tensor total_generator_loss(const torch::Tensor& l1, const torch::Tensor& ls,
                                   const torch::Tensor& lg_adv, const LossWeights& w) {
  return w.lambda_r * l1 + w.lambda_s * ls + w.lambda_a * lg_adv;
}

double total_generator_loss(double l1, double ls, double lg_adv, const LossWeights& w) {
  return w.lambda_r * l1 + w.lambda_s * ls + w.lambda_a * lg_adv;
}

}  // namespace sketchout

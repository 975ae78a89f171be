#pragma once

#include <torch/torch.h>

#include <functional>

#include "sketchout/edges.hpp"

namespace sketchout {

struct LossWeights {
  double lambda_r = 0.998;  // masked L1 reconstruction
  double lambda_a = 0.002;  // blended adversarial term
  double lambda_s = 1.0;    // sketch alignment
  double alpha = 0.9;       // global vs local critic blend
  double lambda_w = 10.0;   // gradient penalty

  /// Throws std::invalid_argument on negative weights or alpha outside [0,1].
  void validate() const;
};

/// [H, W_full] weights: 1 on the left half, then a linear ramp from 1 at the
/// seam column down to `floor` at the last column. floor must be in (0,1].
torch::Tensor build_loss_mask(int64_t height, int64_t full_width, double floor,
                              torch::Dtype dtype = torch::kFloat);

/// mean(M * |I - I_hat|) over every pixel and channel. M broadcasts over
/// batch and channels.
torch::Tensor masked_l1(const torch::Tensor& image, const torch::Tensor& reconstruction,
                        const torch::Tensor& mask);

/// critic(image, sketch) -> [N] scores
using CriticFn = std::function<torch::Tensor(const torch::Tensor&, const torch::Tensor&)>;

/// lambda_w * mean_n (||grad_x critic(x_n, s_n)||_2 - 1)^2 at the interpolate
/// x = eps*real + (1-eps)*fake, with eps given per sample ([N]). The result
/// stays differentiable with respect to the critic's parameters.
torch::Tensor gradient_penalty(const CriticFn& critic, const torch::Tensor& real,
                               const torch::Tensor& fake, const torch::Tensor& sketch,
                               double lambda_w, const torch::Tensor& eps);

/// mean(d_fake) - mean(d_real) + gp for one critic.
torch::Tensor critic_loss(const torch::Tensor& d_real, const torch::Tensor& d_fake,
                          const torch::Tensor& gp);

/// alpha * (-mean dg_fake) + (1 - alpha) * (-mean dl_fake)
torch::Tensor generator_adv_loss(const torch::Tensor& dg_fake, const torch::Tensor& dl_fake,
                                 double alpha);

/// mean((detect(I_hat) - S)^2). The detector stays frozen; gradients reach
/// I_hat only.
torch::Tensor sketch_alignment_loss(const torch::Tensor& reconstruction,
                                    const torch::Tensor& sketch, const EdgeDetector& detector);

/// lambda_r * l1 + lambda_s * ls + lambda_a * lg_adv (lg_adv already blended).
torch::Tensor total_generator_loss(const torch::Tensor& l1, const torch::Tensor& ls,
                                   const torch::Tensor& lg_adv, const LossWeights& w);
double total_generator_loss(double l1, double ls, double lg_adv, const LossWeights& w);

}  // namespace sketchout

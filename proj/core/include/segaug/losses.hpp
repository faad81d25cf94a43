#pragma once

#include <torch/torch.h>

#include <array>
#include <string>
#include <vector>

#include "segaug/networks.hpp"

namespace segaug {

inline constexpr double kLogClamp = 1e-7;

struct LossWeights {
  double lambda1 = 10.0;  // boundary term
  double lambda2 = 10.0;  // discriminator feature matching term
};

void validate(const LossWeights& w);

// Scalar loss plus its per-discriminator contributions.
struct MemberLoss {
  torch::Tensor total;
  std::vector<torch::Tensor> per_member;
};

/// -sum_k [ mean log D_k(real) + mean log(1 - D_k(fake)) ], predictions clamped
/// to [eps, 1 - eps].
MemberLoss adv_loss_discriminator(const std::vector<torch::Tensor>& real_preds,
                                  const std::vector<torch::Tensor>& fake_preds);

/// Non-saturating generator term: -sum_k mean log D_k(fake).
MemberLoss adv_loss_generator(const std::vector<torch::Tensor>& fake_preds);

/// Mean over batch and pixels of (P(boundary) - target)^2, where P is channel 1
/// of the N x 2 x H x W boundary head and target is N x H x W in {0,1}.
torch::Tensor boundary_loss(const torch::Tensor& boundary_prob, const torch::Tensor& target);

/// sum_k sum_i mean((real_k,i - fake_k,i)^2). Real features are detached.
MemberLoss perceptual_loss(const std::vector<std::vector<torch::Tensor>>& real_feats,
                           const std::vector<std::vector<torch::Tensor>>& fake_feats);

// g_adv + lambda1 * l_b + lambda2 * l_p
torch::Tensor total_generator_objective(const torch::Tensor& g_adv, const torch::Tensor& l_b,
                                        const torch::Tensor& l_p, const LossWeights& w);
double total_generator_objective(double g_adv, double l_b, double l_p, const LossWeights& w);

// Helpers to pull the pieces out of discriminator outputs.
std::vector<torch::Tensor> predictions(const std::vector<DiscriminatorOutput>& outs);
std::vector<std::vector<torch::Tensor>> features(const std::vector<DiscriminatorOutput>& outs);

struct LossReport {
  std::int64_t iteration = 0;
  double d_loss = 0, g_adv = 0, l_b = 0, l_p = 0, total = 0;
  std::array<double, kNumDiscriminators> g_adv_member{};
  std::array<double, kNumDiscriminators> l_p_member{};
};

// CSV header and row for the GAN training log; the first six columns are
// iteration,d_loss,g_adv,l_b,l_p,total followed by the per-member breakdown.
std::string loss_csv_header();
std::string to_csv_row(const LossReport& r);
LossReport parse_loss_csv_row(const std::string& line);

}  // namespace segaug

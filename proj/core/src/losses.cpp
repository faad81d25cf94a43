#include "segaug/losses.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace segaug {

void validate(const LossWeights& w) {
  if (!(w.lambda1 >= 0.0) || !std::isfinite(w.lambda1) || !(w.lambda2 >= 0.0) || !std::isfinite(w.lambda2)) {
    throw std::invalid_argument("loss weights must be finite and non-negative");
  }
}

namespace {

torch::Tensor clamped_log(const torch::Tensor& p) { return torch::log(p.clamp(kLogClamp, 1.0 - kLogClamp)); }

void check_members(const std::vector<torch::Tensor>& preds, const char* what) {
  if (preds.empty()) throw std::invalid_argument(std::string(what) + ": no discriminator predictions");
}

}  // namespace

MemberLoss adv_loss_discriminator(const std::vector<torch::Tensor>& real_preds,
                                  const std::vector<torch::Tensor>& fake_preds) {
  check_members(real_preds, "adv_loss_discriminator");
  if (real_preds.size() != fake_preds.size()) {
    throw std::invalid_argument("adv_loss_discriminator: member count mismatch");
  }
  MemberLoss loss;
  for (std::size_t k = 0; k < real_preds.size(); ++k) {
    auto term = -(clamped_log(real_preds[k]).mean() + clamped_log(1.0 - fake_preds[k]).mean());
    loss.per_member.push_back(term);
  }
  loss.total = torch::stack(loss.per_member).sum();
  return loss;
}

MemberLoss adv_loss_generator(const std::vector<torch::Tensor>& fake_preds) {
  check_members(fake_preds, "adv_loss_generator");
  MemberLoss loss;
  for (const auto& p : fake_preds) loss.per_member.push_back(-clamped_log(p).mean());
  loss.total = torch::stack(loss.per_member).sum();
  return loss;
}

torch::Tensor boundary_loss(const torch::Tensor& boundary_prob, const torch::Tensor& target) {
  TORCH_CHECK(boundary_prob.dim() == 4 && boundary_prob.size(1) == kBoundaryChannels,
              "boundary_loss: expected N x 2 x H x W prediction, got ", boundary_prob.sizes());
  auto p = boundary_prob.select(1, 1);
  TORCH_CHECK(p.sizes() == target.sizes(), "boundary_loss: prediction ", p.sizes(), " vs target ", target.sizes());
  return (p - target).pow(2).mean();
}

MemberLoss perceptual_loss(const std::vector<std::vector<torch::Tensor>>& real_feats,
                           const std::vector<std::vector<torch::Tensor>>& fake_feats) {
  if (real_feats.size() != fake_feats.size() || real_feats.empty()) {
    throw std::invalid_argument("perceptual_loss: member count mismatch");
  }
  MemberLoss loss;
  for (std::size_t k = 0; k < real_feats.size(); ++k) {
    if (real_feats[k].size() != fake_feats[k].size()) {
      throw std::invalid_argument("perceptual_loss: layer count mismatch for member " + std::to_string(k));
    }
    std::vector<torch::Tensor> layers;
    for (std::size_t i = 0; i < real_feats[k].size(); ++i) {
      TORCH_CHECK(real_feats[k][i].sizes() == fake_feats[k][i].sizes(), "perceptual_loss: member ", k, " layer ",
                  i, " shapes ", real_feats[k][i].sizes(), " vs ", fake_feats[k][i].sizes());
      layers.push_back((fake_feats[k][i] - real_feats[k][i].detach()).pow(2).mean());
    }
    loss.per_member.push_back(torch::stack(layers).sum());
  }
  loss.total = torch::stack(loss.per_member).sum();
  return loss;
}

torch::Tensor total_generator_objective(const torch::Tensor& g_adv, const torch::Tensor& l_b,
                                        const torch::Tensor& l_p, const LossWeights& w) {
  return g_adv + w.lambda1 * l_b + w.lambda2 * l_p;
}

double total_generator_objective(double g_adv, double l_b, double l_p, const LossWeights& w) {
  return g_adv + w.lambda1 * l_b + w.lambda2 * l_p;
}

std::vector<torch::Tensor> predictions(const std::vector<DiscriminatorOutput>& outs) {
  std::vector<torch::Tensor> p;
  for (const auto& o : outs) p.push_back(o.prediction);
  return p;
}

std::vector<std::vector<torch::Tensor>> features(const std::vector<DiscriminatorOutput>& outs) {
  std::vector<std::vector<torch::Tensor>> f;
  for (const auto& o : outs) f.push_back(o.features);
  return f;
}

std::string loss_csv_header() {
  std::string h = "iteration,d_loss,g_adv,l_b,l_p,total";
  for (int k = 0; k < kNumDiscriminators; ++k) h += ",g_adv_" + std::to_string(k);
  for (int k = 0; k < kNumDiscriminators; ++k) h += ",l_p_" + std::to_string(k);
  return h;
}

std::string to_csv_row(const LossReport& r) {
  std::string row = std::to_string(r.iteration);
  char buf[32];
  auto add = [&](double v) {
    std::snprintf(buf, sizeof buf, ",%.9g", v);
    row += buf;
  };
  for (double v : {r.d_loss, r.g_adv, r.l_b, r.l_p, r.total}) add(v);
  for (double v : r.g_adv_member) add(v);
  for (double v : r.l_p_member) add(v);
  return row;
}

LossReport parse_loss_csv_row(const std::string& line) {
  std::istringstream in(line);
  std::vector<std::string> cells;
  for (std::string cell; std::getline(in, cell, ',');) cells.push_back(cell);
  if (cells.size() != 6 + 2 * kNumDiscriminators) {
    throw std::invalid_argument("loss log: expected " + std::to_string(6 + 2 * kNumDiscriminators) +
                                " columns, got " + std::to_string(cells.size()));
  }
  LossReport r;
  r.iteration = std::stoll(cells[0]);
  r.d_loss = std::stod(cells[1]);
  r.g_adv = std::stod(cells[2]);
  r.l_b = std::stod(cells[3]);
  r.l_p = std::stod(cells[4]);
  r.total = std::stod(cells[5]);
  for (int k = 0; k < kNumDiscriminators; ++k) {
    r.g_adv_member[k] = std::stod(cells[6 + k]);
    r.l_p_member[k] = std::stod(cells[6 + kNumDiscriminators + k]);
  }
  return r;
}

}  // namespace segaug

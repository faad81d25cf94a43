#include <doctest.h>

#include <cmath>
#include <random>

#include "segaug/losses.hpp"

using namespace segaug;

namespace {

std::vector<torch::Tensor> filled(double v, int members = 4) {
  std::vector<torch::Tensor> out;
  for (int k = 0; k < members; ++k) out.push_back(torch::full({2, 1, 4 >> std::min(k, 2), 4 >> std::min(k, 2)}, v));
  return out;
}

std::vector<torch::Tensor> random_preds(std::uint64_t seed) {
  torch::manual_seed(static_cast<std::int64_t>(seed));
  std::vector<torch::Tensor> out;
  for (int k = 0; k < 4; ++k) out.push_back(torch::rand({3, 1, 5 - k, 5 - k}) * 0.98 + 0.01);
  return out;
}

// Element-by-element mean of log, computed in double without torch reductions.
double mean_log(const torch::Tensor& t, bool complement) {
  auto c = t.contiguous();
  const float* p = c.data_ptr<float>();
  double s = 0;
  for (std::int64_t i = 0; i < c.numel(); ++i) s += std::log(complement ? 1.0 - p[i] : static_cast<double>(p[i]));
  return s / static_cast<double>(c.numel());
}

}  // namespace

TEST_CASE("discriminator loss at the symmetric point") {
  const auto loss = adv_loss_discriminator(filled(0.5), filled(0.5));
  CHECK(loss.total.item<double>() == doctest::Approx(5.5452).epsilon(1e-4 / 5.5452));
  for (const auto& m : loss.per_member) CHECK(m.item<double>() == doctest::Approx(1.3863).epsilon(1e-4 / 1.3863));
}

TEST_CASE("discriminator loss vanishes for a perfect discriminator") {
  const auto loss = adv_loss_discriminator(filled(1.0), filled(0.0));
  CHECK(loss.total.item<double>() >= 0.0);
  CHECK(loss.total.item<double>() < 1e-5);
}

TEST_CASE("discriminator loss equals the direct formula") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto real = random_preds(seed), fake = random_preds(seed + 100);
    double expect = 0;
    for (int k = 0; k < 4; ++k) expect += -(mean_log(real[k], false) + mean_log(fake[k], true));
    CHECK(adv_loss_discriminator(real, fake).total.item<double>() == doctest::Approx(expect).epsilon(1e-5));
  }
}

TEST_CASE("generator adversarial loss") {
  CHECK(adv_loss_generator(filled(0.5)).total.item<double>() == doctest::Approx(2.7726).epsilon(1e-4 / 2.7726));
  const auto sat = adv_loss_generator(filled(1.0)).total.item<double>();
  CHECK(sat >= 0.0);
  CHECK(sat < 1e-5);
  const auto fake = random_preds(3);
  double expect = 0;
  for (int k = 0; k < 4; ++k) expect -= mean_log(fake[k], false);
  CHECK(adv_loss_generator(fake).total.item<double>() == doctest::Approx(expect).epsilon(1e-5));
}

TEST_CASE("clamped logs keep saturated predictions finite") {
  const auto loss = adv_loss_discriminator(filled(0.0), filled(1.0));
  CHECK(std::isfinite(loss.total.item<double>()));
  CHECK(loss.total.item<double>() == doctest::Approx(-8 * std::log(1e-7)).epsilon(1e-3));
}

TEST_CASE("boundary loss hand cases") {
  auto prob = [](std::vector<float> p1) {
    const auto one = torch::tensor(p1).view({1, 1, 1, static_cast<std::int64_t>(p1.size())});
    return torch::cat({1 - one, one}, 1);
  };
  const auto target = torch::tensor({1.0f, 0.0f}).view({1, 1, 2});
  CHECK(boundary_loss(prob({1.0f, 0.0f}), target).item<double>() == 0.0);
  CHECK(boundary_loss(prob({0.5f, 0.0f}), target).item<double>() == doctest::Approx(0.125).epsilon(1e-7 / 0.125));
  const auto zeros = torch::zeros({1, 1, 2});
  CHECK(boundary_loss(prob({1.0f, 1.0f}), zeros).item<double>() == 1.0);
}

TEST_CASE("perceptual loss") {
  torch::manual_seed(4);
  std::vector<std::vector<torch::Tensor>> a(4), b(4);
  for (int k = 0; k < 4; ++k) {
    for (int i = 0; i < 4; ++i) {
      a[k].push_back(torch::randn({2, 3 + i, 4, 4}));
      b[k].push_back(torch::randn({2, 3 + i, 4, 4}));
    }
  }
  CHECK(perceptual_loss(a, a).total.item<double>() == 0.0);

  // One layer, difference of ones: (1/N) * N = 1.
  std::vector<std::vector<torch::Tensor>> r1 = {{torch::zeros({1, 5, 3, 3})}}, f1 = {{torch::ones({1, 5, 3, 3})}};
  CHECK(perceptual_loss(r1, f1).total.item<double>() == doctest::Approx(1.0).epsilon(1e-6));

  double expect = 0;
  for (int k = 0; k < 4; ++k) {
    for (int i = 0; i < 4; ++i) {
      auto d = (a[k][i] - b[k][i]).contiguous();
      const float* p = d.data_ptr<float>();
      double s = 0;
      for (std::int64_t j = 0; j < d.numel(); ++j) s += static_cast<double>(p[j]) * p[j];
      expect += s / static_cast<double>(d.numel());
    }
  }
  const auto ab = perceptual_loss(a, b).total.item<double>();
  CHECK(ab == doctest::Approx(expect).epsilon(1e-5));
  CHECK(ab == doctest::Approx(perceptual_loss(b, a).total.item<double>()).epsilon(1e-6));
}

TEST_CASE("perceptual loss does not push gradients into real features") {
  auto real = torch::randn({1, 2, 3, 3}, torch::requires_grad());
  auto fake = torch::randn({1, 2, 3, 3}, torch::requires_grad());
  perceptual_loss({{real}}, {{fake}}).total.backward();
  CHECK_FALSE(real.grad().defined());
  CHECK(fake.grad().defined());
}

TEST_CASE("total generator objective") {
  const LossWeights zero{0.0, 0.0};
  CHECK(total_generator_objective(1.7, 0.3, 0.9, zero) == 1.7);
  CHECK(total_generator_objective(2.0, 0.25, 5.0, LossWeights{1.0, 0.0}) == 2.25);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0, 3);
  for (int i = 0; i < 20; ++i) {
    const double g = u(rng), b = u(rng), p = u(rng);
    const LossWeights w{u(rng), u(rng)};
    const double expect = g + w.lambda1 * b + w.lambda2 * p;
    CHECK(total_generator_objective(g, b, p, w) == doctest::Approx(expect).epsilon(1e-12));
    const auto t = total_generator_objective(torch::tensor(g, torch::kFloat64), torch::tensor(b, torch::kFloat64),
                                             torch::tensor(p, torch::kFloat64), w);
    CHECK(t.item<double>() == doctest::Approx(expect).epsilon(1e-12));
  }
  CHECK_THROWS_AS(validate(LossWeights{-1.0, 0.0}), std::invalid_argument);
}

TEST_CASE("loss report csv row parses back") {
  LossReport r;
  r.iteration = 12;
  r.d_loss = 1.25;
  r.g_adv = 2.5;
  r.l_b = 0.125;
  r.l_p = 3.0;
  r.total = 2.5 + 10 * 0.125 + 10 * 3.0;
  r.g_adv_member = {0.5, 0.75, 0.25, 1.0};
  r.l_p_member = {1.0, 1.0, 0.5, 0.5};
  const auto back = parse_loss_csv_row(to_csv_row(r));
  CHECK(back.iteration == 12);
  CHECK(back.total == r.total);
  CHECK(back.l_p_member == r.l_p_member);
  CHECK(loss_csv_header().rfind("iteration,d_loss,g_adv,l_b,l_p,total", 0) == 0);
}

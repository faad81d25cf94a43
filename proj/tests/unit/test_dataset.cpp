#include <doctest.h>

#include <cmath>
#include <numeric>

#include "segaug/dataset.hpp"
#include "segaug/log.hpp"
#include "segaug/tensor_io.hpp"
#include "test_helpers.hpp"

using namespace segaug;
using segaug::testing::TempDir;

namespace {

std::pair<double, double> mean_std(std::span<const float> v) {
  double m = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double s = 0;
  for (float x : v) s += (x - m) * (x - m);
  return {m, std::sqrt(s / static_cast<double>(v.size()))};
}

}  // namespace

TEST_CASE("zscore of [1,2,3,4] matches the direct formula") {
  const auto in = Tensor::from_floats({2, 2}, {1, 2, 3, 4});
  const auto out = zscore_normalize(in);
  // Oracle: mu = 2.5, sigma = sqrt(1.25).
  const double sigma = std::sqrt(1.25);
  for (int i = 0; i < 4; ++i) CHECK(out.floats()[i] == doctest::Approx((i + 1 - 2.5) / sigma).epsilon(1e-6));
  const auto [m, s] = mean_std(out.floats());
  CHECK(std::abs(m) < 1e-5);
  CHECK(std::abs(s - 1) < 1e-4);
}

TEST_CASE("zscore is a fixed point on standardized input") {
  const auto once = zscore_normalize(Tensor::from_floats({1, 5}, {3, -1, 4, 1, 5}));
  const auto twice = zscore_normalize(once);
  for (std::size_t i = 0; i < 5; ++i) CHECK(twice.floats()[i] == doctest::Approx(once.floats()[i]).epsilon(1e-5));
}

TEST_CASE("zscore of a constant image is zero and warns") {
  std::vector<std::string> warnings;
  auto previous = log::set_sink([&](log::Level lvl, std::string_view m) {
    if (lvl == log::Level::Warn) warnings.emplace_back(m);
  });
  Tensor img(DType::Float32, {8, 8});
  for (auto& v : img.floats()) v = 7.0f;
  const auto out = zscore_normalize(img);
  log::set_sink(previous);
  for (float v : out.floats()) CHECK(v == 0.0f);
  CHECK(warnings.size() == 1);
}

TEST_CASE("zscore normalization property on random images") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 25; ++trial) {
    std::uniform_real_distribution<float> d(-50.f, 200.f);
    Tensor img(DType::Float32, {17, 23});
    for (auto& v : img.floats()) v = d(rng) * (trial + 1);
    const auto [m, s] = mean_std(zscore_normalize(img).floats());
    CHECK(std::abs(m) < 1e-5);
    CHECK(std::abs(s - 1) < 1e-4);
  }
}

TEST_CASE("phantom generation is deterministic") {
  PhantomConfig cfg;
  cfg.num_cases = 6;
  cfg.seed = 11;
  const auto a = generate_phantom_dataset(cfg);
  const auto b = generate_phantom_dataset(cfg);
  REQUIRE(a.size() == 6);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i] == b[i]);
    for (auto m : kModalities) CHECK(bitwise_equal(a[i].modality(m), b[i].modality(m)));
  }
  cfg.seed = 12;
  CHECK_FALSE(generate_phantom_dataset(cfg)[0] == a[0]);
}

TEST_CASE("phantom without tumors has no tumor labels") {
  PhantomConfig cfg;
  cfg.num_cases = 10;
  cfg.tumor_probability = 0.0;
  for (const auto& c : generate_phantom_dataset(cfg)) {
    for (auto v : c.labels.bytes()) CHECK(v == 0);
    CHECK_FALSE(has_tumor(c));
  }
}

TEST_CASE("phantom with tumors contains every subclass") {
  PhantomConfig cfg;
  cfg.seed = 1;
  cfg.num_cases = 50;
  cfg.tumor_probability = 1.0;
  for (const auto& c : generate_phantom_dataset(cfg)) {
    std::array<std::size_t, 5> hist{};
    for (auto v : c.labels.bytes()) ++hist.at(v);
    for (int code = 1; code <= 4; ++code) CHECK_MESSAGE(hist[code] >= 5, c.case_id << " code " << code);
  }
}

TEST_CASE("phantom background is exactly zero and brain strictly positive") {
  PhantomConfig cfg;
  cfg.num_cases = 3;
  cfg.noise_std = 0.3;
  for (const auto& c : generate_phantom_dataset(cfg)) {
    const auto& flair = c.modality(Modality::Flair);
    CHECK(flair.at(0, 0) == 0.0f);
    CHECK(flair.at(32, 32) > 0.0f);
    for (auto m : kModalities) {
      for (std::size_t i = 0; i < flair.size(); ++i) {
        CHECK((flair.floats()[i] == 0.0f) == (c.modality(m).floats()[i] == 0.0f));
      }
    }
  }
}

TEST_CASE("phantom contrast separates tumor classes in the intended channels") {
  PhantomConfig cfg;
  cfg.num_cases = 20;
  cfg.tumor_probability = 1.0;
  cfg.noise_std = 0.0;
  std::array<std::array<double, 4>, 5> sum{};
  std::array<double, 5> n{};
  for (const auto& c : generate_phantom_dataset(cfg)) {
    for (std::size_t i = 0; i < c.labels.size(); ++i) {
      if (c.modality(Modality::Flair).floats()[i] == 0.0f) continue;
      const auto code = c.labels.bytes()[i];
      n[code] += 1;
      for (auto m : kModalities) sum[code][static_cast<int>(m)] += c.modality(m).floats()[i];
    }
  }
  auto mean = [&](int code, Modality m) { return sum[code][static_cast<int>(m)] / n[code]; };
  CHECK(mean(2, Modality::Flair) > mean(0, Modality::Flair) + 0.3);
  CHECK(mean(2, Modality::T2) > mean(0, Modality::T2) + 0.3);
  CHECK(mean(4, Modality::T1c) > mean(2, Modality::T1c) + 0.5);
  CHECK(mean(1, Modality::T1c) < mean(4, Modality::T1c) - 0.5);
}

TEST_CASE("phantom config validation") {
  PhantomConfig cfg;
  cfg.height = 16;
  CHECK_THROWS_AS(generate_phantom_dataset(cfg), std::invalid_argument);
  cfg = {};
  cfg.tumor_probability = 1.5;
  CHECK_THROWS_AS(generate_phantom_dataset(cfg), std::invalid_argument);
}

TEST_CASE("case directories round-trip") {
  TempDir dir("case");
  PhantomConfig cfg;
  cfg.num_cases = 2;
  const auto cases = generate_phantom_dataset(cfg);
  save_case(cases[1], dir / "c");
  const auto back = load_case(dir / "c");
  CHECK(back == cases[1]);
  CHECK(back.case_id == "phantom_00001");
  CHECK(back.grade == Grade::Phantom);

  save_dataset(cases, dir / "all");
  const auto all = load_dataset(dir / "all");
  REQUIRE(all.size() == 2);
  CHECK(all[0] == cases[0]);
}

TEST_CASE("load_case reports missing modality by name") {
  TempDir dir("case");
  PhantomConfig cfg;
  cfg.num_cases = 1;
  save_case(generate_phantom_dataset(cfg)[0], dir / "c");
  std::filesystem::remove(dir / "c" / "t1c.tnsr");
  try {
    load_case(dir / "c");
    FAIL("expected error");
  } catch (const CaseError& e) {
    CHECK(std::string(e.what()).find("t1c") != std::string::npos);
  }
}

TEST_CASE("load_case rejects raw label code 5 and shape mismatches") {
  TempDir dir("case");
  PhantomConfig cfg;
  cfg.num_cases = 1;
  auto c = generate_phantom_dataset(cfg)[0];
  save_case(c, dir / "c");

  auto labels = c.labels;
  labels.code(3, 3) = 5;
  write_tensor(labels, dir / "c" / "labels.tnsr");
  try {
    load_case(dir / "c");
    FAIL("expected error");
  } catch (const CaseError& e) {
    CHECK(std::string(e.what()).find("invalid raw label") != std::string::npos);
  }

  write_tensor(c.labels, dir / "c" / "labels.tnsr");
  write_tensor(Tensor(DType::Float32, {64, 32}), dir / "c" / "t2.tnsr");
  CHECK_THROWS_AS(load_case(dir / "c"), CaseError);
}

#include <doctest.h>

#include <cmath>
#include <fstream>
#include <limits>
#include <set>

#include "segaug/augment.hpp"
#include "segaug/checkpoint.hpp"
#include "segaug/gan_training.hpp"
#include "segaug/segmentation.hpp"
#include "test_helpers.hpp"

using namespace segaug;
using segaug::testing::TempDir;

namespace {

std::vector<MultimodalCase> small_cases(std::size_t n, std::size_t size = 32, std::uint64_t seed = 5) {
  PhantomConfig cfg;
  cfg.num_cases = n;
  cfg.height = cfg.width = size;
  cfg.seed = seed;
  return generate_phantom_dataset(cfg);
}

GanConfig tiny_gan(std::uint64_t seed = 9) {
  GanConfig g;
  g.network.width_divisor = 8;
  g.optimizer.batch_size = 2;
  g.optimizer.seed = seed;
  g.deform.alpha = 60.0;
  g.deform.sigma = 4.0;
  return g;
}

std::vector<torch::Tensor> snapshot(torch::nn::Module& m) {
  std::vector<torch::Tensor> out;
  for (const auto& p : m.parameters()) out.push_back(p.detach().clone());
  return out;
}

bool unchanged(torch::nn::Module& m, const std::vector<torch::Tensor>& before) {
  const auto now = m.parameters();
  for (std::size_t i = 0; i < now.size(); ++i) {
    if (!torch::equal(now[i], before[i])) return false;
  }
  return true;
}

bool close_rel(double a, double b, double tol) { return std::abs(a - b) <= tol * std::max(std::abs(b), 1e-12); }

std::set<std::uint8_t> codes_of(const Tensor& t) { return {t.bytes().begin(), t.bytes().end()}; }

}  // namespace

TEST_CASE("traditional augmentation with neutral parameters is the identity") {
  const auto c = small_cases(1)[0];
  const auto image = normalized_image(c);
  const auto [img, lab] = traditional_augment(image, c.labels, TraditionalParams{0.0, 1.0, false});
  CHECK(img == image);
  CHECK(lab == c.labels);
}

TEST_CASE("horizontal flip is an involution and mirrors columns") {
  const auto c = small_cases(1)[0];
  const auto image = normalized_image(c);
  const TraditionalParams flip{0.0, 1.0, true};
  const auto [once_img, once_lab] = traditional_augment(image, c.labels, flip);
  CHECK(once_lab.code(7, 0) == c.labels.code(7, 31));
  const auto [twice_img, twice_lab] = traditional_augment(once_img, once_lab, flip);
  CHECK(twice_img == image);
  CHECK(twice_lab == c.labels);
}

TEST_CASE("traditional augmentation draws, determinism and code containment") {
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const auto p = draw_traditional_params(seed);
    CHECK(p.angle_degrees >= -10.0);
    CHECK(p.angle_degrees <= 10.0);
    CHECK(p.zoom >= 0.98);
    CHECK(p.zoom <= 1.02);
  }
  const auto cases = small_cases(10, 32, 2);
  for (std::uint64_t trial = 0; trial < 40; ++trial) {
    const auto& c = cases[trial % cases.size()];
    const auto image = normalized_image(c);
    const auto a = traditional_augment(image, c.labels, trial);
    const auto b = traditional_augment(image, c.labels, trial);
    CHECK(a.first == b.first);
    CHECK(a.second == b.second);
    auto allowed = codes_of(c.labels);
    allowed.insert(0);
    for (auto v : codes_of(a.second)) CHECK(allowed.contains(v));
  }
}

TEST_CASE("gan images span [-1, 1] per modality") {
  const auto img = gan_image(small_cases(1)[0]);
  CHECK(img.sizes() == torch::IntArrayRef({4, 32, 32}));
  for (std::int64_t m = 0; m < 4; ++m) {
    CHECK(img[m].min().item<float>() == doctest::Approx(-1.0f));
    CHECK(img[m].max().item<float>() == doctest::Approx(1.0f));
  }
}

TEST_CASE("deformed generator input with alpha 0 reproduces the case layout") {
  const auto c = small_cases(2)[1];
  for (auto order : {DeformOrder::RawFirst, DeformOrder::SemanticFirst}) {
    const auto z = deform_case_labels(c, DeformParams{0.0, 4.0, 3}, order);
    CHECK(z.raw_labels == c.labels);
    CHECK(z.semantic == build_semantic_label_map(c));
  }
}

TEST_CASE("one GAN iteration writes one finite loss row") {
  TempDir dir("gan");
  GanTrainer t(small_cases(4), tiny_gan());
  t.run(1, dir.path());
  std::ifstream in(dir / "gan_losses.csv");
  std::vector<std::string> lines;
  for (std::string l; std::getline(in, l);) lines.push_back(l);
  REQUIRE(lines.size() == 2);
  CHECK(lines[0] == loss_csv_header());
  const auto r = parse_loss_csv_row(lines[1]);
  for (double v : {r.d_loss, r.g_adv, r.l_b, r.l_p, r.total}) CHECK(std::isfinite(v));
  CHECK(std::filesystem::exists(dir / "gan_final.ckpt"));
}

TEST_CASE("discriminator and generator updates touch only their own parameters") {
  GanTrainer t(small_cases(4), tiny_gan());
  const auto batch = t.batch_for(0);
  const auto out = t.generate(batch);
  auto g_before = snapshot(*t.generator());
  auto d_before = snapshot(*t.discriminators());
  t.update_discriminator(batch, out);
  CHECK(unchanged(*t.generator(), g_before));
  CHECK_FALSE(unchanged(*t.discriminators(), d_before));

  d_before = snapshot(*t.discriminators());
  t.update_generator(batch, out);
  CHECK(unchanged(*t.discriminators(), d_before));
  CHECK_FALSE(unchanged(*t.generator(), g_before));
  for (const auto& p : t.discriminators()->parameters()) CHECK(p.requires_grad());
}

TEST_CASE("a discriminator step lowers the discriminator loss on the same batch") {
  GanTrainer t(small_cases(4), tiny_gan(4));
  const auto batch = t.batch_for(0);
  GeneratorOutput out;
  {
    torch::NoGradGuard no_grad;
    out = t.generate(batch);
  }
  const double before = t.discriminator_loss(batch, out);
  t.update_discriminator(batch, out);
  CHECK(t.discriminator_loss(batch, out) < before);
}

TEST_CASE("GAN training is reproducible and resumable") {
  const auto cases = small_cases(6);
  GanTrainer a(cases, tiny_gan(11));
  GanTrainer b(cases, tiny_gan(11));
  std::vector<LossReport> ra, rb;
  for (int i = 0; i < 6; ++i) ra.push_back(a.step());
  for (int i = 0; i < 3; ++i) rb.push_back(b.step());
  for (int i = 0; i < 3; ++i) CHECK(ra[i].total == rb[i].total);

  TempDir dir("resume");
  b.save(dir / "mid.ckpt");
  GanTrainer c(cases, tiny_gan(11));
  c.resume(dir / "mid.ckpt");
  CHECK(c.iterations() == 3);
  for (int i = 3; i < 6; ++i) {
    const auto r = c.step();
    CHECK(r.iteration == i);
    CHECK(close_rel(r.d_loss, ra[i].d_loss, 1e-4));
    CHECK(close_rel(r.total, ra[i].total, 1e-4));
  }

  GanConfig wider = tiny_gan(11);
  wider.network.width_divisor = 4;
  GanTrainer d(cases, wider);
  CHECK_THROWS_AS(d.resume(dir / "mid.ckpt"), CheckpointError);
}

TEST_CASE("non-finite losses abort with iteration and term") {
  auto cases = small_cases(2);
  for (auto& c : cases) c.modality(Modality::T1).at(5, 5) = std::numeric_limits<float>::quiet_NaN();
  GanTrainer t(cases, tiny_gan());
  CHECK_THROWS_WITH_AS(t.step(), doctest::Contains("d_loss at iteration 0"), TrainingError);
}

TEST_CASE("synthesis keeps labels under the identity deformation and produces z-scored images") {
  const auto cases = small_cases(4);
  GanTrainer t(cases, tiny_gan());
  t.step();
  for (const auto& c : cases) {
    const auto pair = synthesize_augmented_pair(t.generator(), c, DeformParams{0.0, 4.0, 1});
    CHECK(pair.labels == c.labels);
    CHECK(pair.image.shape() == Shape({4, 32, 32}));
    for (float v : pair.image.floats()) REQUIRE(std::isfinite(v));
    double mean = 0;
    for (std::size_t i = 0; i < 32 * 32; ++i) mean += pair.image.floats()[i];
    CHECK(std::abs(mean / (32 * 32)) < 1e-4);
  }
  for (std::uint64_t trial = 0; trial < 10; ++trial) {
    const auto& c = cases[trial % cases.size()];
    auto allowed = codes_of(c.labels);
    allowed.insert(0);
    const auto pair = synthesize_augmented_pair(t.generator(), c, DeformParams{80.0, 4.0, trial});
    for (auto v : codes_of(pair.labels)) CHECK(allowed.contains(v));
  }
}

TEST_CASE("generator checkpoints load for synthesis") {
  TempDir dir("gen");
  const auto cases = small_cases(2);
  GanTrainer t(cases, tiny_gan());
  t.step();
  t.save(dir / "trainer.ckpt");
  save_generator(t.generator(), t.config().network, dir / "g.ckpt");
  const DeformParams p{30.0, 4.0, 2};
  const auto want = synthesize_augmented_pair(t.generator(), cases[0], p);
  for (const char* name : {"trainer.ckpt", "g.ckpt"}) {
    auto g = load_generator(dir / name);
    const auto got = synthesize_augmented_pair(g, cases[0], p);
    CHECK(got.image == want.image);
    CHECK(got.labels == want.labels);
  }
}

TEST_CASE("U-Net output matches the input size") {
  UNet net(UNetOptions{4, 5, 8, 4, 0});
  CHECK(net->forward(torch::rand({2, 4, 32, 48})).sizes() == torch::IntArrayRef({2, 5, 32, 48}));
  CHECK_THROWS_AS(net->forward(torch::rand({1, 4, 40, 40})), std::invalid_argument);
}

TEST_CASE("segmentation training modes") {
  const auto cases = small_cases(6);
  const std::vector<MultimodalCase> train(cases.begin(), cases.begin() + 4), val(cases.begin() + 4, cases.end());
  SegmentationConfig cfg;
  cfg.optimizer.iterations = 1;
  cfg.base_width = 8;

  const auto a = train_segmentation(train, val, cfg);
  REQUIRE(a.log.size() == 1);
  CHECK(a.log[0].epoch == 0);
  CHECK(a.real_samples == 4);
  const auto b = train_segmentation(train, val, cfg);
  CHECK(a.log[0].dice_complete == b.log[0].dice_complete);

  cfg.augmentation.kind = AugmentKind::Traditional;
  CHECK(train_segmentation(train, val, cfg).log.size() == 1);

  cfg.augmentation.kind = AugmentKind::Proposed;
  CHECK_THROWS_AS(train_segmentation(train, val, cfg), ConfigError);

  GanTrainer gan(train, tiny_gan());
  gan.step();
  cfg.augmentation.mix_probability = 1.0;
  cfg.optimizer.iterations = 2;
  const auto p = train_segmentation(train, val, cfg, &gan.generator());
  CHECK(p.synthetic_samples == 8);
  CHECK(p.real_samples == 0);
  CHECK(p.log.size() == 2);
}

TEST_CASE("segmentation evaluation and model files") {
  TempDir dir("unet");
  const auto cases = small_cases(3);
  UNet net(UNetOptions{4, 5, 8, 4, 1});
  const auto report = evaluate(net, cases);
  CHECK(report.case_count() == 3);
  save_segmentation_model(net, dir / "m.ckpt");
  auto back = load_segmentation_model(dir / "m.ckpt");
  CHECK(predict_labels(back, cases[0]) == predict_labels(net, cases[0]));
}

TEST_CASE("dataset split") {
  const auto cases = small_cases(10);
  const auto s = split_dataset(cases, SplitSpec{0.6, 0.2, 0.2, 0});
  CHECK(s.train.size() == 6);
  CHECK(s.val.size() == 2);
  CHECK(s.test.size() == 2);
  CHECK(s.val[0].case_id == cases[6].case_id);
  CHECK(split_dataset(cases, SplitSpec{0.6, 0.2, 0.2, 4}).train.size() == 4);
  CHECK_THROWS_AS(split_dataset(cases, SplitSpec{0.8, 0.2, 0.2, 0}), std::invalid_argument);
}

#include <doctest.h>

#include <fstream>

#include "segaug/config.hpp"
#include "test_helpers.hpp"

using namespace segaug;

TEST_CASE("config parses keys, comments and blank lines") {
  const auto cfg = parse_config(
      "# run\n"
      "seed = 42\n"
      "\n"
      "gan.iterations = 10   # short\n"
      "seg.mode = traditional\n"
      "deform.alpha = 3.5\n"
      "gan.perceptual_pairing = printed\n");
  CHECK(cfg.seed == 42);
  CHECK(cfg.gan.optimizer.iterations == 10);
  CHECK(cfg.seg.augmentation.kind == AugmentKind::Traditional);
  CHECK(cfg.gan.deform.alpha == 3.5);
  CHECK(cfg.seg.augmentation.deform.alpha == 3.5);
  CHECK(cfg.gan.pairing == PerceptualPairing::Printed);
  CHECK(cfg.gan_config().optimizer.seed == 42);
  CHECK(cfg.seg_config(2).optimizer.seed == 44);
  CHECK(cfg.phantom_config().seed == 42);
}

TEST_CASE("config rejects unknown, duplicate and malformed input") {
  CHECK_THROWS_WITH_AS(parse_config("seed = 1\nbogus = 2\n"), "line 2: unknown config key 'bogus'", ConfigError);
  CHECK_THROWS_WITH_AS(parse_config("seed = 1\nseed = 2\n"), "line 2: duplicate key 'seed'", ConfigError);
  CHECK_THROWS_WITH_AS(parse_config("gan.iterations = 3\n"), "missing mandatory key 'seed'", ConfigError);
  CHECK_THROWS_AS(parse_config("seed = 1\ngan.iterations = ten\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("seed = -1\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("seed = 1\nseg.mode = fancy\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("seed = 1\njust a line\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("seed = 1\nsplit.train = 0.9\nsplit.val = 0.2\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("seed = 1\ngan.batch_size = 0\n"), ConfigError);
}

TEST_CASE("config text round-trips") {
  auto cfg = parse_config("seed = 9\ngan.learning_rate = 0.000123\nsplit.train = 0.7\nsplit.val = 0.1\nsynth.count = 3\n");
  const auto again = parse_config(to_text(cfg));
  CHECK(to_text(again) == to_text(cfg));
  CHECK(again.gan.optimizer.learning_rate == cfg.gan.optimizer.learning_rate);
  CHECK(again.split.train == 0.7);
  CHECK(again.synth_count == 3);
}

TEST_CASE("dumped defaults parse back to the defaults") {
  const auto text = dump_defaults();
  CHECK(text.find("seed = 0") != std::string::npos);
  const auto cfg = parse_config(text);
  CHECK(to_text(cfg) == to_text(ExperimentConfig{}));
}

TEST_CASE("config loads from a file") {
  testing::TempDir dir("config");
  std::ofstream(dir / "a.cfg") << "seed = 5\n";
  CHECK(load_config(dir / "a.cfg").seed == 5);
  CHECK_THROWS_AS(load_config(dir / "missing.cfg"), ConfigError);
}

#include "commands.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <optional>
#include <span>
#include <sstream>

#include "segaug/checkpoint.hpp"
#include "segaug/config.hpp"
#include "segaug/dataset.hpp"
#include "segaug/evaluation.hpp"
#include "segaug/gan_training.hpp"
#include "segaug/log.hpp"
#include "segaug/rng.hpp"
#include "segaug/segmentation.hpp"
#include "segaug/tensor_io.hpp"

namespace segaug::cli {

namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kSynthTag = 0x5e7;
constexpr const char* kOutEnv = "SEGAUG_OUT";

struct Options {
  std::string config;
  std::string out;
  std::string checkpoint;
  std::string mode;
  int seeds = 3;
  bool verbose = false;
};

class Context {
 public:
  Context(const Options& opt, std::ostream& out) : opt_(opt), out_(out) {}

  const ExperimentConfig& config() {
    if (!cfg_) {
      if (opt_.config.empty()) throw ConfigError("--config is required");
      cfg_ = load_config(opt_.config);
    }
    return *cfg_;
  }

  fs::path out_dir() const {
    if (!opt_.out.empty()) return opt_.out;
    if (const char* env = std::getenv(kOutEnv); env != nullptr && *env != '\0') return env;
    throw ConfigError(std::string("--out is required (or set ") + kOutEnv + ")");
  }

  fs::path checkpoint(const char* what) const {
    if (opt_.checkpoint.empty()) throw ConfigError(std::string("--checkpoint is required: ") + what);
    return opt_.checkpoint;
  }

  fs::path dataset_dir() {
    const auto& c = config();
    return c.dataset_dir.empty() ? out_dir() / "dataset" : fs::path(c.dataset_dir);
  }

  std::vector<MultimodalCase> dataset() {
    const auto dir = dataset_dir();
    if (!fs::is_directory(dir)) {
      throw std::runtime_error("dataset directory " + dir.string() + " not found; run `segaug phantom` first");
    }
    auto cases = load_dataset(dir);
    if (cases.empty()) throw std::runtime_error("dataset directory " + dir.string() + " holds no cases");
    return cases;
  }

  DataSplit split() { return split_dataset(dataset(), config().split); }

  const Options& options() const { return opt_; }
  std::ostream& out() { return out_; }

 private:
  const Options& opt_;
  std::ostream& out_;
  std::optional<ExperimentConfig> cfg_;
};

void write_text(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path());
  write_file_atomic(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

std::string metrics_csv(const std::vector<EpochMetrics>& log) {
  std::string s = metric_csv_header() + "\n";
  for (const auto& m : log) s += to_csv_row(m) + "\n";
  return s;
}

GanTrainer train_gan(Context& ctx, const std::vector<MultimodalCase>& train, const fs::path& dir,
                     const std::optional<fs::path>& resume_from) {
  const auto& cfg = ctx.config();
  GanTrainer trainer(train, cfg.gan_config());
  if (resume_from) trainer.resume(*resume_from);
  const auto total = cfg.gan.optimizer.iterations;
  trainer.run(total, dir, [&](const LossReport& r) {
    log::debug(to_csv_row(r));
    if ((r.iteration + 1) % 100 == 0 || r.iteration + 1 == total) {
      log::info("gan iteration " + std::to_string(r.iteration + 1) + "/" + std::to_string(total) +
                " d_loss " + std::to_string(r.d_loss) + " l_b " + std::to_string(r.l_b));
    }
  });
  save_generator(trainer.generator(), trainer.config().network, dir / "generator.ckpt");
  return trainer;
}

int cmd_phantom(Context& ctx) {
  const auto cases = generate_phantom_dataset(ctx.config().phantom_config());
  const auto dir = ctx.out_dir() / "dataset";
  fs::remove_all(dir);
  save_dataset(cases, dir);
  ctx.out() << "wrote " << cases.size() << " phantom cases to " << dir.string() << "\n";
  return kExitOk;
}

int cmd_train_gan(Context& ctx) {
  const auto split = ctx.split();
  if (split.train.empty()) throw ConfigError("training split is empty");
  std::optional<fs::path> resume;
  if (!ctx.options().checkpoint.empty()) resume = ctx.options().checkpoint;
  const auto dir = ctx.out_dir() / "gan";
  const auto trainer = train_gan(ctx, split.train, dir, resume);
  ctx.out() << "trained GAN for " << trainer.iterations() << " iterations; losses in "
            << (dir / "gan_losses.csv").string() << "\n";
  return kExitOk;
}

int cmd_synth(Context& ctx) {
  const auto& cfg = ctx.config();
  auto generator = load_generator(ctx.checkpoint("generator or GAN checkpoint for synthesis"));
  const auto cases = ctx.dataset();
  const auto root = ctx.out_dir() / "synth";
  for (std::size_t i = 0; i < cfg.synth_count; ++i) {
    const auto& src = cases[i % cases.size()];
    DeformParams p = cfg.gan.deform;
    p.seed = derive_seed(cfg.seed, {kSynthTag, i});
    const auto pair = synthesize_augmented_pair(generator, src, p, cfg.gan.deform_order);

    char id[32];
    std::snprintf(id, sizeof(id), "synth_%05zu", i);
    MultimodalCase c;
    c.case_id = id;
    c.labels = pair.labels;
    const auto h = src.height(), w = src.width();
    for (std::size_t m = 0; m < kNumModalities; ++m) {
      const auto first = pair.image.floats().begin() + static_cast<std::ptrdiff_t>(m * h * w);
      c.modalities[m] = Tensor::from_floats({h, w}, std::vector<float>(first, first + static_cast<std::ptrdiff_t>(h * w)));
    }
    const auto dir = root / id;
    save_case(c, dir);
    write_tensor(pair.boundary.mask, dir / "boundary.tnsr");
    write_text(dir / "source.txt", src.case_id + "\n");
  }
  ctx.out() << "wrote " << cfg.synth_count << " synthetic cases to " << root.string() << "\n";
  return kExitOk;
}

int cmd_train_seg(Context& ctx) {
  auto cfg = ctx.config().seg_config();
  if (!ctx.options().mode.empty()) cfg.augmentation.kind = parse_augment_kind(ctx.options().mode);
  std::optional<GeneratorBundle> generator;
  if (cfg.augmentation.kind == AugmentKind::Proposed) {
    generator = load_generator(ctx.checkpoint("proposed mode needs a trained GAN checkpoint"));
  }
  const auto split = ctx.split();
  auto result = train_segmentation(split.train, split.val, cfg, generator ? &*generator : nullptr,
                                   [](const EpochMetrics& m) { log::info("epoch " + to_csv_row(m)); });
  const auto dir = ctx.out_dir() / ("seg_" + std::string(augment_kind_name(cfg.augmentation.kind)));
  fs::create_directories(dir);
  save_segmentation_model(result.model, dir / "model.ckpt");
  write_text(dir / "metrics.csv", metrics_csv(result.log));
  const auto& last = result.log.back();
  ctx.out() << "trained U-Net (" << augment_kind_name(cfg.augmentation.kind) << ", " << result.real_samples
            << " real / " << result.synthetic_samples << " synthetic samples); final validation dice complete "
            << last.dice_complete << " core " << last.dice_core << " enhancing " << last.dice_enh << "\n";
  return kExitOk;
}

int cmd_evaluate(Context& ctx) {
  const auto path = ctx.checkpoint("segmentation model to evaluate");
  auto model = load_segmentation_model(path);
  const auto split = ctx.split();
  if (split.test.empty()) throw ConfigError("test split is empty");
  const auto report = evaluate(model, split.test);
  const auto dir = ctx.out_dir() / "eval";
  write_text(dir / "report.csv", to_csv(report));
  const std::vector<TableRow> rows = {{path.parent_path().filename().string(), report.mean}};
  const auto table = format_table(rows);
  write_text(dir / "table.txt", table);
  ctx.out() << table;
  return kExitOk;
}

int cmd_compare(Context& ctx) {
  const auto& cfg = ctx.config();
  if (ctx.options().seeds < 1) throw ConfigError("--seeds must be at least 1");
  const auto split = ctx.split();
  if (split.test.empty()) throw ConfigError("test split is empty");
  const auto dir = ctx.out_dir() / "compare";

  std::optional<GeneratorBundle> generator;
  if (!ctx.options().checkpoint.empty()) {
    generator = load_generator(ctx.options().checkpoint);
  } else {
    auto trainer = train_gan(ctx, split.train, dir / "gan", std::nullopt);
    generator = trainer.generator();
  }

  std::string runs = "mode,seed,complete_dice,core_dice,enh_dice,complete_precision,core_precision,enh_precision,"
                     "complete_sensitivity,core_sensitivity,enh_sensitivity\n";
  std::vector<TableRow> rows;
  for (auto kind : {AugmentKind::None, AugmentKind::Traditional, AugmentKind::Proposed}) {
    std::array<RegionMetrics, 3> sum{};
    for (int k = 0; k < ctx.options().seeds; ++k) {
      auto seg = cfg.seg_config(static_cast<std::uint64_t>(k));
      seg.augmentation.kind = kind;
      auto result = train_segmentation(split.train, split.val, seg, &*generator);
      const auto report = evaluate(result.model, split.test);
      std::ostringstream line;
      line.precision(9);
      line << augment_kind_name(kind) << "," << seg.optimizer.seed;
      for (auto field : {&RegionMetrics::dice, &RegionMetrics::precision, &RegionMetrics::sensitivity}) {
        for (const auto& m : report.mean) line << "," << m.*field;
      }
      runs += line.str() + "\n";
      for (std::size_t r = 0; r < 3; ++r) {
        sum[r].dice += report.mean[r].dice;
        sum[r].precision += report.mean[r].precision;
        sum[r].sensitivity += report.mean[r].sensitivity;
      }
      log::info(std::string(augment_kind_name(kind)) + " seed " + std::to_string(seg.optimizer.seed) +
                " complete dice " + std::to_string(report.mean[0].dice));
    }
    for (auto& m : sum) {
      m.dice /= ctx.options().seeds;
      m.precision /= ctx.options().seeds;
      m.sensitivity /= ctx.options().seeds;
    }
    rows.push_back({std::string(augment_kind_name(kind)), sum});
  }
  write_text(dir / "runs.csv", runs);
  const auto table = format_table(rows);
  write_text(dir / "table.txt", table);
  ctx.out() << table;
  return kExitOk;
}

void add_common(CLI::App* cmd, Options& opt, bool config, bool checkpoint, bool mode, bool seeds) {
  if (config) cmd->add_option("--config", opt.config, "key=value configuration file");
  cmd->add_option("--out", opt.out, std::string("output directory (default: $") + kOutEnv + ")");
  if (checkpoint) cmd->add_option("--checkpoint", opt.checkpoint, "checkpoint file to read");
  if (mode) {
    cmd->add_option("--mode", opt.mode, "augmentation mode")->check(CLI::IsMember({"none", "traditional", "proposed"}));
  }
  if (seeds) cmd->add_option("--seeds", opt.seeds, "number of segmentation seeds per mode");
  cmd->add_flag("--verbose", opt.verbose, "debug logging");
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Options opt;
  CLI::App app{"Boundary-aware GAN data augmentation for brain tumor segmentation"};
  app.name("segaug");
  app.require_subcommand(1);

  struct Command {
    CLI::App* app;
    int (*fn)(Context&);
  };
  std::vector<Command> commands;
  auto add = [&](const char* name, const char* help, int (*fn)(Context&), bool checkpoint, bool mode, bool seeds) {
    auto* cmd = app.add_subcommand(name, help);
    add_common(cmd, opt, true, checkpoint, mode, seeds);
    commands.push_back({cmd, fn});
  };
  add("phantom", "generate the phantom dataset", cmd_phantom, false, false, false);
  add("train-gan", "train the generator/discriminator pair (--checkpoint resumes)", cmd_train_gan, true, false, false);
  add("synth", "write synthetic cases from a trained generator", cmd_synth, true, false, false);
  add("train-seg", "train the U-Net under one augmentation mode", cmd_train_seg, true, true, false);
  add("evaluate", "evaluate a U-Net checkpoint on the test split", cmd_evaluate, true, false, false);
  add("compare", "train and evaluate all augmentation modes over several seeds", cmd_compare, true, false, true);
  auto* dump = app.add_subcommand("dump-defaults", "print every configuration key with its default");
  dump->add_flag("--verbose", opt.verbose, "debug logging");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << "segaug: " << e.what() << "\n";
    return kExitConfigError;
  }

  log::set_level(opt.verbose ? log::Level::Debug : log::Level::Info);
  try {
    if (dump->parsed()) {
      out << dump_defaults();
      return kExitOk;
    }
    Context ctx(opt, out);
    for (const auto& c : commands) {
      if (c.app->parsed()) return c.fn(ctx);
    }
    return kExitConfigError;
  } catch (const ConfigError& e) {
    err << "segaug: config error: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const std::invalid_argument& e) {
    err << "segaug: config error: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const std::exception& e) {
    err << "segaug: error: " << e.what() << "\n";
    return kExitRuntimeError;
  }
}

}  // namespace segaug::cli

#include "segaug/segmentation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "segaug/augment.hpp"
#include "segaug/checkpoint.hpp"
#include "segaug/log.hpp"
#include "segaug/rng.hpp"

namespace segaug {

namespace {

constexpr std::uint64_t kShuffleTag = 0x54ff1e;
constexpr std::uint64_t kSampleTag = 0x5a3b1e;

struct Sample {
  Tensor image;   // 4 x H x W z-scored
  Tensor labels;  // H x W raw codes
};

}  // namespace

std::string_view augment_kind_name(AugmentKind k) {
  switch (k) {
    case AugmentKind::None:
      return "none";
    case AugmentKind::Traditional:
      return "traditional";
    case AugmentKind::Proposed:
      return "proposed";
  }
  return "none";
}

AugmentKind parse_augment_kind(std::string_view s) {
  if (s == "none") return AugmentKind::None;
  if (s == "traditional") return AugmentKind::Traditional;
  if (s == "proposed") return AugmentKind::Proposed;
  throw ConfigError("unknown augmentation mode '" + std::string(s) + "' (expected none, traditional or proposed)");
}

void validate(const SegmentationConfig& c) {
  validate(c.optimizer);
  validate(c.augmentation.deform);
  if (!(c.augmentation.mix_probability >= 0 && c.augmentation.mix_probability <= 1)) {
    throw std::invalid_argument("mix_probability must lie in [0, 1]");
  }
  if (c.base_width < 1 || c.depth < 1) throw std::invalid_argument("U-Net base_width and depth must be positive");
}

std::string metric_csv_header() { return "epoch,dice_complete,dice_core,dice_enh"; }

std::string to_csv_row(const EpochMetrics& m) {
  char buf[128];
  std::snprintf(buf, sizeof(buf), "%lld,%.9g,%.9g,%.9g", static_cast<long long>(m.epoch), m.dice_complete, m.dice_core,
                m.dice_enh);
  return buf;
}

SegmentationResult train_segmentation(const std::vector<MultimodalCase>& train, const std::vector<MultimodalCase>& val,
                                      const SegmentationConfig& cfg, GeneratorBundle* generator,
                                      const std::function<void(const EpochMetrics&)>& on_epoch) {
  validate(cfg);
  const auto& aug = cfg.augmentation;
  if (aug.kind == AugmentKind::Proposed && (generator == nullptr || !*generator)) {
    throw ConfigError("proposed augmentation needs a trained generator checkpoint");
  }
  if (train.empty() || val.empty()) throw std::invalid_argument("segmentation training needs train and validation cases");

  const auto seed = cfg.optimizer.seed;
  SegmentationResult result;
  result.model = UNet(UNetOptions{4, 5, cfg.base_width, cfg.depth, seed});
  torch::optim::Adam opt(result.model->parameters(), adam_options(cfg.optimizer));

  std::vector<Tensor> images;
  images.reserve(train.size());
  for (const auto& c : train) images.push_back(normalized_image(c));

  for (std::int64_t epoch = 0; epoch < cfg.optimizer.iterations; ++epoch) {
    std::vector<std::size_t> order(train.size());
    std::iota(order.begin(), order.end(), 0);
    Rng shuffle_rng(derive_seed(seed, {kShuffleTag, static_cast<std::uint64_t>(epoch)}));
    std::shuffle(order.begin(), order.end(), shuffle_rng);

    result.model->train();
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.optimizer.batch_size)) {
      const auto end = std::min(order.size(), start + static_cast<std::size_t>(cfg.optimizer.batch_size));
      std::vector<torch::Tensor> xs, ys;
      for (std::size_t pos = start; pos < end; ++pos) {
        const auto idx = order[pos];
        const auto sample_seed =
            derive_seed(seed, {kSampleTag, static_cast<std::uint64_t>(epoch), static_cast<std::uint64_t>(pos)});
        Sample s{images[idx], train[idx].labels};
        if (aug.kind == AugmentKind::Traditional) {
          auto [img, lab] = traditional_augment(s.image, s.labels, sample_seed);
          s = {std::move(img), std::move(lab)};
          ++result.real_samples;
        } else if (aug.kind == AugmentKind::Proposed) {
          Rng rng(sample_seed);
          if (std::bernoulli_distribution(aug.mix_probability)(rng)) {
            DeformParams p = aug.deform;
            p.seed = rng();
            auto pair = synthesize_augmented_pair(*generator, train[idx], p, aug.deform_order);
            s = {std::move(pair.image), std::move(pair.labels)};
            ++result.synthetic_samples;
          } else {
            ++result.real_samples;
          }
        } else {
          ++result.real_samples;
        }
        xs.push_back(to_torch(s.image));
        ys.push_back(to_torch(s.labels));
      }
      const auto x = torch::stack(xs);
      const auto y = torch::stack(ys).to(torch::kLong);
      opt.zero_grad();
      const auto loss = torch::nn::functional::cross_entropy(result.model->forward(x), y);
      if (!std::isfinite(loss.item<double>())) {
        throw TrainingError("non-finite segmentation loss at epoch " + std::to_string(epoch));
      }
      loss.backward();
      opt.step();
    }

    const auto report = evaluate(result.model, val);
    EpochMetrics m{epoch, report[Region::Complete].dice, report[Region::Core].dice, report[Region::Enhancing].dice};
    result.log.push_back(m);
    log::debug("epoch " + std::to_string(epoch) + " val dice " + to_csv_row(m));
    if (on_epoch) on_epoch(m);
  }
  return result;
}

Tensor predict_labels(UNet& model, const MultimodalCase& c) {
  torch::NoGradGuard no_grad;
  const bool was_training = model->is_training();
  model->eval();
  const auto scores = model->forward(to_torch(normalized_image(c)).unsqueeze(0));
  model->train(was_training);
  return from_torch(scores.argmax(1)[0].to(torch::kUInt8));
}

EvalReport evaluate(UNet& model, const std::vector<MultimodalCase>& cases) {
  std::vector<CaseMetrics> per_case;
  per_case.reserve(cases.size());
  for (const auto& c : cases) per_case.push_back(evaluate_case(c.case_id, predict_labels(model, c), c.labels));
  return make_report(std::move(per_case));
}

void save_segmentation_model(UNet& model, const std::filesystem::path& path) {
  Checkpoint c;
  export_module(*model, "unet", c);
  const auto& o = model->options();
  c.meta["kind"] = "unet";
  c.meta["base_width"] = std::to_string(o.base_width);
  c.meta["depth"] = std::to_string(o.depth);
  save_checkpoint(c, path);
}

UNet load_segmentation_model(const std::filesystem::path& path) {
  const auto c = load_checkpoint(path);
  if (c.meta_value("kind") != "unet") throw CheckpointError(path.string() + " is not a segmentation model");
  UNet model(UNetOptions{4, 5, std::stoll(c.meta_value("base_width")), std::stoi(c.meta_value("depth")), 0});
  import_module(*model, "unet", c);
  return model;
}

DataSplit split_dataset(const std::vector<MultimodalCase>& cases, const SplitSpec& spec) {
  if (spec.train < 0 || spec.val < 0 || spec.test < 0 || spec.train + spec.val + spec.test > 1.0 + 1e-9) {
    throw std::invalid_argument("split fractions must be non-negative and sum to at most 1");
  }
  const auto n = static_cast<double>(cases.size());
  auto n_train = static_cast<std::size_t>(std::floor(spec.train * n + 1e-9));
  const auto n_val = static_cast<std::size_t>(std::floor(spec.val * n + 1e-9));
  const auto n_test = static_cast<std::size_t>(std::floor(spec.test * n + 1e-9));
  DataSplit s;
  s.train.assign(cases.begin(), cases.begin() + static_cast<std::ptrdiff_t>(n_train));
  s.val.assign(cases.begin() + static_cast<std::ptrdiff_t>(n_train),
               cases.begin() + static_cast<std::ptrdiff_t>(n_train + n_val));
  s.test.assign(cases.begin() + static_cast<std::ptrdiff_t>(n_train + n_val),
                cases.begin() + static_cast<std::ptrdiff_t>(n_train + n_val + n_test));
  if (spec.max_train > 0 && s.train.size() > spec.max_train) s.train.resize(spec.max_train);
  return s;
}

}  // namespace segaug

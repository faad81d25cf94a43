#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "segaug/dataset.hpp"
#include "segaug/evaluation.hpp"
#include "segaug/gan_training.hpp"
#include "segaug/label_ops.hpp"
#include "segaug/unet.hpp"

namespace segaug {

// Raised for invalid settings detected before any work starts.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class AugmentKind { None, Traditional, Proposed };
std::string_view augment_kind_name(AugmentKind k);
AugmentKind parse_augment_kind(std::string_view s);

struct AugmentationMode {
  AugmentKind kind = AugmentKind::None;
  double mix_probability = 0.5;  // proposed mode: share of training samples replaced by synthetic pairs
  DeformParams deform;           // proposed mode only; seed is derived per sample
  DeformOrder deform_order = DeformOrder::RawFirst;
};

struct SegmentationConfig {
  OptimizerConfig optimizer{0.0002, 0.5, 0.999, 4, 30, 0};  // iterations = epochs
  AugmentationMode augmentation;
  std::int64_t base_width = 32;
  int depth = 4;
};
void validate(const SegmentationConfig& c);

struct EpochMetrics {
  std::int64_t epoch = 0;
  double dice_complete = 0, dice_core = 0, dice_enh = 0;
};
std::string metric_csv_header();  // epoch,dice_complete,dice_core,dice_enh
std::string to_csv_row(const EpochMetrics& m);

struct SegmentationResult {
  UNet model{nullptr};
  std::vector<EpochMetrics> log;  // one validation row per epoch
  std::size_t real_samples = 0;
  std::size_t synthetic_samples = 0;
};

/// Cross-entropy over the five raw codes with Adam. Each training sample is
/// augmented when it is loaded, according to the mode; validation data is never
/// augmented. Proposed mode requires a generator and raises ConfigError without one.
SegmentationResult train_segmentation(const std::vector<MultimodalCase>& train, const std::vector<MultimodalCase>& val,
                                      const SegmentationConfig& cfg, GeneratorBundle* generator = nullptr,
                                      const std::function<void(const EpochMetrics&)>& on_epoch = {});

// argmax over the class scores of one case.
Tensor predict_labels(UNet& model, const MultimodalCase& c);
EvalReport evaluate(UNet& model, const std::vector<MultimodalCase>& cases);

void save_segmentation_model(UNet& model, const std::filesystem::path& path);
UNet load_segmentation_model(const std::filesystem::path& path);

// Contiguous train / validation / test split in dataset order. Fractions must
// sum to at most 1; max_train caps the training part when non-zero.
struct SplitSpec {
  double train = 0.6;
  double val = 0.2;
  double test = 0.2;
  std::size_t max_train = 0;
};
struct DataSplit {
  std::vector<MultimodalCase> train, val, test;
};
DataSplit split_dataset(const std::vector<MultimodalCase>& cases, const SplitSpec& spec);

}  // namespace segaug

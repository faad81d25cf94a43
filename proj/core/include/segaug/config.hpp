#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "segaug/dataset.hpp"
#include "segaug/gan_training.hpp"
#include "segaug/segmentation.hpp"

namespace segaug {

// Every tunable of a run. Files are plain `key = value` lines; `#` starts a
// comment. Unknown or repeated keys are errors and `seed` must be present.
struct ExperimentConfig {
  std::uint64_t seed = 0;
  std::string dataset_dir;  // empty: <out>/dataset
  PhantomConfig phantom;
  GanConfig gan;
  SegmentationConfig seg;
  SplitSpec split;
  std::size_t synth_count = 8;

  // Seeds of the individual stages follow the master seed.
  GanConfig gan_config() const;
  SegmentationConfig seg_config(std::uint64_t seed_offset = 0) const;
  PhantomConfig phantom_config() const;
};

// Throws ConfigError naming the line on malformed input.
ExperimentConfig parse_config(std::string_view text);
ExperimentConfig load_config(const std::filesystem::path& path);

// Canonical text form; parse_config(to_text(c)) reproduces c.
std::string to_text(const ExperimentConfig& c);
std::string dump_defaults();

}  // namespace segaug

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "segaug/tensor.hpp"

namespace segaug {

enum class Modality : std::uint8_t { Flair = 0, T1 = 1, T1c = 2, T2 = 3 };
inline constexpr std::size_t kNumModalities = 4;
inline constexpr std::array<Modality, kNumModalities> kModalities = {Modality::Flair, Modality::T1,
                                                                     Modality::T1c, Modality::T2};
// File stem used in case directories: flair, t1, t1c, t2.
std::string_view modality_name(Modality m);

enum class Grade : std::uint8_t { HG, LG, Phantom };
std::string_view grade_name(Grade g);
Grade parse_grade(std::string_view s);

// Raw annotation codes carried by a case (0 = no tumor).
inline constexpr std::uint8_t kMaxRawLabel = 4;

class CaseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// One 2D axial slice: four co-registered modalities plus its annotation.
struct MultimodalCase {
  std::string case_id;
  std::array<Tensor, kNumModalities> modalities;  // indexed by Modality, each HxW float32
  Tensor labels;                                  // HxW uint8, codes 0..4
  Grade grade = Grade::Phantom;

  const Tensor& modality(Modality m) const { return modalities[static_cast<std::size_t>(m)]; }
  Tensor& modality(Modality m) { return modalities[static_cast<std::size_t>(m)]; }
  std::size_t height() const { return labels.dim(0); }
  std::size_t width() const { return labels.dim(1); }

  friend bool operator==(const MultimodalCase&, const MultimodalCase&) = default;
};

// Throws CaseError on shape mismatch, wrong dtype or label codes outside 0..4.
void validate_case(const MultimodalCase& c);

inline constexpr double kNormalizeEpsilon = 1e-8;

/// Zero-mean, unit-variance rescaling of one modality image (population std).
/// Images with std below kNormalizeEpsilon come back all-zero and log a warning.
Tensor zscore_normalize(const Tensor& image);

// 4 x H x W stack of the z-scored modalities in Modality order.
Tensor normalized_image(const MultimodalCase& c);

struct PhantomConfig {
  std::size_t num_cases = 100;
  std::size_t height = 64;
  std::size_t width = 64;
  double tumor_probability = 0.8;
  double noise_std = 0.05;
  std::uint64_t seed = 0;
};

void validate(const PhantomConfig& cfg);

/// Procedural stand-in for skull-stripped multimodal slices. Each case holds an
/// elliptical brain (zero intensity outside it) and, with tumor_probability, a
/// nested tumor: edema (2) around a core of enhancing rim (4), necrotic centre (1)
/// and a non-enhancing satellite (3). Pure function of cfg.
std::vector<MultimodalCase> generate_phantom_dataset(const PhantomConfig& cfg);

// Directory layout: flair.tnsr t1.tnsr t1c.tnsr t2.tnsr labels.tnsr meta.txt
void save_case(const MultimodalCase& c, const std::filesystem::path& dir);
MultimodalCase load_case(const std::filesystem::path& dir);

// Loads every case directory under root (sorted by name).
std::vector<MultimodalCase> load_dataset(const std::filesystem::path& root);
void save_dataset(const std::vector<MultimodalCase>& cases, const std::filesystem::path& root);

bool has_tumor(const MultimodalCase& c);

}  // namespace segaug

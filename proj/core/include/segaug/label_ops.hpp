#pragma once

#include <cstdint>

#include "segaug/dataset.hpp"
#include "segaug/tensor.hpp"

namespace segaug {

// Conditioning codes fed to the generator.
enum SemanticCode : std::uint8_t {
  kBackground = 0,
  kNecrosis = 1,
  kEdema = 2,
  kNonEnhancing = 3,
  kEnhancing = 4,
  kHealthyBrain = 5,
};
inline constexpr std::size_t kNumSemanticCodes = 6;

// HxW uint8 map with codes 0..5.
struct SemanticLabelMap {
  Tensor codes;

  std::size_t height() const { return codes.dim(0); }
  std::size_t width() const { return codes.dim(1); }
  friend bool operator==(const SemanticLabelMap&, const SemanticLabelMap&) = default;
};

// HxW float32 mask with values in {0,1}; the regression target of the boundary head.
struct BoundaryTarget {
  Tensor mask;
};

struct DeformParams {
  double alpha = 300.0;  // displacement magnitude in pixels
  double sigma = 10.0;   // Gaussian smoothing scale in pixels
  std::uint64_t seed = 0;
};

void validate(const DeformParams& p);

// 1 wherever any modality is nonzero (inputs are skull-stripped).
Tensor brain_mask(const MultimodalCase& c);

SemanticLabelMap build_semantic_label_map(const MultimodalCase& c);
// Raw codes 0..4 plus a brain mask; tumor codes take precedence over brain.
SemanticLabelMap build_semantic_label_map(const Tensor& raw_labels, const Tensor& brain);

Tensor complete_tumor_mask(const SemanticLabelMap& m);

/// Inner one-pixel contour: a foreground pixel is on the boundary when at least
/// one 4-neighbour is background or lies outside the image.
BoundaryTarget extract_boundary(const Tensor& binary_mask);

struct DisplacementField {
  Tensor dy;  // HxW float32, pixels
  Tensor dx;
};

/// Uniform noise in [-1,1] per pixel and axis, smoothed by a Gaussian of scale
/// sigma (zero padded, truncated at 4 sigma), scaled by alpha.
DisplacementField make_displacement_field(std::size_t height, std::size_t width, const DeformParams& p);

// Nearest-neighbour warp of an integer code map; samples landing outside are 0.
Tensor warp_codes(const Tensor& codes, const DisplacementField& field);
Tensor elastic_deform_codes(const Tensor& codes, const DeformParams& p);
SemanticLabelMap elastic_deform_labels(const SemanticLabelMap& m, const DeformParams& p);

// 6xHxW float32 with channel k set where code == k.
Tensor one_hot(const SemanticLabelMap& m);
// Inverse of one_hot: per-pixel argmax over channels.
SemanticLabelMap argmax_codes(const Tensor& scores);

/// Bilinear resampling of a CxHxW tensor onto the (H/f)x(W/f) grid with
/// half-pixel centres (source coordinate (i + 0.5) * f - 0.5), edge clamped.
Tensor downsample_bilinear(const Tensor& image, std::size_t factor);

// Top-left decimation: out(i, j) = in(f*i, f*j).
Tensor downsample_codes_nearest(const Tensor& codes, std::size_t factor);
SemanticLabelMap downsample_labels_nearest(const SemanticLabelMap& m, std::size_t factor);

}  // namespace segaug

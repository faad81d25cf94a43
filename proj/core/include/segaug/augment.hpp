#pragma once

#include <cstdint>
#include <utility>

#include "segaug/tensor.hpp"

namespace segaug {

// Rotation about the slice centre, isotropic zoom and an optional horizontal flip.
struct TraditionalParams {
  double angle_degrees = 0.0;
  double zoom = 1.0;
  bool flip = false;
};

// angle ~ U(-10, 10) degrees, zoom ~ U(0.98, 1.02), flip with probability 0.5.
TraditionalParams draw_traditional_params(std::uint64_t seed);

// Image: C x H x W float32, bilinear with edge clamping. Labels: H x W uint8,
// nearest neighbour with 0 outside the source. Output keeps the input size.
std::pair<Tensor, Tensor> traditional_augment(const Tensor& image, const Tensor& labels, const TraditionalParams& p);
std::pair<Tensor, Tensor> traditional_augment(const Tensor& image, const Tensor& labels, std::uint64_t seed);

}  // namespace segaug

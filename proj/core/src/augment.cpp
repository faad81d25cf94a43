#include "segaug/augment.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "segaug/rng.hpp"

namespace segaug {

TraditionalParams draw_traditional_params(std::uint64_t seed) {
  Rng rng(seed);
  TraditionalParams p;
  p.angle_degrees = uniform(rng, -10.0, 10.0);
  p.zoom = uniform(rng, 0.98, 1.02);
  p.flip = std::bernoulli_distribution(0.5)(rng);
  return p;
}

std::pair<Tensor, Tensor> traditional_augment(const Tensor& image, const Tensor& labels, const TraditionalParams& p) {
  if (image.ndim() != 3 || labels.ndim() != 2 || image.dim(1) != labels.dim(0) || image.dim(2) != labels.dim(1)) {
    throw std::invalid_argument("traditional_augment: expected C x H x W image and matching H x W labels, got " +
                                shape_string(image.shape()) + " and " + shape_string(labels.shape()));
  }
  if (!(p.zoom > 0)) throw std::invalid_argument("traditional_augment: zoom must be positive");
  const std::size_t C = image.dim(0), H = image.dim(1), W = image.dim(2);
  const double cy = (static_cast<double>(H) - 1) / 2, cx = (static_cast<double>(W) - 1) / 2;
  const double theta = p.angle_degrees * std::numbers::pi / 180.0;
  const double cs = std::cos(theta) / p.zoom, sn = std::sin(theta) / p.zoom;

  Tensor out_image(DType::Float32, image.shape());
  Tensor out_labels(DType::UInt8, labels.shape());
  const auto src = image.floats();
  auto dst = out_image.floats();
  const auto src_labels = labels.bytes();
  auto dst_labels = out_labels.bytes();

  for (std::size_t y = 0; y < H; ++y) {
    for (std::size_t x = 0; x < W; ++x) {
      // Inverse map: undo the flip, then the rotation and zoom about the centre.
      const double xf = p.flip ? static_cast<double>(W - 1 - x) : static_cast<double>(x);
      const double u = static_cast<double>(y) - cy, v = xf - cx;
      const double sy = cs * u + sn * v + cy;
      const double sx = -sn * u + cs * v + cx;

      const long ny = std::lround(sy), nx = std::lround(sx);
      const bool inside = ny >= 0 && nx >= 0 && ny < static_cast<long>(H) && nx < static_cast<long>(W);
      dst_labels[y * W + x] = inside ? src_labels[static_cast<std::size_t>(ny) * W + static_cast<std::size_t>(nx)] : 0;

      const double qy = std::clamp(sy, 0.0, static_cast<double>(H - 1));
      const double qx = std::clamp(sx, 0.0, static_cast<double>(W - 1));
      const auto y0 = static_cast<std::size_t>(std::floor(qy)), x0 = static_cast<std::size_t>(std::floor(qx));
      const auto y1 = std::min(y0 + 1, H - 1), x1 = std::min(x0 + 1, W - 1);
      const double fy = qy - static_cast<double>(y0), fx = qx - static_cast<double>(x0);
      for (std::size_t c = 0; c < C; ++c) {
        const float* plane = src.data() + c * H * W;
        const double top = plane[y0 * W + x0] * (1 - fx) + plane[y0 * W + x1] * fx;
        const double bottom = plane[y1 * W + x0] * (1 - fx) + plane[y1 * W + x1] * fx;
        dst[c * H * W + y * W + x] = static_cast<float>(top * (1 - fy) + bottom * fy);
      }
    }
  }
  return {std::move(out_image), std::move(out_labels)};
}

std::pair<Tensor, Tensor> traditional_augment(const Tensor& image, const Tensor& labels, std::uint64_t seed) {
  return traditional_augment(image, labels, draw_traditional_params(seed));
}

}  // namespace segaug

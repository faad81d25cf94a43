#include "segaug/label_ops.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "segaug/rng.hpp"

namespace segaug {

void validate(const DeformParams& p) {
  if (!(p.alpha >= 0.0) || !std::isfinite(p.alpha)) {
    throw std::invalid_argument("deform: alpha must be finite and >= 0");
  }
  if (!(p.sigma > 0.0) || !std::isfinite(p.sigma)) {
    throw std::invalid_argument("deform: sigma must be finite and > 0");
  }
}

Tensor brain_mask(const MultimodalCase& c) {
  Tensor mask(DType::UInt8, c.labels.shape());
  auto out = mask.bytes();
  for (auto m : kModalities) {
    const auto img = c.modality(m).floats();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] |= img[i] != 0.0f ? 1 : 0;
  }
  return mask;
}

SemanticLabelMap build_semantic_label_map(const Tensor& raw, const Tensor& brain) {
  if (raw.shape() != brain.shape()) {
    throw std::invalid_argument("semantic map: labels " + shape_string(raw.shape()) +
                                " vs brain mask " + shape_string(brain.shape()));
  }
  SemanticLabelMap m{Tensor(DType::UInt8, raw.shape())};
  auto out = m.codes.bytes();
  const auto in = raw.bytes();
  const auto b = brain.bytes();
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (in[i] > kMaxRawLabel) throw std::invalid_argument("semantic map: raw label above 4");
    out[i] = in[i] != 0 ? in[i] : (b[i] ? kHealthyBrain : kBackground);
  }
  return m;
}

SemanticLabelMap build_semantic_label_map(const MultimodalCase& c) {
  return build_semantic_label_map(c.labels, brain_mask(c));
}

Tensor complete_tumor_mask(const SemanticLabelMap& m) {
  Tensor mask(DType::UInt8, m.codes.shape());
  auto out = mask.bytes();
  const auto in = m.codes.bytes();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = (in[i] >= 1 && in[i] <= 4) ? 1 : 0;
  return mask;
}

BoundaryTarget extract_boundary(const Tensor& mask) {
  if (mask.ndim() != 2) throw std::invalid_argument("extract_boundary: expected a 2D mask");
  const std::size_t H = mask.dim(0), W = mask.dim(1);
  BoundaryTarget b{Tensor(DType::Float32, mask.shape())};
  auto on = [&](std::ptrdiff_t y, std::ptrdiff_t x) {
    if (y < 0 || x < 0 || y >= static_cast<std::ptrdiff_t>(H) || x >= static_cast<std::ptrdiff_t>(W)) return false;
    return mask.code(static_cast<std::size_t>(y), static_cast<std::size_t>(x)) != 0;
  };
  for (std::size_t y = 0; y < H; ++y) {
    for (std::size_t x = 0; x < W; ++x) {
      if (!mask.code(y, x)) continue;
      const auto yy = static_cast<std::ptrdiff_t>(y), xx = static_cast<std::ptrdiff_t>(x);
      const bool interior = on(yy - 1, xx) && on(yy + 1, xx) && on(yy, xx - 1) && on(yy, xx + 1);
      b.mask.at(y, x) = interior ? 0.0f : 1.0f;
    }
  }
  return b;
}

namespace {

std::vector<double> gaussian_kernel(double sigma) {
  const auto radius = static_cast<std::ptrdiff_t>(std::ceil(4.0 * sigma));
  std::vector<double> k(static_cast<std::size_t>(2 * radius + 1));
  double sum = 0.0;
  for (std::ptrdiff_t i = -radius; i <= radius; ++i) {
    const double v = std::exp(-0.5 * (i * i) / (sigma * sigma));
    k[static_cast<std::size_t>(i + radius)] = v;
    sum += v;
  }
  for (auto& v : k) v /= sum;
  return k;
}

// Separable zero-padded convolution of an HxW field.
std::vector<double> smooth(const std::vector<double>& in, std::size_t H, std::size_t W,
                           const std::vector<double>& kernel) {
  const auto r = static_cast<std::ptrdiff_t>(kernel.size() / 2);
  const auto h = static_cast<std::ptrdiff_t>(H), w = static_cast<std::ptrdiff_t>(W);
  std::vector<double> tmp(H * W, 0.0), out(H * W, 0.0);
  for (std::ptrdiff_t y = 0; y < h; ++y) {
    for (std::ptrdiff_t x = 0; x < w; ++x) {
      double acc = 0.0;
      for (std::ptrdiff_t k = std::max(-r, -x); k <= std::min(r, w - 1 - x); ++k) {
        acc += kernel[static_cast<std::size_t>(k + r)] * in[static_cast<std::size_t>(y * w + x + k)];
      }
      tmp[static_cast<std::size_t>(y * w + x)] = acc;
    }
  }
  for (std::ptrdiff_t y = 0; y < h; ++y) {
    for (std::ptrdiff_t x = 0; x < w; ++x) {
      double acc = 0.0;
      for (std::ptrdiff_t k = std::max(-r, -y); k <= std::min(r, h - 1 - y); ++k) {
        acc += kernel[static_cast<std::size_t>(k + r)] * tmp[static_cast<std::size_t>((y + k) * w + x)];
      }
      out[static_cast<std::size_t>(y * w + x)] = acc;
    }
  }
  return out;
}

}  // namespace

DisplacementField make_displacement_field(std::size_t H, std::size_t W, const DeformParams& p) {
  validate(p);
  DisplacementField f{Tensor(DType::Float32, {H, W}), Tensor(DType::Float32, {H, W})};
  if (p.alpha == 0.0) return f;
  Rng rng(p.seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> ny(H * W), nx(H * W);
  for (auto& v : ny) v = u(rng);
  for (auto& v : nx) v = u(rng);
  const auto kernel = gaussian_kernel(p.sigma);
  const auto sy = smooth(ny, H, W, kernel);
  const auto sx = smooth(nx, H, W, kernel);
  auto dy = f.dy.floats();
  auto dx = f.dx.floats();
  for (std::size_t i = 0; i < H * W; ++i) {
    dy[i] = static_cast<float>(p.alpha * sy[i]);
    dx[i] = static_cast<float>(p.alpha * sx[i]);
  }
  return f;
}

Tensor warp_codes(const Tensor& codes, const DisplacementField& field) {
  if (codes.ndim() != 2 || field.dy.shape() != codes.shape() || field.dx.shape() != codes.shape()) {
    throw std::invalid_argument("warp_codes: field " + shape_string(field.dy.shape()) +
                                " does not match map " + shape_string(codes.shape()));
  }
  const auto H = static_cast<long>(codes.dim(0)), W = static_cast<long>(codes.dim(1));
  Tensor out(DType::UInt8, codes.shape());
  for (long y = 0; y < H; ++y) {
    for (long x = 0; x < W; ++x) {
      const auto i = static_cast<std::size_t>(y * W + x);
      const long sy = std::lround(static_cast<double>(y) + field.dy.floats()[i]);
      const long sx = std::lround(static_cast<double>(x) + field.dx.floats()[i]);
      if (sy >= 0 && sy < H && sx >= 0 && sx < W) {
        out.bytes()[i] = codes.bytes()[static_cast<std::size_t>(sy * W + sx)];
      }
    }
  }
  return out;
}

Tensor elastic_deform_codes(const Tensor& codes, const DeformParams& p) {
  validate(p);
  if (p.alpha == 0.0) return codes;
  return warp_codes(codes, make_displacement_field(codes.dim(0), codes.dim(1), p));
}

SemanticLabelMap elastic_deform_labels(const SemanticLabelMap& m, const DeformParams& p) {
  return SemanticLabelMap{elastic_deform_codes(m.codes, p)};
}

Tensor one_hot(const SemanticLabelMap& m) {
  const std::size_t H = m.height(), W = m.width(), plane = H * W;
  Tensor out(DType::Float32, {kNumSemanticCodes, H, W});
  auto o = out.floats();
  const auto in = m.codes.bytes();
  for (std::size_t i = 0; i < plane; ++i) {
    if (in[i] >= kNumSemanticCodes) throw std::invalid_argument("one_hot: code above 5");
    o[in[i] * plane + i] = 1.0f;
  }
  return out;
}

SemanticLabelMap argmax_codes(const Tensor& scores) {
  if (scores.ndim() != 3) throw std::invalid_argument("argmax_codes: expected CxHxW");
  const std::size_t C = scores.dim(0), H = scores.dim(1), W = scores.dim(2), plane = H * W;
  SemanticLabelMap m{Tensor(DType::UInt8, {H, W})};
  const auto s = scores.floats();
  auto out = m.codes.bytes();
  for (std::size_t i = 0; i < plane; ++i) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < C; ++c) {
      if (s[c * plane + i] > s[best * plane + i]) best = c;
    }
    out[i] = static_cast<std::uint8_t>(best);
  }
  return m;
}

Tensor downsample_bilinear(const Tensor& image, std::size_t f) {
  if (image.ndim() != 3) throw std::invalid_argument("downsample_bilinear: expected CxHxW");
  if (f != 1 && f != 2 && f != 4 && f != 8) {
    throw std::invalid_argument("downsample_bilinear: factor must be 1, 2, 4 or 8");
  }
  const std::size_t C = image.dim(0), H = image.dim(1), W = image.dim(2);
  if (H % f || W % f) {
    throw std::invalid_argument("downsample_bilinear: " + shape_string(image.shape()) +
                                " not divisible by " + std::to_string(f));
  }
  const std::size_t h = H / f, w = W / f;
  Tensor out(DType::Float32, {C, h, w});
  const auto in = image.floats();
  auto o = out.floats();

  struct Tap {
    std::size_t lo, hi;
    double t;
  };
  auto taps = [f](std::size_t n_out, std::size_t n_in) {
    std::vector<Tap> v(n_out);
    for (std::size_t i = 0; i < n_out; ++i) {
      const double src = std::clamp((i + 0.5) * static_cast<double>(f) - 0.5, 0.0,
                                    static_cast<double>(n_in - 1));
      const auto lo = static_cast<std::size_t>(std::floor(src));
      v[i] = {lo, std::min(lo + 1, n_in - 1), src - static_cast<double>(lo)};
    }
    return v;
  };
  const auto ty = taps(h, H), tx = taps(w, W);
  for (std::size_t c = 0; c < C; ++c) {
    const float* p = in.data() + c * H * W;
    for (std::size_t i = 0; i < h; ++i) {
      for (std::size_t j = 0; j < w; ++j) {
        const auto& a = ty[i];
        const auto& b = tx[j];
        const double top = (1 - b.t) * p[a.lo * W + b.lo] + b.t * p[a.lo * W + b.hi];
        const double bot = (1 - b.t) * p[a.hi * W + b.lo] + b.t * p[a.hi * W + b.hi];
        o[(c * h + i) * w + j] = static_cast<float>((1 - a.t) * top + a.t * bot);
      }
    }
  }
  return out;
}

Tensor downsample_codes_nearest(const Tensor& codes, std::size_t f) {
  if (codes.ndim() != 2 || f == 0) throw std::invalid_argument("downsample_codes_nearest: bad input");
  const std::size_t H = codes.dim(0), W = codes.dim(1);
  if (H % f || W % f) {
    throw std::invalid_argument("downsample_codes_nearest: " + shape_string(codes.shape()) +
                                " not divisible by " + std::to_string(f));
  }
  Tensor out(DType::UInt8, {H / f, W / f});
  for (std::size_t i = 0; i < H / f; ++i) {
    for (std::size_t j = 0; j < W / f; ++j) out.code(i, j) = codes.code(i * f, j * f);
  }
  return out;
}

SemanticLabelMap downsample_labels_nearest(const SemanticLabelMap& m, std::size_t f) {
  return SemanticLabelMap{downsample_codes_nearest(m.codes, f)};
}

}  // namespace segaug

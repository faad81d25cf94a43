#include "segaug/unet.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include <ATen/CPUGeneratorImpl.h>

namespace segaug {

namespace F = torch::nn::functional;

DoubleConvImpl::DoubleConvImpl(std::int64_t in, std::int64_t out) {
  body = register_module("body", torch::nn::Sequential(
                                     torch::nn::Conv2d(torch::nn::Conv2dOptions(in, out, 3).padding(1).bias(false)),
                                     torch::nn::BatchNorm2d(out), torch::nn::ReLU(),
                                     torch::nn::Conv2d(torch::nn::Conv2dOptions(out, out, 3).padding(1).bias(false)),
                                     torch::nn::BatchNorm2d(out), torch::nn::ReLU()));
}

torch::Tensor DoubleConvImpl::forward(const torch::Tensor& x) { return body->forward(x); }

UNetImpl::UNetImpl(const UNetOptions& opt) : opt_(opt) {
  if (opt.depth < 1 || opt.base_width < 1) throw std::invalid_argument("UNet: depth and base_width must be positive");
  std::int64_t in = opt.in_channels;
  for (int i = 0; i < opt.depth; ++i) {
    const auto width = opt.base_width << i;
    down_.push_back(register_module("down" + std::to_string(i), DoubleConv(in, width)));
    in = width;
  }
  bottleneck_ = register_module("bottleneck", DoubleConv(in, opt.base_width << opt.depth));
  in = opt.base_width << opt.depth;
  for (int i = opt.depth - 1; i >= 0; --i) {
    const auto width = opt.base_width << i;
    up_.push_back(register_module("up" + std::to_string(i), DoubleConv(in + width, width)));
    in = width;
  }
  classifier_ = register_module("classifier", torch::nn::Conv2d(torch::nn::Conv2dOptions(in, opt.classes, 1)));

  // He-normal convolution weights from a private generator so initialization
  // depends on the seed alone.
  auto gen = at::make_generator<at::CPUGeneratorImpl>(opt.seed);
  torch::NoGradGuard no_grad;
  for (auto& m : modules(/*include_self=*/false)) {
    if (auto* conv = m->as<torch::nn::Conv2d>()) {
      const auto fan_in = conv->weight.size(1) * conv->weight.size(2) * conv->weight.size(3);
      conv->weight.normal_(0.0, std::sqrt(2.0 / static_cast<double>(fan_in)), gen);
      if (conv->bias.defined()) conv->bias.zero_();
    }
  }
}

torch::Tensor UNetImpl::forward(const torch::Tensor& x) {
  const auto multiple = std::int64_t{1} << opt_.depth;
  if (x.dim() != 4 || x.size(2) % multiple != 0 || x.size(3) % multiple != 0) {
    throw std::invalid_argument("UNet: expected N x C x H x W input with H, W divisible by " +
                                std::to_string(multiple));
  }
  std::vector<torch::Tensor> skips;
  auto h = x;
  for (auto& block : down_) {
    h = block->forward(h);
    skips.push_back(h);
    h = F::max_pool2d(h, F::MaxPool2dFuncOptions(2));
  }
  h = bottleneck_->forward(h);
  for (auto& block : up_) {
    const auto& skip = skips.back();
    h = F::interpolate(h, F::InterpolateFuncOptions()
                              .size(std::vector<std::int64_t>{skip.size(2), skip.size(3)})
                              .mode(torch::kBilinear)
                              .align_corners(false));
    h = block->forward(torch::cat({h, skip}, 1));
    skips.pop_back();
  }
  return classifier_->forward(h);
}

}  // namespace segaug

#pragma once

#include <torch/torch.h>

#include <cstdint>
#include <vector>

namespace segaug {

struct UNetOptions {
  std::int64_t in_channels = 4;
  std::int64_t classes = 5;
  std::int64_t base_width = 32;
  int depth = 4;  // number of 2x poolings
  std::uint64_t seed = 0;
};

// Two 3x3 convolution + BatchNorm + ReLU layers.
class DoubleConvImpl : public torch::nn::Module {
 public:
  DoubleConvImpl(std::int64_t in, std::int64_t out);
  torch::Tensor forward(const torch::Tensor& x);

 private:
  torch::nn::Sequential body{nullptr};
};
TORCH_MODULE(DoubleConv);

/// Encoder widths base * 2^i for i < depth, a base * 2^depth bottleneck, and a
/// decoder that upsamples bilinearly, concatenates the skip and applies a
/// DoubleConv back to the skip width. A 1x1 convolution produces class scores.
class UNetImpl : public torch::nn::Module {
 public:
  explicit UNetImpl(const UNetOptions& opt);
  torch::Tensor forward(const torch::Tensor& x);
  const UNetOptions& options() const { return opt_; }

 private:
  UNetOptions opt_;
  std::vector<DoubleConv> down_, up_;
  DoubleConv bottleneck_{nullptr};
  torch::nn::Conv2d classifier_{nullptr};
};
TORCH_MODULE(UNet);

}  // namespace segaug

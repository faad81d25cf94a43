#pragma once

#include <torch/torch.h>

#include <cstdint>
#include <vector>

namespace segaug {

// Filter counts follow the c7s1-k / dk / Rk / uk / Ck vocabulary; every count k
// is divided by width_divisor (floored at 1) so the same topology can be run
// at desk scale.
struct NetworkOptions {
  int width_divisor = 1;
  std::uint64_t seed = 0;

  std::int64_t filters(std::int64_t k) const { return std::max<std::int64_t>(1, k / width_divisor); }
};

inline constexpr std::int64_t kImageChannels = 4;
inline constexpr std::int64_t kConditionChannels = 6;
inline constexpr std::int64_t kBoundaryChannels = 2;
inline constexpr int kNumDiscriminators = 4;
// Coarse path halves the input once more than its four stride-2 stages.
inline constexpr std::int64_t kGeneratorSizeMultiple = 32;

enum class Activation { None, ReLU, LeakyReLU, Tanh };

// Convolution + BatchNorm + activation. Used for c7s1-k (k=7,s=1), dk (k=3,s=2)
// and Ck (k=4,s=2) blocks.
class ConvBlockImpl : public torch::nn::Module {
 public:
  ConvBlockImpl(std::int64_t in, std::int64_t out, std::int64_t kernel, std::int64_t stride,
                std::int64_t padding, Activation act);
  torch::Tensor forward(const torch::Tensor& x);

 private:
  torch::nn::Conv2d conv{nullptr};
  torch::nn::BatchNorm2d norm{nullptr};
  Activation act_;
};
TORCH_MODULE(ConvBlock);

// uk: 3x3 fractional-strided convolution (stride 1/2) + BatchNorm + ReLU.
class UpBlockImpl : public torch::nn::Module {
 public:
  UpBlockImpl(std::int64_t in, std::int64_t out);
  torch::Tensor forward(const torch::Tensor& x);

 private:
  torch::nn::ConvTranspose2d conv{nullptr};
  torch::nn::BatchNorm2d norm{nullptr};
};
TORCH_MODULE(UpBlock);

// Rk: two 3x3 convolutions with k filters and an additive skip. When in != out
// the skip is a 1x1 projection.
class ResidualBlockImpl : public torch::nn::Module {
 public:
  ResidualBlockImpl(std::int64_t in, std::int64_t out);
  torch::Tensor forward(const torch::Tensor& x);

 private:
  torch::nn::Conv2d conv1{nullptr}, conv2{nullptr}, projection{nullptr};
  torch::nn::BatchNorm2d norm1{nullptr}, norm2{nullptr};
};
TORCH_MODULE(ResidualBlock);

// Output head: convolution + optional Tanh, no normalization.
class HeadImpl : public torch::nn::Module {
 public:
  HeadImpl(std::int64_t in, std::int64_t out, Activation act);
  torch::Tensor forward(const torch::Tensor& x);

 private:
  torch::nn::Conv2d conv{nullptr};
  Activation act_;
};
TORCH_MODULE(Head);

struct CoarseOutput {
  torch::Tensor image;     // N x 4 x h x w, Tanh range
  torch::Tensor features;  // N x 64 x h x w, input to the final c7s1-4
};

/// c7s1-64, d128, d256, d512, d1024, R1024 x4, u512, u256, u128, u64, c7s1-4.
class CoarseGeneratorImpl : public torch::nn::Module {
 public:
  explicit CoarseGeneratorImpl(const NetworkOptions& opt);
  CoarseOutput forward(const torch::Tensor& cond_half);
  std::int64_t feature_channels() const { return feature_channels_; }

 private:
  torch::nn::Sequential trunk{nullptr};
  Head head{nullptr};
  std::int64_t feature_channels_;
};
TORCH_MODULE(CoarseGenerator);

struct FineOutput {
  torch::Tensor final_image;    // N x 4 x H x W, Tanh range
  torch::Tensor branch_image;   // N x 4 x H x W, Tanh range
  torch::Tensor boundary_prob;  // N x 2 x H x W, softmax over channels; channel 1 = boundary
};

/// Trunk c7s1-32, d64 (+ coarse features), R64 x3, u32; image branch c7s1-4 and
/// boundary branch c7s1-2, concatenated and fused by R64, R64, c7s1-4.
class FineGeneratorImpl : public torch::nn::Module {
 public:
  explicit FineGeneratorImpl(const NetworkOptions& opt);
  FineOutput forward(const torch::Tensor& cond_full, const torch::Tensor& coarse_features);

 private:
  torch::nn::Sequential stem{nullptr};
  torch::nn::Sequential trunk{nullptr};
  Head image_branch{nullptr}, boundary_branch{nullptr};
  torch::nn::Sequential fusion{nullptr};
  Head final_head{nullptr};
};
TORCH_MODULE(FineGenerator);

struct GeneratorOutput {
  torch::Tensor final_image;
  torch::Tensor branch_image;
  torch::Tensor boundary_prob;
  torch::Tensor coarse_image;
};

// Conditioning helpers over batches of code maps (N x H x W, uint8 codes 0..5).
// one_hot_batch yields the default floating dtype (float32 unless changed).
torch::Tensor one_hot_batch(const torch::Tensor& codes);
torch::Tensor decimate_codes(const torch::Tensor& codes);

// Throws std::invalid_argument unless both dims are positive multiples of 32.
void check_generator_input_size(std::int64_t height, std::int64_t width);

class GeneratorBundleImpl : public torch::nn::Module {
 public:
  explicit GeneratorBundleImpl(const NetworkOptions& opt);

  // Semantic code maps in, all generator heads out.
  GeneratorOutput forward(const torch::Tensor& codes);

  CoarseGenerator coarse{nullptr};
  FineGenerator fine{nullptr};
};
TORCH_MODULE(GeneratorBundle);

struct DiscriminatorOutput {
  torch::Tensor prediction;             // N x 1 x h x w in (0,1)
  std::vector<torch::Tensor> features;  // post-activation outputs of C64..C512
};

/// C64, C128, C256, C512, then a 4x4 stride-1 convolution to one channel and a
/// sigmoid. Ck blocks pad by 2 and the final convolution by 1 so an 8x8 input
/// (the 1/8 scale of a 64x64 slice) still yields a 1x1 prediction map.
class PatchDiscriminatorImpl : public torch::nn::Module {
 public:
  PatchDiscriminatorImpl(std::int64_t in_channels, const NetworkOptions& opt);
  DiscriminatorOutput forward(const torch::Tensor& x);

 private:
  std::vector<ConvBlock> blocks_;
  torch::nn::Conv2d out{nullptr};
};
TORCH_MODULE(PatchDiscriminator);

// Spatial size of a member's prediction map for an input of the given size.
std::int64_t patch_output_size(std::int64_t input_size);

/// Four identically shaped, independently parameterized discriminators. Member k
/// sees (image ++ condition) bilinearly downsampled by 2^k.
class DiscriminatorEnsembleImpl : public torch::nn::Module {
 public:
  explicit DiscriminatorEnsembleImpl(const NetworkOptions& opt);
  std::vector<DiscriminatorOutput> forward(const torch::Tensor& image, const torch::Tensor& cond);

  std::vector<PatchDiscriminator> members;
};
TORCH_MODULE(DiscriminatorEnsemble);

// N(0, 0.02) for every convolution weight, zero biases, unit norm scales.
// Driven by a private generator seeded with `seed`.
void initialize_weights(torch::nn::Module& module, std::uint64_t seed);

std::int64_t parameter_count(const torch::nn::Module& module);

// Toggle requires_grad on every parameter of a module.
void set_trainable(torch::nn::Module& module, bool trainable);

}  // namespace segaug

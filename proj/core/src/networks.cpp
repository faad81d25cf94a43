#include "segaug/networks.hpp"

#include <ATen/CPUGeneratorImpl.h>

#include <stdexcept>
#include <string>

namespace segaug {

namespace F = torch::nn::functional;

namespace {

torch::Tensor activate(const torch::Tensor& x, Activation act) {
  switch (act) {
    case Activation::None:
      return x;
    case Activation::ReLU:
      return torch::relu(x);
    case Activation::LeakyReLU:
      return F::leaky_relu(x, F::LeakyReLUFuncOptions().negative_slope(0.2));
    case Activation::Tanh:
      return torch::tanh(x);
  }
  return x;
}

}  // namespace

ConvBlockImpl::ConvBlockImpl(std::int64_t in, std::int64_t out, std::int64_t kernel, std::int64_t stride,
                             std::int64_t padding, Activation act)
    : act_(act) {
  conv = register_module(
      "conv", torch::nn::Conv2d(torch::nn::Conv2dOptions(in, out, kernel).stride(stride).padding(padding).bias(false)));
  norm = register_module("norm", torch::nn::BatchNorm2d(out));
}

torch::Tensor ConvBlockImpl::forward(const torch::Tensor& x) { return activate(norm(conv(x)), act_); }

UpBlockImpl::UpBlockImpl(std::int64_t in, std::int64_t out) {
  conv = register_module("conv", torch::nn::ConvTranspose2d(torch::nn::ConvTranspose2dOptions(in, out, 3)
                                                                .stride(2)
                                                                .padding(1)
                                                                .output_padding(1)
                                                                .bias(false)));
  norm = register_module("norm", torch::nn::BatchNorm2d(out));
}

torch::Tensor UpBlockImpl::forward(const torch::Tensor& x) { return torch::relu(norm(conv(x))); }

ResidualBlockImpl::ResidualBlockImpl(std::int64_t in, std::int64_t out) {
  conv1 = register_module("conv1", torch::nn::Conv2d(torch::nn::Conv2dOptions(in, out, 3).padding(1).bias(false)));
  norm1 = register_module("norm1", torch::nn::BatchNorm2d(out));
  conv2 = register_module("conv2", torch::nn::Conv2d(torch::nn::Conv2dOptions(out, out, 3).padding(1).bias(false)));
  norm2 = register_module("norm2", torch::nn::BatchNorm2d(out));
  if (in != out) {
    projection = register_module("projection", torch::nn::Conv2d(torch::nn::Conv2dOptions(in, out, 1)));
  }
}

torch::Tensor ResidualBlockImpl::forward(const torch::Tensor& x) {
  auto y = norm2(conv2(torch::relu(norm1(conv1(x)))));
  return (projection ? projection(x) : x) + y;
}

HeadImpl::HeadImpl(std::int64_t in, std::int64_t out, Activation act) : act_(act) {
  conv = register_module("conv", torch::nn::Conv2d(torch::nn::Conv2dOptions(in, out, 7).padding(3)));
}

torch::Tensor HeadImpl::forward(const torch::Tensor& x) { return activate(conv(x), act_); }

CoarseGeneratorImpl::CoarseGeneratorImpl(const NetworkOptions& opt) {
  const auto f = [&](std::int64_t k) { return opt.filters(k); };
  torch::nn::Sequential s;
  s->push_back(ConvBlock(kConditionChannels, f(64), 7, 1, 3, Activation::ReLU));
  s->push_back(ConvBlock(f(64), f(128), 3, 2, 1, Activation::ReLU));
  s->push_back(ConvBlock(f(128), f(256), 3, 2, 1, Activation::ReLU));
  s->push_back(ConvBlock(f(256), f(512), 3, 2, 1, Activation::ReLU));
  s->push_back(ConvBlock(f(512), f(1024), 3, 2, 1, Activation::ReLU));
  for (int i = 0; i < 4; ++i) s->push_back(ResidualBlock(f(1024), f(1024)));
  s->push_back(UpBlock(f(1024), f(512)));
  s->push_back(UpBlock(f(512), f(256)));
  s->push_back(UpBlock(f(256), f(128)));
  s->push_back(UpBlock(f(128), f(64)));
  trunk = register_module("trunk", s);
  head = register_module("head", Head(f(64), kImageChannels, Activation::Tanh));
  feature_channels_ = f(64);
}

CoarseOutput CoarseGeneratorImpl::forward(const torch::Tensor& cond_half) {
  auto features = trunk->forward(cond_half);
  return {head(features), features};
}

FineGeneratorImpl::FineGeneratorImpl(const NetworkOptions& opt) {
  const auto f = [&](std::int64_t k) { return opt.filters(k); };
  // The coarse u64 output is summed into the d64 output, so both widths must agree.
  stem = register_module("stem", torch::nn::Sequential(ConvBlock(kConditionChannels, f(32), 7, 1, 3, Activation::ReLU),
                                                       ConvBlock(f(32), f(64), 3, 2, 1, Activation::ReLU)));
  trunk = register_module("trunk", torch::nn::Sequential(ResidualBlock(f(64), f(64)), ResidualBlock(f(64), f(64)),
                                                         ResidualBlock(f(64), f(64)), UpBlock(f(64), f(32))));
  image_branch = register_module("image_branch", Head(f(32), kImageChannels, Activation::Tanh));
  boundary_branch = register_module("boundary_branch", Head(f(32), kBoundaryChannels, Activation::None));
  fusion = register_module("fusion",
                           torch::nn::Sequential(ResidualBlock(kImageChannels + kBoundaryChannels, f(64)),
                                                 ResidualBlock(f(64), f(64))));
  final_head = register_module("final_head", Head(f(64), kImageChannels, Activation::Tanh));
}

FineOutput FineGeneratorImpl::forward(const torch::Tensor& cond_full, const torch::Tensor& coarse_features) {
  auto local = stem->forward(cond_full);
  if (local.sizes() != coarse_features.sizes()) {
    throw std::invalid_argument("fine generator: fusion shape mismatch, fine trunk " + c10::str(local.sizes()) +
                                " vs coarse features " + c10::str(coarse_features.sizes()));
  }
  auto h = trunk->forward(local + coarse_features);
  auto branch_image = image_branch(h);
  auto boundary_prob = torch::softmax(boundary_branch(h), 1);
  auto fused = torch::relu(fusion->forward(torch::cat({branch_image, boundary_prob}, 1)));
  return {final_head(fused), branch_image, boundary_prob};
}

torch::Tensor one_hot_batch(const torch::Tensor& codes) {
  TORCH_CHECK(codes.dim() == 3, "one_hot_batch: expected N x H x W codes");
  return F::one_hot(codes.to(torch::kLong), kConditionChannels).permute({0, 3, 1, 2})
      .to(torch::typeMetaToScalarType(torch::get_default_dtype()))
      .contiguous();
}

torch::Tensor decimate_codes(const torch::Tensor& codes) {
  using torch::indexing::Slice;
  return codes.index({Slice(), Slice(0, torch::indexing::None, 2), Slice(0, torch::indexing::None, 2)}).contiguous();
}

void check_generator_input_size(std::int64_t height, std::int64_t width) {
  if (height <= 0 || width <= 0 || height % kGeneratorSizeMultiple || width % kGeneratorSizeMultiple) {
    throw std::invalid_argument("generator: input " + std::to_string(height) + "x" + std::to_string(width) +
                                " must have both dimensions divisible by " +
                                std::to_string(kGeneratorSizeMultiple));
  }
}

GeneratorBundleImpl::GeneratorBundleImpl(const NetworkOptions& opt) {
  coarse = register_module("coarse", CoarseGenerator(opt));
  fine = register_module("fine", FineGenerator(opt));
  initialize_weights(*this, opt.seed);
}

GeneratorOutput GeneratorBundleImpl::forward(const torch::Tensor& codes) {
  check_generator_input_size(codes.size(1), codes.size(2));
  auto c = coarse->forward(one_hot_batch(decimate_codes(codes)));
  auto f = fine->forward(one_hot_batch(codes), c.features);
  return {f.final_image, f.branch_image, f.boundary_prob, c.image};
}

PatchDiscriminatorImpl::PatchDiscriminatorImpl(std::int64_t in_channels, const NetworkOptions& opt) {
  std::int64_t in = in_channels;
  for (std::int64_t k : {64, 128, 256, 512}) {
    blocks_.push_back(register_module("block" + std::to_string(blocks_.size()),
                                      ConvBlock(in, opt.filters(k), 4, 2, 2, Activation::LeakyReLU)));
    in = opt.filters(k);
  }
  out = register_module("out", torch::nn::Conv2d(torch::nn::Conv2dOptions(in, 1, 4).stride(1).padding(1)));
}

DiscriminatorOutput PatchDiscriminatorImpl::forward(const torch::Tensor& x) {
  DiscriminatorOutput result;
  auto h = x;
  for (auto& b : blocks_) {
    h = b(h);
    result.features.push_back(h);
  }
  result.prediction = torch::sigmoid(out(h));
  return result;
}

std::int64_t patch_output_size(std::int64_t n) {
  for (int i = 0; i < 4; ++i) n = (n + 2 * 2 - 4) / 2 + 1;
  return n + 2 * 1 - 4 + 1;
}

DiscriminatorEnsembleImpl::DiscriminatorEnsembleImpl(const NetworkOptions& opt) {
  for (int k = 0; k < kNumDiscriminators; ++k) {
    members.push_back(register_module("member" + std::to_string(k),
                                      PatchDiscriminator(kImageChannels + kConditionChannels, opt)));
  }
  initialize_weights(*this, opt.seed ^ 0x5eedd15c0ULL);
}

std::vector<DiscriminatorOutput> DiscriminatorEnsembleImpl::forward(const torch::Tensor& image,
                                                                    const torch::Tensor& cond) {
  TORCH_CHECK(image.dim() == 4 && cond.dim() == 4 && image.size(2) == cond.size(2) && image.size(3) == cond.size(3),
              "discriminator: image ", image.sizes(), " and condition ", cond.sizes(), " disagree");
  auto x = torch::cat({image, cond}, 1);
  std::vector<DiscriminatorOutput> outputs;
  outputs.reserve(members.size());
  for (std::size_t k = 0; k < members.size(); ++k) {
    const std::int64_t factor = std::int64_t{1} << k;
    auto input = k == 0 ? x
                        : F::interpolate(x, F::InterpolateFuncOptions()
                                                .size(std::vector<std::int64_t>{x.size(2) / factor, x.size(3) / factor})
                                                .mode(torch::kBilinear)
                                                .align_corners(false));
    outputs.push_back(members[k]->forward(input));
  }
  return outputs;
}

void initialize_weights(torch::nn::Module& module, std::uint64_t seed) {
  auto gen = at::make_generator<at::CPUGeneratorImpl>(seed);
  torch::NoGradGuard no_grad;
  auto init = [&](torch::nn::Module& m) {
    if (auto* conv = m.as<torch::nn::Conv2d>()) {
      conv->weight.normal_(0.0, 0.02, gen);
      if (conv->bias.defined()) conv->bias.zero_();
    } else if (auto* deconv = m.as<torch::nn::ConvTranspose2d>()) {
      deconv->weight.normal_(0.0, 0.02, gen);
      if (deconv->bias.defined()) deconv->bias.zero_();
    } else if (auto* bn = m.as<torch::nn::BatchNorm2d>()) {
      bn->weight.fill_(1.0);
      bn->bias.zero_();
    }
  };
  // Modules are often still under construction here, so avoid shared_from_this.
  init(module);
  for (auto& m : module.modules(/*include_self=*/false)) init(*m);
}

std::int64_t parameter_count(const torch::nn::Module& module) {
  std::int64_t n = 0;
  for (const auto& p : module.parameters()) n += p.numel();
  return n;
}

void set_trainable(torch::nn::Module& module, bool trainable) {
  for (auto& p : module.parameters()) p.set_requires_grad(trainable);
}

}  // namespace segaug

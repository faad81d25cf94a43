#pragma once

#include <torch/torch.h>

#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>

#include "segaug/tensor.hpp"

namespace segaug {

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Named tensors plus free-form metadata. Names are dot-separated hierarchies
// such as "generator.coarse.trunk.0.conv.weight".
struct Checkpoint {
  std::map<std::string, Tensor> tensors;
  std::map<std::string, std::string> meta;

  const Tensor& tensor(const std::string& name) const;
  const std::string& meta_value(const std::string& key) const;
};

/// Single-file archive:
///   "TNSA" | u8 version (=1) | u32 entry count |
///   entries of { u32 name length | name | u64 blob length | blob }
/// The first entry is "manifest": UTF-8 lines "tensor <name> <shape>" and
/// "meta <key> <value>". Every other entry is one .tnsr blob named after its
/// tensor. Written atomically.
void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

std::string manifest_text(const Checkpoint& ckpt);

// torch <-> Tensor. Only float32 (torch float) and uint8 are supported.
Tensor from_torch(const torch::Tensor& t);
torch::Tensor to_torch(const Tensor& t);

// Copies all floating parameters and buffers under prefix + "." + name.
void export_module(const torch::nn::Module& module, const std::string& prefix, Checkpoint& ckpt);
// Strict: every floating parameter/buffer must be present with the same shape.
void import_module(torch::nn::Module& module, const std::string& prefix, const Checkpoint& ckpt);

// Adam moments keyed by the module's parameter names; step counts go to meta.
void export_adam(const torch::optim::Adam& opt, const torch::nn::Module& module, const std::string& prefix,
                 Checkpoint& ckpt);
void import_adam(torch::optim::Adam& opt, const torch::nn::Module& module, const std::string& prefix,
                 const Checkpoint& ckpt);

}  // namespace segaug

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "segaug/tensor.hpp"

namespace segaug {

// Raised when a .tnsr stream is malformed. field() names the offending part of
// the header or payload ("magic", "version", "dtype", "ndim", "dims", "payload").
class TensorFormatError : public std::runtime_error {
 public:
  TensorFormatError(std::string field, const std::string& what)
      : std::runtime_error(what), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

/// .tnsr layout, little-endian:
///   "TNSR" | u8 version (=1) | u8 dtype (0 float32, 1 uint8) | u8 ndim |
///   ndim x u32 dims | row-major payload
inline constexpr std::uint8_t kTensorFormatVersion = 1;

std::vector<std::uint8_t> encode_tensor(const Tensor& t);
Tensor decode_tensor(std::span<const std::uint8_t> buffer);

void write_tensor(const Tensor& t, const std::filesystem::path& path);
Tensor read_tensor(const std::filesystem::path& path);

// Whole-file helpers shared with the checkpoint archive.
std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
// Writes to a sibling temp file then renames over the target.
void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

}  // namespace segaug

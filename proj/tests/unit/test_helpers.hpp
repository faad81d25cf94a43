#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include "segaug/tensor.hpp"

namespace segaug::testing {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::uint64_t counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("segaug_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

// Owning copies, safe to iterate when the tensor is a temporary.
inline std::vector<std::uint8_t> bytes_of(const Tensor& t) { return {t.bytes().begin(), t.bytes().end()}; }
inline std::vector<float> floats_of(const Tensor& t) { return {t.floats().begin(), t.floats().end()}; }

inline Tensor random_codes(std::size_t h, std::size_t w, std::uint8_t max_code, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> d(0, max_code);
  Tensor t(DType::UInt8, {h, w});
  for (auto& v : t.bytes()) v = static_cast<std::uint8_t>(d(rng));
  return t;
}

inline Tensor random_mask(std::size_t h, std::size_t w, double p, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution d(p);
  Tensor t(DType::UInt8, {h, w});
  for (auto& v : t.bytes()) v = d(rng) ? 1 : 0;
  return t;
}

}  // namespace segaug::testing

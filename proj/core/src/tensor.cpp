#include "segaug/tensor.hpp"

#include <cstring>
#include <functional>
#include <numeric>
#include <sstream>

namespace segaug {

std::string to_string(DType dtype) {
  switch (dtype) {
    case DType::Float32:
      return "float32";
    case DType::UInt8:
      return "uint8";
  }
  return "unknown";
}

std::size_t element_count(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  return os.str();
}

Tensor::Tensor(DType dtype, Shape shape) : dtype_(dtype), shape_(std::move(shape)) {
  const auto n = element_count(shape_);
  if (dtype_ == DType::Float32) {
    data_ = std::vector<float>(n, 0.0f);
  } else {
    data_ = std::vector<std::uint8_t>(n, 0);
  }
}

Tensor Tensor::from_floats(Shape shape, std::vector<float> values) {
  if (element_count(shape) != values.size()) {
    throw std::invalid_argument("tensor: " + std::to_string(values.size()) +
                                " values do not fill shape " + shape_string(shape));
  }
  Tensor t;
  t.dtype_ = DType::Float32;
  t.shape_ = std::move(shape);
  t.data_ = std::move(values);
  return t;
}

Tensor Tensor::from_bytes(Shape shape, std::vector<std::uint8_t> values) {
  if (element_count(shape) != values.size()) {
    throw std::invalid_argument("tensor: " + std::to_string(values.size()) +
                                " values do not fill shape " + shape_string(shape));
  }
  Tensor t;
  t.dtype_ = DType::UInt8;
  t.shape_ = std::move(shape);
  t.data_ = std::move(values);
  return t;
}

std::span<float> Tensor::floats() {
  if (dtype_ != DType::Float32) throw std::logic_error("tensor: float access on uint8 tensor");
  return std::get<std::vector<float>>(data_);
}

std::span<const float> Tensor::floats() const {
  if (dtype_ != DType::Float32) throw std::logic_error("tensor: float access on uint8 tensor");
  return std::get<std::vector<float>>(data_);
}

std::span<std::uint8_t> Tensor::bytes() {
  if (dtype_ != DType::UInt8) throw std::logic_error("tensor: uint8 access on float32 tensor");
  return std::get<std::vector<std::uint8_t>>(data_);
}

std::span<const std::uint8_t> Tensor::bytes() const {
  if (dtype_ != DType::UInt8) throw std::logic_error("tensor: uint8 access on float32 tensor");
  return std::get<std::vector<std::uint8_t>>(data_);
}

bool operator==(const Tensor& a, const Tensor& b) {
  return a.dtype_ == b.dtype_ && a.shape_ == b.shape_ && a.data_ == b.data_;
}

bool bitwise_equal(const Tensor& a, const Tensor& b) {
  if (a.dtype() != b.dtype() || a.shape() != b.shape()) return false;
  if (a.dtype() == DType::UInt8) return a == b;
  const auto fa = a.floats();
  const auto fb = b.floats();
  return std::memcmp(fa.data(), fb.data(), fa.size_bytes()) == 0;
}

}  // namespace segaug

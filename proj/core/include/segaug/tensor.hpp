#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace segaug {

enum class DType : std::uint8_t { Float32 = 0, UInt8 = 1 };

std::string to_string(DType dtype);

using Shape = std::vector<std::size_t>;

std::size_t element_count(const Shape& shape);
std::string shape_string(const Shape& shape);

// Dense row-major array carrying images, label maps and network parameters.
// The element count always equals the product of the shape.
class Tensor {
 public:
  Tensor() : Tensor(DType::Float32, Shape{0}) {}
  Tensor(DType dtype, Shape shape);

  static Tensor zeros(DType dtype, Shape shape) { return Tensor(dtype, std::move(shape)); }
  static Tensor from_floats(Shape shape, std::vector<float> values);
  static Tensor from_bytes(Shape shape, std::vector<std::uint8_t> values);

  DType dtype() const noexcept { return dtype_; }
  const Shape& shape() const noexcept { return shape_; }
  std::size_t ndim() const noexcept { return shape_.size(); }
  std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
  std::size_t size() const noexcept { return element_count(shape_); }

  std::span<float> floats();
  std::span<const float> floats() const;
  std::span<std::uint8_t> bytes();
  std::span<const std::uint8_t> bytes() const;

  // 2D accessors; only valid on ndim()==2 tensors of the matching dtype.
  float& at(std::size_t row, std::size_t col) { return floats()[row * shape_[1] + col]; }
  float at(std::size_t row, std::size_t col) const { return floats()[row * shape_[1] + col]; }
  std::uint8_t& code(std::size_t row, std::size_t col) { return bytes()[row * shape_[1] + col]; }
  std::uint8_t code(std::size_t row, std::size_t col) const { return bytes()[row * shape_[1] + col]; }

  friend bool operator==(const Tensor& a, const Tensor& b);

 private:
  DType dtype_;
  Shape shape_;
  std::variant<std::vector<float>, std::vector<std::uint8_t>> data_;
};

// Bitwise comparison (distinguishes -0.0f from 0.0f, unlike operator==).
bool bitwise_equal(const Tensor& a, const Tensor& b);

}  // namespace segaug

#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace s3d {

/// Raised whenever operand extents do not satisfy an operation's contract.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

using Shape = std::vector<std::size_t>;

std::string to_string(const Shape& shape);
std::size_t element_count(const Shape& shape);

/// Dense row-major tensor of doubles.
///
/// The element count always equals the product of the extents (1 for a
/// rank-0 tensor). Copies are deep.
class Tensor {
 public:
  Tensor() : shape_{}, data_(1, 0.0) {}
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> data);

  static Tensor scalar(double value) { return Tensor(Shape{}, {value}); }
  static Tensor from(std::initializer_list<double> values);

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t extent(std::size_t axis) const;
  std::size_t size() const noexcept { return data_.size(); }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }

  double& operator[](std::size_t i) noexcept { return data_[i]; }
  double operator[](std::size_t i) const noexcept { return data_[i]; }

  /// Multi-index access; the index count must equal the rank.
  double& at(std::initializer_list<std::size_t> index);
  double at(std::initializer_list<std::size_t> index) const;

  /// Same data, new extents with the same element count.
  Tensor reshaped(Shape shape) const;

  void fill(double value);
  bool all_finite() const noexcept;

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  std::size_t offset(std::initializer_list<std::size_t> index) const;

  Shape shape_;
  std::vector<double> data_;
};

/// Non-negative integer tensor, used for pooling argmax records.
struct IndexTensor {
  Shape shape;
  std::vector<std::size_t> data;

  friend bool operator==(const IndexTensor&, const IndexTensor&) = default;
};

/// Throws ShapeError naming both shapes unless they are identical.
void require_same_shape(const Tensor& a, const Tensor& b, const char* what);

double dot(const Tensor& a, const Tensor& b);
double max_abs_diff(const Tensor& a, const Tensor& b);

}  // namespace s3d

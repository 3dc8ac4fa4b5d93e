#include "s3d/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace s3d {

std::string to_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

std::size_t element_count(const Shape& shape) {
  std::size_t n = 1;
  for (auto e : shape) n *= e;
  return n;
}

Tensor::Tensor(Shape shape, double fill)
    : shape_(std::move(shape)), data_(element_count(shape_), fill) {}

Tensor::Tensor(Shape shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  if (data_.size() != element_count(shape_)) {
    throw ShapeError("tensor data length " + std::to_string(data_.size()) +
                     " does not match shape " + to_string(shape_));
  }
}

Tensor Tensor::from(std::initializer_list<double> values) {
  return Tensor(Shape{values.size()}, std::vector<double>(values));
}

std::size_t Tensor::extent(std::size_t axis) const {
  if (axis >= shape_.size()) {
    throw ShapeError("axis " + std::to_string(axis) + " out of range for " +
                     to_string(shape_));
  }
  return shape_[axis];
}

std::size_t Tensor::offset(std::initializer_list<std::size_t> index) const {
  if (index.size() != shape_.size()) {
    throw ShapeError("index rank " + std::to_string(index.size()) +
                     " does not match tensor " + to_string(shape_));
  }
  std::size_t off = 0;
  std::size_t axis = 0;
  for (auto i : index) {
    if (i >= shape_[axis]) {
      throw ShapeError("index out of range for " + to_string(shape_));
    }
    off = off * shape_[axis] + i;
    ++axis;
  }
  return off;
}

double& Tensor::at(std::initializer_list<std::size_t> index) {
  return data_[offset(index)];
}

double Tensor::at(std::initializer_list<std::size_t> index) const {
  return data_[offset(index)];
}

Tensor Tensor::reshaped(Shape shape) const {
  if (element_count(shape) != data_.size()) {
    throw ShapeError("cannot reshape " + to_string(shape_) + " to " +
                     to_string(shape));
  }
  return Tensor(std::move(shape), data_);
}

void Tensor::fill(double value) { std::fill(data_.begin(), data_.end(), value); }

bool Tensor::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(),
                     [](double v) { return std::isfinite(v); });
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* what) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(what) + ": shape mismatch " +
                     to_string(a.shape()) + " vs " + to_string(b.shape()));
  }
}

double dot(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "dot");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "max_abs_diff");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    m = std::max(m, std::abs(a[i] - b[i]));
  }
  return m;
}

}  // namespace s3d

#pragma once

#include <functional>

#include "s3d/tensor.hpp"

namespace s3d {

/// Central differences (f(x + h e_i) - f(x - h e_i)) / 2h for every element.
Tensor finite_difference_grad(const std::function<double(const Tensor&)>& f,
                              const Tensor& x, double h = 1e-5);

/// |a - b| / max(|a|, |b|, floor)
double relative_error(double a, double b, double floor = 1e-8);

/// Largest relative_error over matching elements.
double max_relative_error(const Tensor& a, const Tensor& b,
                          double floor = 1e-8);

}  // namespace s3d

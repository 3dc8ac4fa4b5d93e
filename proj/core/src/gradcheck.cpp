#include "s3d/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace s3d {

Tensor finite_difference_grad(const std::function<double(const Tensor&)>& f,
                              const Tensor& x, double h) {
  Tensor grad(x.shape());
  Tensor probe = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double orig = probe[i];
    probe[i] = orig + h;
    const double up = f(probe);
    probe[i] = orig - h;
    const double down = f(probe);
    probe[i] = orig;
    grad[i] = (up - down) / (2.0 * h);
  }
  return grad;
}

double relative_error(double a, double b, double floor) {
  const double denom = std::max({std::abs(a), std::abs(b), floor});
  return std::abs(a - b) / denom;
}

double max_relative_error(const Tensor& a, const Tensor& b, double floor) {
  require_same_shape(a, b, "max_relative_error");
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    worst = std::max(worst, relative_error(a[i], b[i], floor));
  }
  return worst;
}

}  // namespace s3d

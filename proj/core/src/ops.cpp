#include "s3d/ops.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace s3d {

Tensor relu(const Tensor& input) {
  Tensor out(input.shape());
  for (std::size_t i = 0; i < input.size(); ++i) {
    out[i] = input[i] > 0.0 ? input[i] : 0.0;
  }
  return out;
}

Tensor relu_backward(const Tensor& grad_out, const Tensor& input) {
  require_same_shape(grad_out, input, "relu_backward");
  Tensor out(input.shape());
  for (std::size_t i = 0; i < input.size(); ++i) {
    out[i] = input[i] > 0.0 ? grad_out[i] : 0.0;
  }
  return out;
}

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  Tensor out(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
  return out;
}

void accumulate(Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "accumulate");
  for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
}

MaxPoolResult maxpool_axis(const Tensor& input, std::size_t axis) {
  if (axis >= input.rank()) {
    throw ShapeError("maxpool_axis: axis " + std::to_string(axis) +
                     " out of range for " + to_string(input.shape()));
  }
  const Shape& shape = input.shape();
  const std::size_t len = shape[axis];
  if (len == 0) {
    throw ShapeError("maxpool_axis: cannot pool an empty axis of " +
                     to_string(shape));
  }
  std::size_t outer = 1;
  for (std::size_t a = 0; a < axis; ++a) outer *= shape[a];
  std::size_t inner = 1;
  for (std::size_t a = axis + 1; a < shape.size(); ++a) inner *= shape[a];

  Shape reduced;
  for (std::size_t a = 0; a < shape.size(); ++a) {
    if (a != axis) reduced.push_back(shape[a]);
  }
  MaxPoolResult r{Tensor(reduced),
                  IndexTensor{reduced, std::vector<std::size_t>(outer * inner)}};
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t i = 0; i < inner; ++i) {
      const std::size_t base = o * len * inner + i;
      double best = input[base];
      std::size_t best_idx = 0;
      for (std::size_t k = 1; k < len; ++k) {
        const double v = input[base + k * inner];
        if (v > best) {
          best = v;
          best_idx = k;
        }
      }
      r.values[o * inner + i] = best;
      r.arg_indices.data[o * inner + i] = best_idx;
    }
  }
  return r;
}

LossResult sigmoid_bce_loss(const Tensor& logits, const Tensor& targets) {
  require_same_shape(logits, targets, "sigmoid_bce_loss");
  const std::size_t n = logits.size();
  LossResult r{0.0, Tensor(logits.shape())};
  if (n == 0) return r;
  const double inv_n = 1.0 / static_cast<double>(n);
  // Extended accumulator: the rounding of a plain running sum dominates the
  // loss noise that finite-difference checks see.
  long double total = 0.0L;
  for (std::size_t i = 0; i < n; ++i) {
    const double y = targets[i];
    if (y != 0.0 && y != 1.0) {
      throw std::invalid_argument("sigmoid_bce_loss: target at flat index " +
                                  std::to_string(i) + " is not binary");
    }
    const double z = logits[i];
    // -[y log g(z) + (1 - y) log(1 - g(z))] = max(z, 0) - z y + log(1 + e^-|z|)
    total += std::max(z, 0.0) - z * y + std::log1p(std::exp(-std::abs(z)));
    const double p = z >= 0.0 ? 1.0 / (1.0 + std::exp(-z))
                              : std::exp(z) / (1.0 + std::exp(z));
    r.grad_logits[i] = (p - y) * inv_n;
  }
  r.loss = static_cast<double>(total / static_cast<long double>(n));
  return r;
}

}  // namespace s3d

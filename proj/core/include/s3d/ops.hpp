#pragma once

#include <cstddef>

#include "s3d/tensor.hpp"

namespace s3d {

Tensor relu(const Tensor& input);

/// Passes grad_out where input > 0; the subgradient at exactly 0 is 0.
Tensor relu_backward(const Tensor& grad_out, const Tensor& input);

Tensor add(const Tensor& a, const Tensor& b);

/// In-place a += b for identically shaped tensors.
void accumulate(Tensor& a, const Tensor& b);

struct MaxPoolResult {
  Tensor values;
  IndexTensor arg_indices;
};

/// Reduces `axis` by maximum. Ties resolve to the smallest index.
MaxPoolResult maxpool_axis(const Tensor& input, std::size_t axis);

struct LossResult {
  double loss = 0.0;
  Tensor grad_logits;
};

/// Mean binary cross-entropy of sigmoid(logits) against {0, 1} targets over
/// every element, with the gradient w.r.t. the logits.
LossResult sigmoid_bce_loss(const Tensor& logits, const Tensor& targets);

}  // namespace s3d

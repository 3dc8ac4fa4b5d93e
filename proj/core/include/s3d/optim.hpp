#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "s3d/tensor.hpp"

namespace s3d {

struct RmsPropOptions {
  double lr = 1e-3;
  double decay = 0.9;
  double epsilon = 1e-8;
};

/// Mean-squared-gradient caches, one per parameter, plus the step count.
struct OptimizerState {
  std::vector<Tensor> cache;
  std::uint64_t steps = 0;

  /// Zero caches shaped like `params`.
  static OptimizerState for_parameters(std::span<Tensor* const> params);
};

/// cache <- decay * cache + (1 - decay) * g^2
/// param <- param - lr * g / (sqrt(cache) + epsilon)
///
/// An empty state is sized on first use. Throws ShapeError when any
/// param / grad / cache triple disagrees in shape.
void rmsprop_step(std::span<Tensor* const> params,
                  std::span<const Tensor* const> grads, OptimizerState& state,
                  const RmsPropOptions& opts);

}  // namespace s3d

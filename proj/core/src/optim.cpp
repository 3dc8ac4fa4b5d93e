#include "s3d/optim.hpp"

#include <cmath>
#include <string>

namespace s3d {

OptimizerState OptimizerState::for_parameters(std::span<Tensor* const> params) {
  OptimizerState s;
  s.cache.reserve(params.size());
  for (const Tensor* p : params) s.cache.emplace_back(p->shape());
  return s;
}

void rmsprop_step(std::span<Tensor* const> params,
                  std::span<const Tensor* const> grads, OptimizerState& state,
                  const RmsPropOptions& opts) {
  if (state.cache.empty() && !params.empty()) {
    state = OptimizerState::for_parameters(params);
  }
  if (params.size() != grads.size() || params.size() != state.cache.size()) {
    throw ShapeError("rmsprop_step: " + std::to_string(params.size()) +
                     " params, " + std::to_string(grads.size()) + " grads, " +
                     std::to_string(state.cache.size()) + " caches");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    require_same_shape(*params[i], *grads[i], "rmsprop_step param/grad");
    require_same_shape(*params[i], state.cache[i], "rmsprop_step param/cache");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor& p = *params[i];
    const Tensor& g = *grads[i];
    Tensor& c = state.cache[i];
    for (std::size_t j = 0; j < p.size(); ++j) {
      c[j] = opts.decay * c[j] + (1.0 - opts.decay) * g[j] * g[j];
      p[j] -= opts.lr * g[j] / (std::sqrt(c[j]) + opts.epsilon);
    }
  }
  ++state.steps;
}

}  // namespace s3d

#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "s3d/metrics.hpp"
#include "s3d/network.hpp"
#include "s3d/optim.hpp"
#include "s3d/scene.hpp"

namespace s3d {

struct TrainOptions {
  RmsPropOptions rmsprop;
  std::size_t epochs = 1;
  std::size_t max_steps = 0;  // 0 = no cap
  bool mirror_augment = true;
  std::uint64_t seed = 0;     // visiting order
};

struct EpochStats {
  std::size_t epoch = 0;  // 1-based
  double mean_loss = 0.0;
  double train_global_accuracy = 0.0;
  std::size_t steps = 0;  // cumulative
};

struct TrainResult {
  std::vector<EpochStats> epochs;
  OptimizerState optimizer;
};

/// Batch-size-1 RMSProp over `samples` (and their mirrors). Each epoch
/// visits the examples in a seeded shuffled order; training stops early
/// once `max_steps` updates have run. Training accuracy is measured after
/// each epoch on the un-mirrored samples.
TrainResult train(ResTdmModel& model, const std::vector<Sample>& samples,
                  const TrainOptions& opts,
                  const std::function<void(const EpochStats&)>& on_epoch = {});

/// Confusion matrix of predict() over `samples`, void truth ignored.
ConfusionMatrix evaluate(const ResTdmModel& model,
                         const std::vector<Sample>& samples);

}  // namespace s3d

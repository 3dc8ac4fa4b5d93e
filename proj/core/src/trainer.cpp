#include "s3d/trainer.hpp"

#include <random>
#include <utility>

namespace s3d {

TrainResult train(ResTdmModel& model, const std::vector<Sample>& samples,
                  const TrainOptions& opts,
                  const std::function<void(const EpochStats&)>& on_epoch) {
  const ResTdmConfig& cfg = model.config;
  cfg.validate();
  struct Example {
    Tensor input;
    Tensor target;
  };
  std::vector<Example> examples;
  for (const Sample& s : samples) {
    validate_sample(s, cfg.levels, cfg.num_classes);
    const RgbdFrame f = to_frame(s);
    examples.push_back({encode_input(f, cfg), encode_target(f, cfg)});
    if (opts.mirror_augment) {
      const RgbdFrame m = to_frame(mirror(s));
      examples.push_back({encode_input(m, cfg), encode_target(m, cfg)});
    }
  }

  TrainResult result;
  result.optimizer = OptimizerState::for_parameters(model.parameters());
  std::mt19937_64 rng(opts.seed);
  std::vector<std::size_t> order(examples.size());
  std::size_t steps = 0;
  for (std::size_t epoch = 1; epoch <= opts.epochs; ++epoch) {
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    for (std::size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[static_cast<std::size_t>(rng() % i)]);
    }
    double loss_sum = 0.0;
    std::size_t epoch_steps = 0;
    for (std::size_t idx : order) {
      if (opts.max_steps != 0 && steps >= opts.max_steps) break;
      const Example& ex = examples[idx];
      LossAndGradients lg = loss_and_gradients(model, ex.input, ex.target);
      const auto grads = std::as_const(lg.grads).parameters();
      rmsprop_step(model.parameters(), grads, result.optimizer, opts.rmsprop);
      loss_sum += lg.loss;
      ++epoch_steps;
      ++steps;
    }
    if (epoch_steps == 0) break;
    EpochStats stats;
    stats.epoch = epoch;
    stats.mean_loss = loss_sum / static_cast<double>(epoch_steps);
    stats.train_global_accuracy = global_accuracy(evaluate(model, samples));
    stats.steps = steps;
    result.epochs.push_back(stats);
    if (on_epoch) on_epoch(stats);
  }
  return result;
}

ConfusionMatrix evaluate(const ResTdmModel& model,
                         const std::vector<Sample>& samples) {
  ConfusionMatrix cm(model.config.num_classes);
  for (const Sample& s : samples) {
    cm.accumulate(s.labels, predict(model, to_frame(s)), true);
  }
  return cm;
}

}  // namespace s3d

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "run_config.hpp"
#include "s3d/image.hpp"
#include "s3d/scene.hpp"

namespace s3d::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitValidation = 1,
  kExitRuntime = 2,
};

/// Label colours for visualisations; void (0) is black.
std::array<std::uint8_t, 3> palette_color(std::uint16_t label);
Rgb8Image colorize(const LabelMap& labels);

/// Per-sample generator seed, independent of the split a sample lands in.
std::uint64_t sample_seed(std::uint64_t run_seed, std::size_t index);
SceneSpec scene_spec(const RunConfig& cfg, std::uint64_t seed);

// Each command validates `cfg` before touching disk, writes its report to
// `out`, and throws ConfigError for validation failures. Other exceptions
// are runtime failures; run_command maps both to exit codes.

void cmd_gen_data(const RunConfig& cfg, std::size_t count,
                  const std::filesystem::path& out_dir, std::ostream& out);

void cmd_train(const RunConfig& cfg, std::ostream& out);

struct EvalOptions {
  std::string split = "test";
  std::optional<std::filesystem::path> predictions;  // <id>.pred.pgm files
  bool ground_truth = false;  // score the labels against themselves
};
void cmd_eval(const RunConfig& cfg, const EvalOptions& opts, std::ostream& out);

struct PredictOptions {
  std::string split = "test";
  std::string sample;                 // with `out_stem`
  std::filesystem::path out_stem;     // writes <stem>.pred.pgm / .pred.ppm
  std::filesystem::path out_dir;      // or every sample of the split
};
void cmd_predict(const RunConfig& cfg, const PredictOptions& opts,
                 std::ostream& out);

/// Returns false when any residual reaches the tolerance.
bool cmd_check_geometry(const RunConfig& cfg, std::ostream& out);

/// Returns false when any gradient check fails.
bool cmd_grad_check(const RunConfig& cfg, std::ostream& out);

/// Runs `body`, printing diagnostics to `err` and mapping exceptions to
/// exit codes.
int run_command(const std::function<int()>& body, std::ostream& err);

}  // namespace s3d::cli

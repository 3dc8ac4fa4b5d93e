#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "s3d/geometry.hpp"
#include "s3d/network.hpp"
#include "s3d/optim.hpp"

namespace s3d::cli {

/// Invalid or inconsistent configuration; maps to exit code 1.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class SceneKind { kStreet, kDepthDiscriminative };

struct RunConfig {
  std::string dataset_root;
  std::size_t height = 32;
  std::size_t width = 32;
  std::size_t levels = 15;  // D
  std::size_t num_classes = 4;
  std::size_t num_scales = 2;
  std::size_t features = 8;
  RmsPropOptions rmsprop;
  std::size_t epochs = 1;
  std::size_t max_steps = 0;
  std::uint64_t seed = 0;
  InputMode mode = InputMode::kRgbVolume;
  bool s2d_zero_disparity = false;
  bool mirror_augment = true;
  std::string checkpoint;
  std::string log;  // defaults to <checkpoint>.log
  SceneKind scene = SceneKind::kStreet;
  std::array<double, 3> split_ratios{1.0, 0.0, 0.0};
  CameraModel camera{100.0, 100.0, 50.0, 50.0, 100.0, 0.5};
  std::size_t geometry_quadrics = 20;
  std::size_t geometry_points = 1000;
  bool grad_check_perturb = false;  // test hook: corrupts one backward pass

  ResTdmConfig network() const;
  std::string log_path() const;
};

/// key = value lines; '#' starts a comment. Throws ConfigError on syntax
/// errors.
std::map<std::string, std::string> parse_key_values(const std::string& text);

/// Applies `overrides` ("key=value") on top of `values` and converts to a
/// RunConfig. Unknown keys and malformed values throw ConfigError.
RunConfig make_run_config(std::map<std::string, std::string> values,
                          const std::vector<std::string>& overrides);

RunConfig load_run_config(const std::string& path,
                          const std::vector<std::string>& overrides);

}  // namespace s3d::cli

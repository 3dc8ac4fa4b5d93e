#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "s3d/conv.hpp"
#include "s3d/geometry.hpp"
#include "s3d/tensor.hpp"

namespace s3d {

/// How a frame is turned into network input.
enum class InputMode : std::uint8_t {
  kRgbVolume = 0,        // colour voxels, Ch = 3 ("s3d")
  kOccupancyVolume = 1,  // 1.0 occupancy voxels, Ch = 1 ("s3d-depth-only")
  kStacked2d = 2,        // RGB + scaled disparity as a 4-channel image ("s2d")
};

const char* to_string(InputMode mode);
/// Accepts "s3d", "s3d-depth-only", "s2d".
InputMode parse_input_mode(const std::string& name);

struct ResTdmConfig {
  std::size_t num_scales = 4;
  std::size_t features = 8;
  std::size_t num_classes = 2;
  std::size_t height = 16;
  std::size_t width = 16;
  std::size_t levels = 15;  // D; volumetric inputs have D + 1 disparity slots
  InputMode mode = InputMode::kRgbVolume;
  bool zero_disparity_channel = false;  // s2d only: colour-only ablation

  bool volumetric() const { return mode != InputMode::kStacked2d; }
  std::size_t in_channels() const;
  /// D + 1 for volumetric inputs, 1 for the 2D arm.
  std::size_t depth_extent() const;
  Extents3 kernel_extents() const;
  Shape input_shape() const;
  Shape output_shape() const;

  /// Throws std::invalid_argument unless H, W (and D + 1 when volumetric)
  /// divide by 2^num_scales and every count is positive.
  void validate() const;

  friend bool operator==(const ResTdmConfig&, const ResTdmConfig&) = default;
};

struct ResidualModule {
  ConvKernel first;
  ConvKernel second;

  friend bool operator==(const ResidualModule&, const ResidualModule&) = default;
};

/// Bottom-up/top-down network with residual lateral modules.
///
/// Scale 0 is the input resolution and scale i is 2^-i of it.
///   bottom_up[i]  C_{i+1}: scale i -> scale i + 1, stride 2
///   residual[i]   R_i at scale i; residual[0] reads the raw input
///   top_down[i]   DC_{i+1}: scale i + 1 -> scale i, stride 2
///   head          1x1x1 projection of F features onto k logits
///
/// Top-down, y_S = R_S(x_S) + x_S and y_i = R_i(x_i) + DC_{i+1}(y_{i+1}),
/// then logits = head(y_0). Every conv and deconv except the head is
/// followed by a ReLU.
struct ResTdmModel {
  ResTdmConfig config;
  std::vector<ConvKernel> bottom_up;
  std::vector<ResidualModule> residual;
  std::vector<ConvKernel> top_down;
  ConvKernel head;

  /// Weights and biases in declaration (checkpoint) order.
  std::vector<Tensor*> parameters();
  std::vector<const Tensor*> parameters() const;
  std::vector<std::string> parameter_names() const;
  std::size_t parameter_count() const;

  /// Same architecture, every parameter zero.
  ResTdmModel zeros_like() const;

  friend bool operator==(const ResTdmModel&, const ResTdmModel&) = default;
};

/// Uniform [-a, a] weights with a = sqrt(6 / fan_in), zero biases.
ResTdmModel build_model(const ResTdmConfig& cfg, std::uint64_t seed);

/// Input receptive fan of a layer's output unit, as used by build_model.
std::size_t fan_in(const ConvKernel& kernel, bool transposed);

Tensor encode_input(const RgbdFrame& frame, const ResTdmConfig& cfg);
Tensor encode_target(const RgbdFrame& frame, const ResTdmConfig& cfg);

Tensor forward(const ResTdmModel& model, const Tensor& input);
Tensor forward(const ResTdmModel& model, const VoxelVolume& volume);

struct LossAndGradients {
  double loss = 0.0;
  ResTdmModel grads;  // zeros_like(model) filled with dL/dparam
};

LossAndGradients loss_and_gradients(const ResTdmModel& model,
                                    const Tensor& input, const Tensor& target);

/// Loss only; the same value loss_and_gradients reports.
double loss_value(const ResTdmModel& model, const Tensor& input,
                  const Tensor& target);

LabelMap predict(const ResTdmModel& model, const RgbdFrame& frame);

}  // namespace s3d

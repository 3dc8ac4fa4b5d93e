#pragma once

#include <array>
#include <cstddef>

#include "s3d/tensor.hpp"

namespace s3d {

/// Weights of shape (A, B, M, N, L) plus a bias vector.
///
/// For a convolution, A is the output channel count and B the input channel
/// count, and the bias has A entries. A deconvolution reuses the layout of
/// the convolution it transposes: A is the deconvolution's input channel
/// count, B its output channel count, and the bias has B entries. A 2D
/// kernel has L == 1. Spatial extents are odd.
struct ConvKernel {
  Tensor weights;
  Tensor bias;

  ConvKernel() = default;
  ConvKernel(Tensor weights, Tensor bias);

  static ConvKernel zeros(std::size_t a, std::size_t b, std::size_t m,
                          std::size_t n, std::size_t l, std::size_t bias_len);

  std::size_t axis0() const { return weights.extent(0); }
  std::size_t axis1() const { return weights.extent(1); }
  std::array<std::size_t, 3> extents() const {
    return {weights.extent(2), weights.extent(3), weights.extent(4)};
  }

  friend bool operator==(const ConvKernel&, const ConvKernel&) = default;
};

using Extents3 = std::array<std::size_t, 3>;

/// Per-axis zero padding (height, width, disparity).
struct Padding3 {
  std::size_t h = 0;
  std::size_t w = 0;
  std::size_t d = 0;

  static constexpr Padding3 uniform(std::size_t p) { return {p, p, p}; }
};

struct Padding2 {
  std::size_t h = 0;
  std::size_t w = 0;
};

/// floor((in + 2 pad - k) / stride) + 1 per axis; throws when the padded
/// input is smaller than the kernel.
Extents3 conv_output_extents(const Extents3& in, const Extents3& kernel,
                             std::size_t stride, const Padding3& pad);

struct ConvGradients {
  Tensor input;
  Tensor weights;
  Tensor bias;
};

/// input (Cin, H, W, D) -> (Cout, H', W', D').
Tensor conv3d_forward(const Tensor& input, const ConvKernel& kernel,
                      std::size_t stride, const Padding3& pad);

ConvGradients conv3d_backward(const Tensor& grad_out, const Tensor& input,
                              const ConvKernel& kernel, std::size_t stride,
                              const Padding3& pad);

/// input (Cin, H, W) with a kernel whose L extent is 1.
Tensor conv2d_forward(const Tensor& input, const ConvKernel& kernel,
                      std::size_t stride, const Padding2& pad);

ConvGradients conv2d_backward(const Tensor& grad_out, const Tensor& input,
                              const ConvKernel& kernel, std::size_t stride,
                              const Padding2& pad);

/// Transpose of conv3d_forward with the same weights, plus bias.
///
/// `output_extents` selects among the spatial sizes that a stride > 1
/// convolution maps onto the input's extents.
Tensor deconv3d_forward(const Tensor& input, const ConvKernel& kernel,
                        std::size_t stride, const Padding3& pad,
                        const Extents3& output_extents);

ConvGradients deconv3d_backward(const Tensor& grad_out, const Tensor& input,
                                const ConvKernel& kernel, std::size_t stride,
                                const Padding3& pad);

}  // namespace s3d

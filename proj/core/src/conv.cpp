#include "s3d/conv.hpp"

#include <algorithm>
#include <string>

namespace s3d {
namespace {

std::string extents_string(const Extents3& e) {
  return to_string(Shape{e[0], e[1], e[2]});
}

struct Geometry {
  std::size_t in_channels;
  std::size_t out_channels;
  Extents3 in;
  Extents3 out;
  Extents3 k;
  std::size_t stride;
  Extents3 pad;
};

// Output positions o along one axis whose tap `t` lands inside the input:
// 0 <= o * stride + t - pad < in.
struct Range {
  std::size_t lo;
  std::size_t hi;  // exclusive
};

Range valid_range(std::size_t t, std::size_t pad, std::size_t stride,
                  std::size_t in, std::size_t out) {
  std::size_t lo = 0;
  if (pad > t) lo = (pad - t + stride - 1) / stride;
  // o * stride <= in - 1 + pad - t
  if (in + pad < t + 1) return {0, 0};
  std::size_t hi = (in - 1 + pad - t) / stride + 1;
  if (hi > out) hi = out;
  if (lo > hi) lo = hi;
  return {lo, hi};
}

Extents3 spatial(const Tensor& t, const char* what) {
  if (t.rank() != 4) {
    throw ShapeError(std::string(what) + ": expected a rank-4 tensor, got " +
                     to_string(t.shape()));
  }
  return {t.extent(1), t.extent(2), t.extent(3)};
}

// Sums w * input over every tap into `out` (no bias). `out` is laid out as
// (kernel axis 0, out extents), `input` as (kernel axis 1, in extents).
void correlate(const Tensor& input, const Tensor& weights, const Geometry& g,
               Tensor& out) {
  const auto [H, W, D] = g.in;
  const auto [Ho, Wo, Do] = g.out;
  const auto [M, N, L] = g.k;
  const std::size_t s = g.stride;
  const double* in = input.data().data();
  const double* w = weights.data().data();
  double* o = out.data().data();
  for (std::size_t oc = 0; oc < g.out_channels; ++oc) {
    for (std::size_t ic = 0; ic < g.in_channels; ++ic) {
      const double* in_c = in + ic * H * W * D;
      double* out_c = o + oc * Ho * Wo * Do;
      for (std::size_t m = 0; m < M; ++m) {
        const Range rh = valid_range(m, g.pad[0], s, H, Ho);
        for (std::size_t n = 0; n < N; ++n) {
          const Range rw = valid_range(n, g.pad[1], s, W, Wo);
          for (std::size_t l = 0; l < L; ++l) {
            const Range rd = valid_range(l, g.pad[2], s, D, Do);
            const double wv =
                w[(((oc * g.in_channels + ic) * M + m) * N + n) * L + l];
            if (wv == 0.0) continue;
            for (std::size_t oh = rh.lo; oh < rh.hi; ++oh) {
              const std::size_t ih = oh * s + m - g.pad[0];
              for (std::size_t ow = rw.lo; ow < rw.hi; ++ow) {
                const std::size_t iw = ow * s + n - g.pad[1];
                const double* in_row = in_c + (ih * W + iw) * D;
                double* out_row = out_c + (oh * Wo + ow) * Do;
                for (std::size_t od = rd.lo; od < rd.hi; ++od) {
                  out_row[od] += wv * in_row[od * s + l - g.pad[2]];
                }
              }
            }
          }
        }
      }
    }
  }
}

// Adjoint of correlate: scatters `grad` (kernel axis 0, out extents) back onto
// `target` (kernel axis 1, in extents).
void scatter(const Tensor& grad, const Tensor& weights, const Geometry& g,
             Tensor& target) {
  const auto [H, W, D] = g.in;
  const auto [Ho, Wo, Do] = g.out;
  const auto [M, N, L] = g.k;
  const std::size_t s = g.stride;
  const double* go = grad.data().data();
  const double* w = weights.data().data();
  double* t = target.data().data();
  for (std::size_t ic = 0; ic < g.in_channels; ++ic) {
    double* t_c = t + ic * H * W * D;
    for (std::size_t oc = 0; oc < g.out_channels; ++oc) {
      const double* g_c = go + oc * Ho * Wo * Do;
      for (std::size_t m = 0; m < M; ++m) {
        const Range rh = valid_range(m, g.pad[0], s, H, Ho);
        for (std::size_t n = 0; n < N; ++n) {
          const Range rw = valid_range(n, g.pad[1], s, W, Wo);
          for (std::size_t l = 0; l < L; ++l) {
            const Range rd = valid_range(l, g.pad[2], s, D, Do);
            const double wv =
                w[(((oc * g.in_channels + ic) * M + m) * N + n) * L + l];
            if (wv == 0.0) continue;
            for (std::size_t oh = rh.lo; oh < rh.hi; ++oh) {
              const std::size_t ih = oh * s + m - g.pad[0];
              for (std::size_t ow = rw.lo; ow < rw.hi; ++ow) {
                const std::size_t iw = ow * s + n - g.pad[1];
                double* t_row = t_c + (ih * W + iw) * D;
                const double* g_row = g_c + (oh * Wo + ow) * Do;
                for (std::size_t od = rd.lo; od < rd.hi; ++od) {
                  t_row[od * s + l - g.pad[2]] += wv * g_row[od];
                }
              }
            }
          }
        }
      }
    }
  }
}

// d<grad, correlate(input, w)>/dw, written into `gw` (same layout as w).
void weight_gradient(const Tensor& grad, const Tensor& input,
                     const Geometry& g, Tensor& gw) {
  const auto [H, W, D] = g.in;
  const auto [Ho, Wo, Do] = g.out;
  const auto [M, N, L] = g.k;
  const std::size_t s = g.stride;
  const double* go = grad.data().data();
  const double* in = input.data().data();
  double* w = gw.data().data();
  for (std::size_t oc = 0; oc < g.out_channels; ++oc) {
    const double* g_c = go + oc * Ho * Wo * Do;
    for (std::size_t ic = 0; ic < g.in_channels; ++ic) {
      const double* in_c = in + ic * H * W * D;
      for (std::size_t m = 0; m < M; ++m) {
        const Range rh = valid_range(m, g.pad[0], s, H, Ho);
        for (std::size_t n = 0; n < N; ++n) {
          const Range rw = valid_range(n, g.pad[1], s, W, Wo);
          for (std::size_t l = 0; l < L; ++l) {
            const Range rd = valid_range(l, g.pad[2], s, D, Do);
            double acc = 0.0;
            for (std::size_t oh = rh.lo; oh < rh.hi; ++oh) {
              const std::size_t ih = oh * s + m - g.pad[0];
              for (std::size_t ow = rw.lo; ow < rw.hi; ++ow) {
                const std::size_t iw = ow * s + n - g.pad[1];
                const double* in_row = in_c + (ih * W + iw) * D;
                const double* g_row = g_c + (oh * Wo + ow) * Do;
                for (std::size_t od = rd.lo; od < rd.hi; ++od) {
                  acc += g_row[od] * in_row[od * s + l - g.pad[2]];
                }
              }
            }
            w[(((oc * g.in_channels + ic) * M + m) * N + n) * L + l] = acc;
          }
        }
      }
    }
  }
}

Tensor channel_sums(const Tensor& t) {
  const std::size_t C = t.extent(0);
  const std::size_t per = t.size() / (C == 0 ? 1 : C);
  Tensor out(Shape{C});
  for (std::size_t c = 0; c < C; ++c) {
    double acc = 0.0;
    for (std::size_t i = 0; i < per; ++i) acc += t[c * per + i];
    out[c] = acc;
  }
  return out;
}

void check_stride(std::size_t stride) {
  if (stride == 0) throw ShapeError("convolution stride must be positive");
}

// Geometry of the convolution whose input has extents `in`.
Geometry conv_geometry(std::size_t cin, std::size_t cout, const Extents3& in,
                       const ConvKernel& kernel, std::size_t stride,
                       const Padding3& pad) {
  check_stride(stride);
  Geometry g;
  g.in_channels = cin;
  g.out_channels = cout;
  g.in = in;
  g.k = kernel.extents();
  g.stride = stride;
  g.pad = {pad.h, pad.w, pad.d};
  g.out = conv_output_extents(in, g.k, stride, pad);
  return g;
}

Tensor to_volume(const Tensor& t, const char* what) {
  if (t.rank() != 3) {
    throw ShapeError(std::string(what) + ": expected a rank-3 tensor, got " +
                     to_string(t.shape()));
  }
  return t.reshaped({t.extent(0), t.extent(1), t.extent(2), 1});
}

Tensor drop_last_axis(const Tensor& t) {
  return t.reshaped({t.extent(0), t.extent(1), t.extent(2)});
}

void require_2d_kernel(const ConvKernel& kernel) {
  if (kernel.weights.extent(4) != 1) {
    throw ShapeError("conv2d: kernel " + to_string(kernel.weights.shape()) +
                     " has L != 1");
  }
}

}  // namespace

ConvKernel::ConvKernel(Tensor w, Tensor b)
    : weights(std::move(w)), bias(std::move(b)) {
  if (weights.rank() != 5) {
    throw ShapeError("kernel weights must be rank 5 (A, B, M, N, L), got " +
                     to_string(weights.shape()));
  }
  for (std::size_t axis = 2; axis < 5; ++axis) {
    if (weights.extent(axis) % 2 == 0) {
      throw ShapeError("kernel spatial extents must be odd, got " +
                       to_string(weights.shape()));
    }
  }
  if (bias.rank() != 1) {
    throw ShapeError("kernel bias must be rank 1, got " +
                     to_string(bias.shape()));
  }
}

ConvKernel ConvKernel::zeros(std::size_t a, std::size_t b, std::size_t m,
                             std::size_t n, std::size_t l,
                             std::size_t bias_len) {
  return ConvKernel(Tensor(Shape{a, b, m, n, l}), Tensor(Shape{bias_len}));
}

Extents3 conv_output_extents(const Extents3& in, const Extents3& kernel,
                             std::size_t stride, const Padding3& pad) {
  check_stride(stride);
  const Extents3 p{pad.h, pad.w, pad.d};
  Extents3 out{};
  for (std::size_t a = 0; a < 3; ++a) {
    if (in[a] == 0 || in[a] + 2 * p[a] < kernel[a]) {
      throw ShapeError("convolution output would be empty: input " +
                       extents_string(in) + ", kernel " +
                       extents_string(kernel));
    }
    out[a] = (in[a] + 2 * p[a] - kernel[a]) / stride + 1;
  }
  return out;
}

Tensor conv3d_forward(const Tensor& input, const ConvKernel& kernel,
                      std::size_t stride, const Padding3& pad) {
  const Extents3 in = spatial(input, "conv3d_forward");
  if (kernel.axis1() != input.extent(0)) {
    throw ShapeError("conv3d_forward: input " + to_string(input.shape()) +
                     " incompatible with kernel " +
                     to_string(kernel.weights.shape()));
  }
  if (kernel.bias.extent(0) != kernel.axis0()) {
    throw ShapeError("conv3d_forward: bias " + to_string(kernel.bias.shape()) +
                     " does not match kernel " +
                     to_string(kernel.weights.shape()));
  }
  const Geometry g = conv_geometry(kernel.axis1(), kernel.axis0(), in, kernel,
                                   stride, pad);
  Tensor out(Shape{g.out_channels, g.out[0], g.out[1], g.out[2]});
  const std::size_t per = g.out[0] * g.out[1] * g.out[2];
  for (std::size_t c = 0; c < g.out_channels; ++c) {
    std::fill_n(out.data().begin() + c * per, per, kernel.bias[c]);
  }
  correlate(input, kernel.weights, g, out);
  return out;
}

ConvGradients conv3d_backward(const Tensor& grad_out, const Tensor& input,
                              const ConvKernel& kernel, std::size_t stride,
                              const Padding3& pad) {
  const Extents3 in = spatial(input, "conv3d_backward");
  if (kernel.axis1() != input.extent(0)) {
    throw ShapeError("conv3d_backward: input " + to_string(input.shape()) +
                     " incompatible with kernel " +
                     to_string(kernel.weights.shape()));
  }
  const Geometry g = conv_geometry(kernel.axis1(), kernel.axis0(), in, kernel,
                                   stride, pad);
  const Shape expected{g.out_channels, g.out[0], g.out[1], g.out[2]};
  if (grad_out.shape() != expected) {
    throw ShapeError("conv3d_backward: grad_out " +
                     to_string(grad_out.shape()) + " vs forward output " +
                     to_string(expected));
  }
  ConvGradients grads{Tensor(input.shape()), Tensor(kernel.weights.shape()),
                      channel_sums(grad_out)};
  scatter(grad_out, kernel.weights, g, grads.input);
  weight_gradient(grad_out, input, g, grads.weights);
  return grads;
}

Tensor conv2d_forward(const Tensor& input, const ConvKernel& kernel,
                      std::size_t stride, const Padding2& pad) {
  require_2d_kernel(kernel);
  return drop_last_axis(conv3d_forward(to_volume(input, "conv2d_forward"),
                                       kernel, stride, {pad.h, pad.w, 0}));
}

ConvGradients conv2d_backward(const Tensor& grad_out, const Tensor& input,
                              const ConvKernel& kernel, std::size_t stride,
                              const Padding2& pad) {
  require_2d_kernel(kernel);
  ConvGradients g = conv3d_backward(to_volume(grad_out, "conv2d_backward"),
                                    to_volume(input, "conv2d_backward"),
                                    kernel, stride, {pad.h, pad.w, 0});
  g.input = drop_last_axis(g.input);
  return g;
}

Tensor deconv3d_forward(const Tensor& input, const ConvKernel& kernel,
                        std::size_t stride, const Padding3& pad,
                        const Extents3& output_extents) {
  const Extents3 in = spatial(input, "deconv3d_forward");
  if (kernel.axis0() != input.extent(0)) {
    throw ShapeError("deconv3d_forward: input " + to_string(input.shape()) +
                     " incompatible with kernel " +
                     to_string(kernel.weights.shape()));
  }
  if (kernel.bias.extent(0) != kernel.axis1()) {
    throw ShapeError("deconv3d_forward: bias " +
                     to_string(kernel.bias.shape()) +
                     " does not match kernel " +
                     to_string(kernel.weights.shape()));
  }
  const Geometry g = conv_geometry(kernel.axis1(), kernel.axis0(),
                                   output_extents, kernel, stride, pad);
  if (g.out != in) {
    throw ShapeError("deconv3d_forward: output extents " +
                     extents_string(output_extents) + " convolve to " +
                     extents_string(g.out) + ", not the input's " +
                     extents_string(in));
  }
  Tensor out(Shape{g.in_channels, output_extents[0], output_extents[1],
                   output_extents[2]});
  const std::size_t per =
      output_extents[0] * output_extents[1] * output_extents[2];
  for (std::size_t c = 0; c < g.in_channels; ++c) {
    std::fill_n(out.data().begin() + c * per, per, kernel.bias[c]);
  }
  scatter(input, kernel.weights, g, out);
  return out;
}

ConvGradients deconv3d_backward(const Tensor& grad_out, const Tensor& input,
                                const ConvKernel& kernel, std::size_t stride,
                                const Padding3& pad) {
  const Extents3 in = spatial(input, "deconv3d_backward");
  const Extents3 out = spatial(grad_out, "deconv3d_backward");
  if (kernel.axis0() != input.extent(0) ||
      kernel.axis1() != grad_out.extent(0)) {
    throw ShapeError("deconv3d_backward: input " + to_string(input.shape()) +
                     " / grad_out " + to_string(grad_out.shape()) +
                     " incompatible with kernel " +
                     to_string(kernel.weights.shape()));
  }
  const Geometry g =
      conv_geometry(kernel.axis1(), kernel.axis0(), out, kernel, stride, pad);
  if (g.out != in) {
    throw ShapeError("deconv3d_backward: grad_out " +
                     to_string(grad_out.shape()) +
                     " is not the forward output shape for input " +
                     to_string(input.shape()));
  }
  ConvGradients grads{Tensor(input.shape()), Tensor(kernel.weights.shape()),
                      channel_sums(grad_out)};
  correlate(grad_out, kernel.weights, g, grads.input);
  weight_gradient(input, grad_out, g, grads.weights);
  return grads;
}

}  // namespace s3d

#include "s3d/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "s3d/ops.hpp"

namespace s3d {

void CameraModel::validate() const {
  auto positive = [](double v) { return std::isfinite(v) && v > 0.0; };
  if (!positive(fx) || !positive(fy) || !positive(f) || !positive(b)) {
    throw std::invalid_argument(
        "camera model requires positive fx, fy, f, b (got fx=" +
        std::to_string(fx) + " fy=" + std::to_string(fy) +
        " f=" + std::to_string(f) + " b=" + std::to_string(b) + ")");
  }
  if (!std::isfinite(u0) || !std::isfinite(v0)) {
    throw std::invalid_argument("camera principal point must be finite");
  }
}

XyzPoint uvd_to_xyz(const UvdPoint& p, const CameraModel& cam) {
  if (!(p.d > 0.0)) {
    throw std::domain_error("uvd_to_xyz: disparity must be positive, got " +
                            std::to_string(p.d));
  }
  const double z = cam.fb() / p.d;
  return {(p.u - cam.u0) * z / cam.fx, (p.v - cam.v0) * z / cam.fy, z};
}

UvdPoint xyz_to_uvd(const XyzPoint& p, const CameraModel& cam) {
  if (!(p.z > 0.0)) {
    throw std::domain_error("xyz_to_uvd: depth must be positive, got " +
                            std::to_string(p.z));
  }
  return {cam.fx * p.x / p.z + cam.u0, cam.fy * p.y / p.z + cam.v0,
          cam.fb() / p.z};
}

QuadricSurface::QuadricSurface(const Mat4& a) : a_(a) {
  bool nonzero = false;
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) {
      if (!std::isfinite(a[i][j])) {
        throw std::invalid_argument("quadric matrix has non-finite entries");
      }
      if (a[i][j] != 0.0) nonzero = true;
      const double scale =
          std::max({1.0, std::abs(a[i][j]), std::abs(a[j][i])});
      if (std::abs(a[i][j] - a[j][i]) > 1e-12 * scale) {
        throw std::invalid_argument("quadric matrix is not symmetric");
      }
    }
  }
  if (!nonzero) throw std::invalid_argument("quadric matrix is zero");
}

double QuadricSurface::evaluate(const Vec4& x) const {
  double acc = 0.0;
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) acc += x[i] * a_[i][j] * x[j];
  }
  return acc;
}

double QuadricSurface::frobenius_norm() const {
  double acc = 0.0;
  for (const auto& row : a_) {
    for (double v : row) acc += v * v;
  }
  return std::sqrt(acc);
}

QuadricSurface quadric_to_uvd(const QuadricSurface& xyz_quadric,
                              const CameraModel& cam) {
  cam.validate();
  const double fb = cam.fb();
  const Vec4 s{fb / cam.fx, fb / cam.fy, fb, 1.0};
  const Mat4& a = xyz_quadric.matrix();
  Mat4 b{};
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) b[i][j] = s[i] * a[i][j] * s[j];
  }
  for (int i = 0; i < 4; ++i) {
    for (int j = i + 1; j < 4; ++j) {
      const double m = 0.5 * (b[i][j] + b[j][i]);
      b[i][j] = m;
      b[j][i] = m;
    }
  }
  return QuadricSurface(b);
}

double uvd_quadric_residual(const QuadricSurface& uvd_quadric,
                            const UvdPoint& p, const CameraModel& cam) {
  const Vec4 x{p.u - cam.u0, p.v - cam.v0, 1.0, p.d};
  return std::abs(uvd_quadric.evaluate(x)) / uvd_quadric.frobenius_norm();
}

std::uint16_t depth_to_level(double depth, const CameraModel& cam,
                             std::size_t levels, const DisparityRange& range) {
  if (std::isnan(depth) || !(depth > 0.0)) {
    throw std::invalid_argument("depth must be positive, got " +
                                std::to_string(depth));
  }
  if (levels == 0 || levels > std::numeric_limits<std::uint16_t>::max()) {
    throw std::invalid_argument("disparity level count out of range");
  }
  if (levels == 1) return 1;
  if (!(range.d_max > range.d_min)) {
    throw std::invalid_argument("disparity range requires d_max > d_min");
  }
  const double raw = std::isinf(depth) ? 0.0 : cam.fb() / depth;
  const double scaled = 1.0 + (raw - range.d_min) / (range.d_max - range.d_min) *
                                  static_cast<double>(levels - 1);
  const double rounded = std::floor(scaled + 0.5);
  const double clamped =
      std::clamp(rounded, 1.0, static_cast<double>(levels));
  return static_cast<std::uint16_t>(clamped);
}

LabelMap depth_to_scaled_inverse_disparity(const Image<double>& depth,
                                           const CameraModel& cam,
                                           std::size_t levels,
                                           const DisparityRange& range) {
  cam.validate();
  if (depth.channels != 1) {
    throw ShapeError("depth map must have one channel");
  }
  LabelMap out(depth.width, depth.height);
  for (std::size_t i = 0; i < depth.data.size(); ++i) {
    out.data[i] = depth_to_level(depth.data[i], cam, levels, range);
  }
  return out;
}

void RgbdFrame::validate(std::size_t levels, std::size_t num_classes) const {
  if (disparity.channels != 1 || rgb.channels != 3 ||
      !rgb.same_size(disparity)) {
    throw ShapeError("frame rgb " + std::to_string(rgb.width) + "x" +
                     std::to_string(rgb.height) + "x" +
                     std::to_string(rgb.channels) + " inconsistent with " +
                     std::to_string(disparity.width) + "x" +
                     std::to_string(disparity.height) + " disparity");
  }
  for (std::size_t i = 0; i < disparity.data.size(); ++i) {
    if (disparity.data[i] > levels) {
      throw std::invalid_argument(
          "disparity " + std::to_string(disparity.data[i]) + " at pixel " +
          std::to_string(i) + " exceeds D=" + std::to_string(levels));
    }
  }
  if (labels) {
    if (labels->channels != 1 || !labels->same_size(disparity)) {
      throw ShapeError("label map size differs from disparity map");
    }
    if (num_classes > 0) {
      for (std::size_t i = 0; i < labels->data.size(); ++i) {
        if (labels->data[i] > num_classes) {
          throw std::invalid_argument(
              "label " + std::to_string(labels->data[i]) + " at pixel " +
              std::to_string(i) + " exceeds k=" + std::to_string(num_classes));
        }
      }
    }
  }
}

VoxelVolume voxelize(const RgbdFrame& frame, std::size_t levels) {
  frame.validate(levels);
  const std::size_t H = frame.height(), W = frame.width(), L = levels + 1;
  VoxelVolume vol{Tensor(Shape{3, H, W, L}), H, W, levels, 3};
  for (std::size_t v = 0; v < H; ++v) {
    for (std::size_t u = 0; u < W; ++u) {
      const std::size_t d = frame.disparity(v, u);
      for (std::size_t c = 0; c < 3; ++c) {
        vol.data[((c * H + v) * W + u) * L + d] = frame.rgb(v, u, c);
      }
    }
  }
  return vol;
}

VoxelVolume voxelize_occupancy(const RgbdFrame& frame, std::size_t levels) {
  frame.validate(levels);
  const std::size_t H = frame.height(), W = frame.width(), L = levels + 1;
  VoxelVolume vol{Tensor(Shape{1, H, W, L}), H, W, levels, 1};
  for (std::size_t v = 0; v < H; ++v) {
    for (std::size_t u = 0; u < W; ++u) {
      vol.data[(v * W + u) * L + frame.disparity(v, u)] = 1.0;
    }
  }
  return vol;
}

Tensor voxelize_labels(const LabelMap& labels, const LabelMap& disparity,
                       std::size_t num_classes, std::size_t levels) {
  if (!labels.same_size(disparity) || labels.channels != 1 ||
      disparity.channels != 1) {
    throw ShapeError("voxelize_labels: label and disparity maps differ in size");
  }
  const std::size_t H = labels.height, W = labels.width, L = levels + 1;
  Tensor out(Shape{num_classes, H, W, L});
  for (std::size_t v = 0; v < H; ++v) {
    for (std::size_t u = 0; u < W; ++u) {
      const std::size_t c = labels(v, u);
      const std::size_t d = disparity(v, u);
      if (c > num_classes) {
        throw std::invalid_argument("voxelize_labels: label " +
                                    std::to_string(c) + " exceeds k=" +
                                    std::to_string(num_classes));
      }
      if (d > levels) {
        throw std::invalid_argument("voxelize_labels: disparity " +
                                    std::to_string(d) + " exceeds D=" +
                                    std::to_string(levels));
      }
      if (c == 0) continue;
      out[(((c - 1) * H + v) * W + u) * L + d] = 1.0;
    }
  }
  return out;
}

LabelMap project_volume(const Tensor& scores) {
  if (scores.rank() != 4) {
    throw ShapeError("project_volume: expected (k, H, W, D+1) scores, got " +
                     to_string(scores.shape()));
  }
  const MaxPoolResult pooled = maxpool_axis(scores, 3);
  const std::size_t k = scores.extent(0), H = scores.extent(1),
                    W = scores.extent(2);
  LabelMap out(W, H);
  for (std::size_t p = 0; p < H * W; ++p) {
    std::size_t best = 0;
    double best_score = 0.0;  // decision threshold on logits
    for (std::size_t c = 0; c < k; ++c) {
      const double s = pooled.values[c * H * W + p];
      if (s > best_score) {
        best_score = s;
        best = c + 1;
      }
    }
    out.data[p] = static_cast<std::uint16_t>(best);
  }
  return out;
}

}  // namespace s3d

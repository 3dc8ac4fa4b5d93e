#pragma once

#include <array>
#include <cstddef>
#include <optional>

#include "s3d/image.hpp"
#include "s3d/tensor.hpp"

namespace s3d {

/// Pinhole intrinsics plus the stereo product linking depth and disparity:
/// Z = f * b / d.
struct CameraModel {
  double fx = 0.0;
  double fy = 0.0;
  double u0 = 0.0;
  double v0 = 0.0;
  double f = 0.0;
  double b = 0.0;

  double fb() const { return f * b; }
  /// Throws std::invalid_argument unless fx, fy, f, b are positive and finite.
  void validate() const;
};

struct XyzPoint {
  double x, y, z;
};

struct UvdPoint {
  double u, v, d;
};

/// Throws std::domain_error when d <= 0.
XyzPoint uvd_to_xyz(const UvdPoint& p, const CameraModel& cam);
/// Throws std::domain_error when Z <= 0.
UvdPoint xyz_to_uvd(const XyzPoint& p, const CameraModel& cam);

using Mat4 = std::array<std::array<double, 4>, 4>;
using Vec4 = std::array<double, 4>;

/// Symmetric, nonzero 4x4 form x^T A x = 0 over homogeneous coordinates.
class QuadricSurface {
 public:
  explicit QuadricSurface(const Mat4& a);

  const Mat4& matrix() const { return a_; }
  double evaluate(const Vec4& x) const;
  double frobenius_norm() const;

 private:
  Mat4 a_;
};

/// XYZ quadric -> UVD quadric over (u - u0, v - v0, 1, d):
/// B = S^T A S with S = diag(fb/fx, fb/fy, fb, 1), re-symmetrized.
QuadricSurface quadric_to_uvd(const QuadricSurface& xyz_quadric,
                              const CameraModel& cam);

/// |x^T B x| for x = (u - u0, v - v0, 1, d), with B scaled to unit
/// Frobenius norm.
double uvd_quadric_residual(const QuadricSurface& uvd_quadric,
                            const UvdPoint& p, const CameraModel& cam);

/// Raw disparity interval mapped onto levels [1, D].
struct DisparityRange {
  double d_min = 1.0;
  double d_max = 1.0;
};

/// Level of one depth value: fb/Z rescaled affinely from `range` onto
/// [1, D], rounded half-up, clamped into [1, D]. Infinite depth lands on 1.
std::uint16_t depth_to_level(double depth, const CameraModel& cam,
                             std::size_t levels, const DisparityRange& range);

LabelMap depth_to_scaled_inverse_disparity(const Image<double>& depth,
                                           const CameraModel& cam,
                                           std::size_t levels,
                                           const DisparityRange& range);

/// One RGB-D frame: rgb in [-1, 1] (3 channels), disparity levels in [0, D]
/// with 0 meaning no data, optional labels in [0, k] with 0 meaning void.
struct RgbdFrame {
  Image<double> rgb;
  LabelMap disparity;
  std::optional<LabelMap> labels;

  std::size_t width() const { return disparity.width; }
  std::size_t height() const { return disparity.height; }

  /// Throws on inconsistent sizes or out-of-range disparities/labels.
  /// `num_classes` == 0 skips the label range check.
  void validate(std::size_t levels, std::size_t num_classes = 0) const;
};

/// Ch x H x W x (D + 1) volume; the disparity axis is innermost.
struct VoxelVolume {
  Tensor data;
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t levels = 0;  // D; the disparity axis has D + 1 entries
  std::size_t channels = 0;
};

/// Colour of each pixel placed at its disparity level, zeros elsewhere.
VoxelVolume voxelize(const RgbdFrame& frame, std::size_t levels);

/// 1.0 at each pixel's disparity level; colour is discarded.
VoxelVolume voxelize_occupancy(const RgbdFrame& frame, std::size_t levels);

/// k x H x W x (D + 1) binary targets; void pixels and empty voxels are the
/// all-zero vector.
Tensor voxelize_labels(const LabelMap& labels, const LabelMap& disparity,
                       std::size_t num_classes, std::size_t levels);

/// Per pixel: max over disparity per class, then the best class (1-based)
/// when its pooled logit exceeds 0, otherwise void. Class ties go to the
/// smaller index.
LabelMap project_volume(const Tensor& scores);

}  // namespace s3d

#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "s3d/geometry.hpp"

namespace s3d::cli {

struct NamedQuadric {
  std::string name;
  QuadricSurface surface;
};

/// Unit sphere, plane pair Z^2 = 1, a slanted plane, then seeded ellipsoids,
/// hyperboloids and general symmetric forms; `count` entries in total
/// (at least the three fixed ones).
std::vector<NamedQuadric> standard_quadrics(std::size_t count,
                                            std::uint64_t seed);

/// `base` plus two rigs with different intrinsics and baselines.
std::vector<CameraModel> standard_cameras(const CameraModel& base);

/// Surface points seen by the camera: intersections of rays through random
/// pixels in [0, 2 u0] x [0, 2 v0] with the quadric, 0.1 < Z < 100. May
/// return fewer than `count` points when the surface is rarely visible.
std::vector<XyzPoint> sample_visible_points(const QuadricSurface& q,
                                            const CameraModel& cam,
                                            std::size_t count,
                                            std::mt19937_64& rng);

struct GeometryCase {
  std::string quadric;
  std::size_t camera = 0;
  std::size_t points = 0;
  double max_residual = 0.0;
};

struct GeometryReport {
  std::vector<GeometryCase> cases;
  double max_residual = 0.0;
  bool passed = false;
};

inline constexpr double kGeometryTolerance = 1e-9;

/// Maps sampled XYZ surface points to UVD and evaluates them against
/// quadric_to_uvd of each surface.
GeometryReport run_geometry_suite(const CameraModel& base,
                                  std::size_t quadrics, std::size_t points,
                                  std::uint64_t seed);

struct GradCheckResult {
  std::string name;
  std::size_t entries = 0;
  double max_rel_error = 0.0;
  double tolerance = 0.0;
  bool passed = false;
};

inline constexpr double kPrimitiveGradTolerance = 1e-6;
inline constexpr double kModelGradTolerance = 1e-5;
/// Relative-error denominator floor for model checks, as a fraction of the
/// largest analytic gradient entry.
inline constexpr double kModelGradFloor = 1e-5;

/// Finite-difference agreement of every backward pass and of full desk-scale
/// models. `perturb` scales one analytic gradient by 1.001 so the suite
/// must fail.
std::vector<GradCheckResult> run_grad_checks(std::uint64_t seed, bool perturb);

}  // namespace s3d::cli

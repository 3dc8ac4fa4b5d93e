#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "oracles.hpp"
#include "s3d/geometry.hpp"
#include "verification.hpp"

using namespace s3d;

namespace {

const CameraModel kCam{100.0, 100.0, 50.0, 50.0, 100.0, 0.5};

Mat4 diag(double a, double b, double c, double d) {
  Mat4 m{};
  m[0][0] = a;
  m[1][1] = b;
  m[2][2] = c;
  m[3][3] = d;
  return m;
}

double residual_at(const QuadricSurface& uvd, const XyzPoint& p) {
  return uvd_quadric_residual(uvd, xyz_to_uvd(p, kCam), kCam);
}

RgbdFrame random_frame(std::mt19937_64& rng, std::size_t h, std::size_t w,
                       std::size_t levels, std::size_t k) {
  RgbdFrame f;
  f.rgb = Image<double>(w, h, 3);
  for (double& v : f.rgb.data) v = oracle::uniform(rng, -1.0, 1.0);
  f.disparity = LabelMap(w, h);
  f.labels = LabelMap(w, h);
  for (std::size_t i = 0; i < w * h; ++i) {
    f.disparity.data[i] = static_cast<std::uint16_t>(oracle::pick(rng, 0, levels));
    f.labels->data[i] = f.disparity.data[i] == 0
                            ? 0
                            : static_cast<std::uint16_t>(oracle::pick(rng, 0, k));
  }
  return f;
}

}  // namespace

TEST(Camera, PrincipalRayAndWorkedExample) {
  const XyzPoint p = uvd_to_xyz({50, 50, kCam.fb()}, kCam);
  EXPECT_DOUBLE_EQ(p.x, 0.0);
  EXPECT_DOUBLE_EQ(p.y, 0.0);
  EXPECT_DOUBLE_EQ(p.z, 1.0);

  const XyzPoint q = uvd_to_xyz({150, 50, 25}, kCam);
  EXPECT_DOUBLE_EQ(q.x, 2.0);
  EXPECT_DOUBLE_EQ(q.y, 0.0);
  EXPECT_DOUBLE_EQ(q.z, 2.0);

  const UvdPoint u = xyz_to_uvd({0, 0, 1}, kCam);
  EXPECT_DOUBLE_EQ(u.u, 50.0);
  EXPECT_DOUBLE_EQ(u.v, 50.0);
  EXPECT_DOUBLE_EQ(u.d, 50.0);
}

TEST(Camera, RoundTripAndRejections) {
  std::mt19937_64 rng(21);
  for (int i = 0; i < 100; ++i) {
    const UvdPoint p{oracle::uniform(rng, 0, 100), oracle::uniform(rng, 0, 100),
                     oracle::uniform(rng, 0.5, 120)};
    const UvdPoint r = xyz_to_uvd(uvd_to_xyz(p, kCam), kCam);
    EXPECT_NEAR(r.u, p.u, 1e-12);
    EXPECT_NEAR(r.v, p.v, 1e-12);
    EXPECT_NEAR(r.d, p.d, 1e-12 * p.d);
  }
  EXPECT_THROW(uvd_to_xyz({1, 1, 0}, kCam), std::domain_error);
  EXPECT_THROW(uvd_to_xyz({1, 1, -2}, kCam), std::domain_error);
  EXPECT_THROW(xyz_to_uvd({1, 1, 0}, kCam), std::domain_error);
  EXPECT_THROW(CameraModel{}.validate(), std::invalid_argument);
}

TEST(Quadric, RejectsAsymmetricAndZero) {
  Mat4 m = diag(1, 1, 1, -1);
  m[0][1] = 0.5;
  EXPECT_THROW(QuadricSurface{m}, std::invalid_argument);
  EXPECT_THROW(QuadricSurface{Mat4{}}, std::invalid_argument);
}

TEST(Quadric, TransformIsSymmetric) {
  std::mt19937_64 rng(22);
  for (int t = 0; t < 20; ++t) {
    Mat4 a{};
    for (int i = 0; i < 4; ++i)
      for (int j = i; j < 4; ++j) a[i][j] = a[j][i] = oracle::uniform(rng, -1, 1);
    const Mat4& b = quadric_to_uvd(QuadricSurface(a), kCam).matrix();
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) EXPECT_EQ(b[i][j], b[j][i]);
  }
}

TEST(Quadric, PlanePairMapsToConstantDisparity) {
  const QuadricSurface uvd = quadric_to_uvd(QuadricSurface(diag(0, 0, 1, -1)), kCam);
  std::mt19937_64 rng(23);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const XyzPoint p{oracle::uniform(rng, -0.5, 0.5), oracle::uniform(rng, -0.5, 0.5),
                     1.0};
    EXPECT_DOUBLE_EQ(xyz_to_uvd(p, kCam).d, kCam.fb());
    worst = std::max(worst, residual_at(uvd, p));
  }
  EXPECT_LT(worst, 1e-9);
}

TEST(Quadric, UnitSphereResidual) {
  const QuadricSurface uvd = quadric_to_uvd(QuadricSurface(diag(1, 1, 1, -1)), kCam);
  std::mt19937_64 rng(24);
  double worst = 0.0;
  int count = 0;
  while (count < 1000) {
    const double th = oracle::uniform(rng, 0, M_PI), ph = oracle::uniform(rng, 0, 2 * M_PI);
    const XyzPoint p{std::sin(th) * std::cos(ph), std::sin(th) * std::sin(ph),
                     std::cos(th)};
    if (p.z <= 0.1) continue;
    worst = std::max(worst, residual_at(uvd, p));
    ++count;
  }
  EXPECT_LT(worst, 1e-9);
  // A point off the surface is visibly off.
  EXPECT_GT(residual_at(uvd, {0, 0, 2}), 1e-3);
}

TEST(Quadric, StandardSuitePasses) {
  const cli::GeometryReport r = cli::run_geometry_suite(kCam, 20, 1000, 0);
  EXPECT_TRUE(r.passed);
  EXPECT_EQ(r.cases.size(), 60u);
  for (const auto& c : r.cases) EXPECT_EQ(c.points, 1000u) << c.quadric;
  EXPECT_LT(r.max_residual, 1e-9);
}

TEST(DisparityLevels, EndpointsAndReference) {
  const std::size_t D = 15;
  const DisparityRange range{1.0, static_cast<double>(D)};
  EXPECT_EQ(depth_to_level(kCam.fb(), kCam, D, range), 1);
  EXPECT_EQ(depth_to_level(kCam.fb() / D, kCam, D, range), D);
  EXPECT_EQ(depth_to_level(std::numeric_limits<double>::infinity(), kCam, D, range), 1);
  EXPECT_EQ(depth_to_level(1e-6, kCam, D, range), D);

  std::mt19937_64 rng(25);
  const DisparityRange r2{2.0, 40.0};
  for (int i = 0; i < 500; ++i) {
    const double z = oracle::uniform(rng, 0.5, 40.0);
    const double t = (kCam.fb() / z - r2.d_min) / (r2.d_max - r2.d_min);
    const double ref =
        std::clamp(std::floor(1.0 + t * (D - 1) + 0.5), 1.0, static_cast<double>(D));
    EXPECT_EQ(depth_to_level(z, kCam, D, r2), static_cast<std::uint16_t>(ref)) << z;
  }
}

TEST(DisparityLevels, MapVersion) {
  Image<double> depth(2, 1);
  depth.data = {kCam.fb(), kCam.fb() / 4};
  const LabelMap m = depth_to_scaled_inverse_disparity(depth, kCam, 4, {1.0, 4.0});
  EXPECT_EQ(m.data, (std::vector<std::uint16_t>{1, 4}));
}

TEST(Voxelize, SinglePixel) {
  RgbdFrame f;
  f.rgb = Image<double>(1, 1, 3);
  f.rgb.data = {1.0, -1.0, 0.5};
  f.disparity = LabelMap(1, 1);
  f.disparity.data = {3};
  const VoxelVolume v = voxelize(f, 4);
  EXPECT_EQ(v.data.shape(), (Shape{3, 1, 1, 5}));
  for (std::size_t c = 0; c < 3; ++c) {
    for (std::size_t l = 0; l < 5; ++l) {
      EXPECT_EQ(v.data.at({c, 0, 0, l}), l == 3 ? f.rgb.data[c] : 0.0);
    }
  }
  const VoxelVolume o = voxelize_occupancy(f, 4);
  EXPECT_EQ(o.data.shape(), (Shape{1, 1, 1, 5}));
  EXPECT_EQ(o.data.at({0, 0, 0, 3}), 1.0);
}

TEST(Voxelize, AllVoidAndColumnSparsity) {
  std::mt19937_64 rng(26);
  RgbdFrame voidf = random_frame(rng, 3, 4, 5, 2);
  std::fill(voidf.disparity.data.begin(), voidf.disparity.data.end(), 0);
  const VoxelVolume vv = voxelize(voidf, 5);
  for (std::size_t y = 0; y < 3; ++y)
    for (std::size_t x = 0; x < 4; ++x)
      for (std::size_t c = 0; c < 3; ++c)
        EXPECT_EQ(vv.data.at({c, y, x, 0}), voidf.rgb(y, x, c));

  for (int t = 0; t < 20; ++t) {
    const RgbdFrame f = random_frame(rng, 5, 6, 7, 3);
    const VoxelVolume v = voxelize(f, 7);
    for (std::size_t y = 0; y < 5; ++y)
      for (std::size_t x = 0; x < 6; ++x) {
        std::size_t nonzero_levels = 0;
        for (std::size_t l = 0; l <= 7; ++l) {
          bool any = false;
          for (std::size_t c = 0; c < 3; ++c) any |= v.data.at({c, y, x, l}) != 0.0;
          if (any) {
            ++nonzero_levels;
            EXPECT_EQ(l, f.disparity(y, x));
          }
        }
        EXPECT_LE(nonzero_levels, 1u);
      }
  }
}

TEST(Voxelize, RejectsOutOfRangeDisparity) {
  RgbdFrame f;
  f.rgb = Image<double>(1, 1, 3);
  f.disparity = LabelMap(1, 1);
  f.disparity.data = {9};
  EXPECT_THROW(voxelize(f, 4), std::invalid_argument);
}

TEST(VoxelizeLabels, CountsNonVoidPixels) {
  LabelMap labels(3, 2), disp(3, 2);
  labels.data = {0, 0, 2, 0, 0, 0};
  disp.data = {1, 1, 3, 1, 1, 1};
  const Tensor one = voxelize_labels(labels, disp, 2, 4);
  EXPECT_EQ(one.shape(), (Shape{2, 2, 3, 5}));
  EXPECT_EQ(std::accumulate(one.data().begin(), one.data().end(), 0.0), 1.0);
  EXPECT_EQ(one.at({1, 0, 2, 3}), 1.0);

  std::fill(labels.data.begin(), labels.data.end(), 0);
  const Tensor none = voxelize_labels(labels, disp, 2, 4);
  EXPECT_EQ(std::accumulate(none.data().begin(), none.data().end(), 0.0), 0.0);

  std::mt19937_64 rng(27);
  for (int t = 0; t < 20; ++t) {
    const RgbdFrame f = random_frame(rng, 4, 5, 6, 3);
    const Tensor v = voxelize_labels(*f.labels, f.disparity, 3, 6);
    const auto labelled = std::count_if(f.labels->data.begin(), f.labels->data.end(),
                                        [](auto l) { return l != 0; });
    EXPECT_EQ(std::accumulate(v.data().begin(), v.data().end(), 0.0),
              static_cast<double>(labelled));
  }
}

TEST(ProjectVolume, ThresholdAndPooling) {
  const Tensor low({3, 2, 2, 5}, -10.0);
  for (auto l : project_volume(low).data) EXPECT_EQ(l, 0);

  for (std::size_t level = 0; level < 5; ++level) {
    Tensor s({3, 2, 2, 5}, -10.0);
    s.at({1, 1, 0, level}) = 8.0;
    const LabelMap m = project_volume(s);
    EXPECT_EQ(m(1, 0), 2);
    EXPECT_EQ(m(0, 0), 0);
  }
}

TEST(ProjectVolume, MatchesNaiveScan) {
  std::mt19937_64 rng(28);
  for (int t = 0; t < 60; ++t) {
    const std::size_t k = oracle::pick(rng, 1, 4), h = oracle::pick(rng, 1, 5),
                      w = oracle::pick(rng, 1, 5), d = oracle::pick(rng, 1, 6);
    Tensor s({k, h, w, d});
    for (double& v : s.data()) v = static_cast<double>(oracle::pick(rng, 0, 6)) - 4.0;
    const LabelMap m = project_volume(s);
    for (std::size_t y = 0; y < h; ++y)
      for (std::size_t x = 0; x < w; ++x) {
        std::uint16_t best = 0;
        double best_v = 0.0;
        for (std::size_t c = 0; c < k; ++c) {
          double mx = -1e300;
          for (std::size_t l = 0; l < d; ++l) mx = std::max(mx, s.at({c, y, x, l}));
          if (mx > best_v) {
            best_v = mx;
            best = static_cast<std::uint16_t>(c + 1);
          }
        }
        ASSERT_EQ(m(y, x), best);
      }
  }
}

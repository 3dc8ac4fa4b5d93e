#include "verification.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "s3d/conv.hpp"
#include "s3d/gradcheck.hpp"
#include "s3d/network.hpp"
#include "s3d/ops.hpp"

namespace s3d::cli {
namespace {

double uniform(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * (static_cast<double>(rng() >> 11) * 0x1.0p-53);
}

Mat4 diagonal(double a, double b, double c, double d) {
  Mat4 m{};
  m[0][0] = a;
  m[1][1] = b;
  m[2][2] = c;
  m[3][3] = d;
  return m;
}

Mat4 multiply(const Mat4& a, const Mat4& b) {
  Mat4 out{};
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) {
      for (int k = 0; k < 4; ++k) out[i][j] += a[i][k] * b[k][j];
    }
  }
  return out;
}

Mat4 transpose(const Mat4& a) {
  Mat4 out{};
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) out[i][j] = a[j][i];
  }
  return out;
}

Mat4 symmetrize(Mat4 a) {
  for (int i = 0; i < 4; ++i) {
    for (int j = i + 1; j < 4; ++j) {
      const double m = 0.5 * (a[i][j] + a[j][i]);
      a[i][j] = a[j][i] = m;
    }
  }
  return a;
}

// Rigid transform taking world points into a randomly rotated frame centred
// at `centre`, as a homogeneous matrix.
Mat4 random_pose(std::mt19937_64& rng, const std::array<double, 3>& centre) {
  double q[4];
  double n = 0.0;
  for (double& v : q) {
    v = uniform(rng, -1.0, 1.0);
    n += v * v;
  }
  n = std::sqrt(n);
  for (double& v : q) v /= n;
  const double w = q[0], x = q[1], y = q[2], z = q[3];
  const double r[3][3] = {
      {1 - 2 * (y * y + z * z), 2 * (x * y - z * w), 2 * (x * z + y * w)},
      {2 * (x * y + z * w), 1 - 2 * (x * x + z * z), 2 * (y * z - x * w)},
      {2 * (x * z - y * w), 2 * (y * z + x * w), 1 - 2 * (x * x + y * y)}};
  Mat4 g{};
  for (int i = 0; i < 3; ++i) {
    double t = 0.0;
    for (int j = 0; j < 3; ++j) {
      g[i][j] = r[i][j];
      t += r[i][j] * centre[j];
    }
    g[i][3] = -t;
  }
  g[3][3] = 1.0;
  return g;
}

Tensor random_tensor(std::mt19937_64& rng, Shape shape, double bound = 2.0) {
  Tensor t(std::move(shape));
  for (double& v : t.data()) v = uniform(rng, -bound, bound);
  return t;
}

GradCheckResult compare(const std::string& name, const Tensor& analytic,
                        const Tensor& numeric, double tolerance,
                        double floor = 1e-8) {
  GradCheckResult r;
  r.name = name;
  r.entries = analytic.size();
  r.max_rel_error = max_relative_error(analytic, numeric, floor);
  r.tolerance = tolerance;
  r.passed = r.max_rel_error <= tolerance;
  return r;
}

constexpr double kStep = 1e-5;

void conv_checks(std::vector<GradCheckResult>& out, std::mt19937_64& rng,
                 const std::string& tag, Shape in_shape, std::size_t cout,
                 std::size_t stride, bool perturb) {
  const std::size_t cin = in_shape[0];
  const Tensor x = random_tensor(rng, in_shape);
  const ConvKernel k(random_tensor(rng, {cout, cin, 3, 3, 3}),
                     random_tensor(rng, {cout}));
  const Padding3 pad = Padding3::uniform(1);
  const Tensor g = random_tensor(rng, conv3d_forward(x, k, stride, pad).shape());
  ConvGradients a = conv3d_backward(g, x, k, stride, pad);
  if (perturb) {
    for (double& v : a.weights.data()) v *= 1.001;
  }
  out.push_back(compare(
      tag + ".input", a.input,
      finite_difference_grad(
          [&](const Tensor& p) { return dot(g, conv3d_forward(p, k, stride, pad)); },
          x, kStep),
      kPrimitiveGradTolerance));
  out.push_back(compare(
      tag + ".weights", a.weights,
      finite_difference_grad(
          [&](const Tensor& p) {
            return dot(g, conv3d_forward(x, ConvKernel(p, k.bias), stride, pad));
          },
          k.weights, kStep),
      kPrimitiveGradTolerance));
  out.push_back(compare(
      tag + ".bias", a.bias,
      finite_difference_grad(
          [&](const Tensor& p) {
            return dot(g, conv3d_forward(x, ConvKernel(k.weights, p), stride, pad));
          },
          k.bias, kStep),
      kPrimitiveGradTolerance));
}

void deconv_checks(std::vector<GradCheckResult>& out, std::mt19937_64& rng) {
  const Tensor y = random_tensor(rng, {3, 2, 2, 2});
  const ConvKernel k(random_tensor(rng, {3, 2, 3, 3, 3}),
                     random_tensor(rng, {2}));
  const Padding3 pad = Padding3::uniform(1);
  const Extents3 ext{4, 4, 4};
  const Tensor g = random_tensor(rng, {2, 4, 4, 4});
  const ConvGradients a = deconv3d_backward(g, y, k, 2, pad);
  auto f_input = [&](const Tensor& p) {
    return dot(g, deconv3d_forward(p, k, 2, pad, ext));
  };
  auto f_weights = [&](const Tensor& p) {
    return dot(g, deconv3d_forward(y, ConvKernel(p, k.bias), 2, pad, ext));
  };
  auto f_bias = [&](const Tensor& p) {
    return dot(g, deconv3d_forward(y, ConvKernel(k.weights, p), 2, pad, ext));
  };
  out.push_back(compare("deconv3d.input", a.input,
                        finite_difference_grad(f_input, y, kStep),
                        kPrimitiveGradTolerance));
  out.push_back(compare("deconv3d.weights", a.weights,
                        finite_difference_grad(f_weights, k.weights, kStep),
                        kPrimitiveGradTolerance));
  out.push_back(compare("deconv3d.bias", a.bias,
                        finite_difference_grad(f_bias, k.bias, kStep),
                        kPrimitiveGradTolerance));
}

void conv2d_checks(std::vector<GradCheckResult>& out, std::mt19937_64& rng) {
  const Tensor x = random_tensor(rng, {3, 6, 6});
  const ConvKernel k(random_tensor(rng, {2, 3, 3, 3, 1}),
                     random_tensor(rng, {2}));
  const Padding2 pad{1, 1};
  const Tensor g = random_tensor(rng, {2, 6, 6});
  const ConvGradients a = conv2d_backward(g, x, k, 1, pad);
  out.push_back(compare(
      "conv2d.input", a.input,
      finite_difference_grad(
          [&](const Tensor& p) { return dot(g, conv2d_forward(p, k, 1, pad)); },
          x, kStep),
      kPrimitiveGradTolerance));
  out.push_back(compare(
      "conv2d.weights", a.weights,
      finite_difference_grad(
          [&](const Tensor& p) {
            return dot(g, conv2d_forward(x, ConvKernel(p, k.bias), 1, pad));
          },
          k.weights, kStep),
      kPrimitiveGradTolerance));
}

void pointwise_checks(std::vector<GradCheckResult>& out,
                      std::mt19937_64& rng) {
  Tensor x = random_tensor(rng, {64});
  for (double& v : x.data()) {
    while (std::abs(v) <= 1e-3) v = uniform(rng, -2.0, 2.0);
  }
  const Tensor g = random_tensor(rng, {64});
  out.push_back(compare(
      "relu", relu_backward(g, x),
      finite_difference_grad([&](const Tensor& p) { return dot(g, relu(p)); },
                             x, kStep),
      kPrimitiveGradTolerance));

  const Tensor z = random_tensor(rng, {3, 4, 5});
  Tensor y(z.shape());
  for (double& v : y.data()) v = (rng() & 1) ? 1.0 : 0.0;
  out.push_back(compare(
      "sigmoid_bce", sigmoid_bce_loss(z, y).grad_logits,
      finite_difference_grad(
          [&](const Tensor& p) { return sigmoid_bce_loss(p, y).loss; }, z,
          kStep),
      kPrimitiveGradTolerance));
}

RgbdFrame random_frame(std::mt19937_64& rng, const ResTdmConfig& cfg) {
  RgbdFrame f;
  f.rgb = Image<double>(cfg.width, cfg.height, 3);
  f.disparity = LabelMap(cfg.width, cfg.height);
  f.labels = LabelMap(cfg.width, cfg.height);
  for (double& v : f.rgb.data) v = uniform(rng, -1.0, 1.0);
  for (auto& d : f.disparity.data) {
    d = static_cast<std::uint16_t>(1 + rng() % cfg.levels);
  }
  for (auto& l : f.labels->data) {
    l = static_cast<std::uint16_t>(rng() % (cfg.num_classes + 1));
  }
  return f;
}

void model_check(std::vector<GradCheckResult>& out, std::mt19937_64& rng,
                 const std::string& name, const ResTdmConfig& cfg) {
  ResTdmModel model = build_model(cfg, rng());
  // Nonzero biases keep pre-activations of empty voxels off the ReLU kink.
  for (std::size_t i = 0; i < model.parameters().size(); ++i) {
    Tensor* p = model.parameters()[i];
    if (model.parameter_names()[i].ends_with(".bias")) {
      for (double& v : p->data()) v = uniform(rng, -0.5, 0.5);
    }
  }
  const RgbdFrame frame = random_frame(rng, cfg);
  const Tensor input = encode_input(frame, cfg);
  const Tensor target = encode_target(frame, cfg);
  const LossAndGradients lg = loss_and_gradients(model, input, target);

  const auto names = model.parameter_names();
  const auto grads = lg.grads.parameters();
  Tensor analytic(Shape{model.parameter_count()});
  Tensor numeric(Shape{model.parameter_count()});
  std::size_t offset = 0;
  for (std::size_t i = 0; i < names.size(); ++i) {
    ResTdmModel probe = model;
    const Tensor base = *model.parameters()[i];
    const Tensor fd = finite_difference_grad(
        [&](const Tensor& p) {
          *probe.parameters()[i] = p;
          return loss_value(probe, input, target);
        },
        base, kStep);
    for (std::size_t j = 0; j < fd.size(); ++j) {
      analytic[offset + j] = (*grads[i])[j];
      numeric[offset + j] = fd[j];
    }
    offset += fd.size();
  }
  // Whole-model gradients span several decades; entries far below the
  // largest one are compared against a floor tied to that scale, since the
  // rounding error of a central difference on an O(1) loss is ~1e-12.
  double scale = 0.0;
  for (double v : analytic.data()) scale = std::max(scale, std::abs(v));
  const double floor = kModelGradFloor * scale;

  // A step that straddles a ReLU kink spoils the central difference. Such
  // entries get a second look with the O(h^2) one-sided stencils; a kink on
  // one side leaves the other side smooth.
  const double f0 = lg.loss;
  offset = 0;
  for (std::size_t i = 0; i < names.size(); ++i) {
    const Tensor base = *model.parameters()[i];
    ResTdmModel probe = model;
    auto at = [&](std::size_t j, double delta) {
      Tensor p = base;
      p[j] += delta;
      *probe.parameters()[i] = std::move(p);
      return loss_value(probe, input, target);
    };
    for (std::size_t j = 0; j < base.size(); ++j) {
      const std::size_t k = offset + j;
      if (relative_error(analytic[k], numeric[k], floor) <= kModelGradTolerance) {
        continue;
      }
      const double fwd =
          (-3.0 * f0 + 4.0 * at(j, kStep) - at(j, 2.0 * kStep)) / (2.0 * kStep);
      const double bwd =
          (3.0 * f0 - 4.0 * at(j, -kStep) + at(j, -2.0 * kStep)) / (2.0 * kStep);
      for (double candidate : {fwd, bwd}) {
        if (relative_error(analytic[k], candidate, floor) <
            relative_error(analytic[k], numeric[k], floor)) {
          numeric[k] = candidate;
        }
      }
    }
    offset += base.size();
  }
  out.push_back(
      compare(name, analytic, numeric, kModelGradTolerance, floor));
}

}  // namespace

std::vector<NamedQuadric> standard_quadrics(std::size_t count,
                                            std::uint64_t seed) {
  std::vector<NamedQuadric> out;
  out.push_back({"unit_sphere", QuadricSurface(diagonal(1, 1, 1, -1))});
  out.push_back({"plane_pair_z", QuadricSurface(diagonal(0, 0, 1, -1))});
  {
    Mat4 m{};
    // 0.2 X - 0.1 Y + Z = 6
    m[0][3] = m[3][0] = 0.1;
    m[1][3] = m[3][1] = -0.05;
    m[2][3] = m[3][2] = 0.5;
    m[3][3] = -6.0;
    out.push_back({"slanted_plane", QuadricSurface(m)});
  }
  std::mt19937_64 rng(seed);
  for (std::size_t i = out.size(); i < count; ++i) {
    const std::size_t kind = i % 3;
    if (kind == 2) {
      // General symmetric form forced through a visible point.
      Mat4 m{};
      for (int r = 0; r < 4; ++r) {
        for (int c = r; c < 4; ++c) m[r][c] = m[c][r] = uniform(rng, -1, 1);
      }
      const Vec4 p{uniform(rng, -1, 1), uniform(rng, -1, 1),
                   uniform(rng, 3, 8), 1.0};
      double value = 0.0;
      for (int r = 0; r < 4; ++r) {
        for (int c = 0; c < 4; ++c) value += p[r] * m[r][c] * p[c];
      }
      m[3][3] -= value;
      out.push_back({"general_" + std::to_string(i), QuadricSurface(m)});
      continue;
    }
    const std::array<double, 3> centre{uniform(rng, -1.5, 1.5),
                                       uniform(rng, -1.0, 1.0),
                                       uniform(rng, 5.0, 12.0)};
    const double a = uniform(rng, 0.5, 3.0), b = uniform(rng, 0.5, 3.0),
                 c = uniform(rng, 0.5, 3.0);
    const Mat4 local =
        kind == 0 ? diagonal(1 / (a * a), 1 / (b * b), 1 / (c * c), -1)
                  : diagonal(1 / (a * a), 1 / (b * b), -1 / (c * c), -1);
    const Mat4 g = random_pose(rng, centre);
    const Mat4 world = symmetrize(multiply(transpose(g), multiply(local, g)));
    out.push_back({(kind == 0 ? "ellipsoid_" : "hyperboloid_") +
                       std::to_string(i),
                   QuadricSurface(world)});
  }
  return out;
}

std::vector<CameraModel> standard_cameras(const CameraModel& base) {
  base.validate();
  CameraModel wide = base;
  wide.fx *= 0.6;
  wide.fy *= 0.6;
  wide.u0 += 13.0;
  wide.v0 -= 7.0;
  wide.f *= 0.5;
  wide.b *= 3.0;
  CameraModel narrow = base;
  narrow.fx *= 1.7;
  narrow.fy *= 1.3;
  narrow.f = 2.0;
  narrow.b = 0.1;
  return {base, wide, narrow};
}

std::vector<XyzPoint> sample_visible_points(const QuadricSurface& q,
                                            const CameraModel& cam,
                                            std::size_t count,
                                            std::mt19937_64& rng) {
  const Mat4& m = q.matrix();
  std::vector<XyzPoint> out;
  const std::size_t max_attempts = 200 * count + 1000;
  for (std::size_t attempt = 0; attempt < max_attempts && out.size() < count;
       ++attempt) {
    const double u = uniform(rng, 0.0, 2.0 * cam.u0);
    const double v = uniform(rng, 0.0, 2.0 * cam.v0);
    const std::array<double, 3> r{(u - cam.u0) / cam.fx, (v - cam.v0) / cam.fy,
                                  1.0};
    // (t r, 1)^T M (t r, 1) = qa t^2 + 2 qb t + qc
    double qa = 0.0, qb = 0.0;
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) qa += r[i] * m[i][j] * r[j];
      qb += r[i] * m[i][3];
    }
    const double qc = m[3][3];
    std::vector<double> roots;
    if (std::abs(qa) < 1e-12 * (std::abs(qb) + std::abs(qc) + 1e-300)) {
      if (qb != 0.0) roots.push_back(-qc / (2.0 * qb));
    } else {
      const double disc = qb * qb - qa * qc;
      if (disc < 0.0) continue;
      const double s = std::sqrt(disc);
      const double qq = -(qb + std::copysign(s, qb));
      if (qq != 0.0) {
        roots.push_back(qq / qa);
        roots.push_back(qc / qq);
      } else {
        roots.push_back(-qb / qa);
      }
    }
    std::vector<double> visible;
    for (double t : roots) {
      if (t > 0.1 && t < 100.0) visible.push_back(t);
    }
    if (visible.empty()) continue;
    const double t = visible[rng() % visible.size()];
    out.push_back({t * r[0], t * r[1], t});
  }
  return out;
}

GeometryReport run_geometry_suite(const CameraModel& base,
                                  std::size_t quadrics, std::size_t points,
                                  std::uint64_t seed) {
  const auto cams = standard_cameras(base);
  std::mt19937_64 rng(seed ^ 0x5bd1e995ull);
  GeometryReport report;
  report.passed = true;
  for (const auto& q : standard_quadrics(quadrics, seed)) {
    for (std::size_t ci = 0; ci < cams.size(); ++ci) {
      const CameraModel& cam = cams[ci];
      const QuadricSurface uvd = quadric_to_uvd(q.surface, cam);
      GeometryCase c;
      c.quadric = q.name;
      c.camera = ci;
      for (const XyzPoint& p : sample_visible_points(q.surface, cam, points, rng)) {
        const double res = uvd_quadric_residual(uvd, xyz_to_uvd(p, cam), cam);
        c.max_residual = std::max(c.max_residual, res);
        ++c.points;
      }
      if (c.points < points || !(c.max_residual < kGeometryTolerance)) {
        report.passed = false;
      }
      report.max_residual = std::max(report.max_residual, c.max_residual);
      report.cases.push_back(c);
    }
  }
  return report;
}

std::vector<GradCheckResult> run_grad_checks(std::uint64_t seed, bool perturb) {
  std::mt19937_64 rng(seed);
  std::vector<GradCheckResult> out;
  conv_checks(out, rng, "conv3d", {2, 4, 4, 4}, 3, 1, perturb);
  conv_checks(out, rng, "conv3d.stride2", {2, 5, 5, 5}, 3, 2, false);
  deconv_checks(out, rng);
  conv2d_checks(out, rng);
  pointwise_checks(out, rng);

  ResTdmConfig tiny;
  tiny.num_scales = 1;
  tiny.features = 2;
  tiny.num_classes = 2;
  tiny.height = tiny.width = 4;
  tiny.levels = 3;
  model_check(out, rng, "model.s3d.1scale", tiny);

  ResTdmConfig two = tiny;
  two.num_scales = 2;
  two.features = 4;
  two.num_classes = 3;
  two.height = two.width = 8;
  two.levels = 7;
  model_check(out, rng, "model.s3d.2scale", two);

  ResTdmConfig depth_only = tiny;
  depth_only.mode = InputMode::kOccupancyVolume;
  depth_only.features = 3;
  model_check(out, rng, "model.s3d-depth-only.1scale", depth_only);

  ResTdmConfig flat = two;
  flat.mode = InputMode::kStacked2d;
  flat.height = flat.width = 16;
  model_check(out, rng, "model.s2d.2scale", flat);
  return out;
}

}  // namespace s3d::cli

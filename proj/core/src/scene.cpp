#include "s3d/scene.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

namespace s3d {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kMinDepth = 1e-6;

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  double unit() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * unit(); }
  std::size_t integer(std::size_t lo, std::size_t hi) {  // inclusive
    return lo + static_cast<std::size_t>(engine_() % (hi - lo + 1));
  }
  std::uint64_t next() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

double dot3(const Vec3& a, const Vec3& b) {
  return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}

struct Hit {
  double t = kInf;
  Vec3 normal{0, 0, -1};
};

Hit intersect(const Plane& p, const Vec3& dir) {
  const double denom = dot3(p.normal, dir);
  if (denom == 0.0) return {};
  const double t = p.offset / denom;
  if (!(t > kMinDepth)) return {};
  // Face the normal towards the camera.
  Vec3 n = p.normal;
  if (denom > 0) n = {-n[0], -n[1], -n[2]};
  return {t, n};
}

Hit intersect(const Box& b, const Vec3& dir) {
  double t_near = -kInf, t_far = kInf;
  int axis_near = -1;
  for (int a = 0; a < 3; ++a) {
    if (dir[a] == 0.0) {
      if (0.0 < b.min[a] || 0.0 > b.max[a]) return {};
      continue;
    }
    double t0 = b.min[a] / dir[a];
    double t1 = b.max[a] / dir[a];
    if (t0 > t1) std::swap(t0, t1);
    if (t0 > t_near) {
      t_near = t0;
      axis_near = a;
    }
    t_far = std::min(t_far, t1);
  }
  if (t_near > t_far || !(t_near > kMinDepth) || axis_near < 0) return {};
  Vec3 n{0, 0, 0};
  n[axis_near] = dir[axis_near] > 0 ? -1.0 : 1.0;
  return {t_near, n};
}

Hit intersect(const Sphere& s, const Vec3& dir) {
  // |t dir - c|^2 = r^2
  const double a = dot3(dir, dir);
  const double b = dot3(dir, s.center);
  const double c = dot3(s.center, s.center) - s.radius * s.radius;
  const double disc = b * b - a * c;
  if (disc < 0) return {};
  const double sq = std::sqrt(disc);
  double t = (b - sq) / a;
  if (!(t > kMinDepth)) t = (b + sq) / a;
  if (!(t > kMinDepth)) return {};
  Vec3 n{t * dir[0] - s.center[0], t * dir[1] - s.center[1],
         t * dir[2] - s.center[2]};
  const double len = std::sqrt(dot3(n, n));
  for (double& x : n) x /= len;
  return {t, n};
}

void mix(std::uint64_t& h, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) {
    h ^= (v >> (8 * i)) & 0xff;
    h *= 0x100000001b3ull;
  }
}

void mix(std::uint64_t& h, double v) { mix(h, std::bit_cast<std::uint64_t>(v)); }

std::uint8_t to_byte(double v) {
  return static_cast<std::uint8_t>(std::clamp(std::floor(v + 0.5), 0.0, 255.0));
}

CameraModel scene_camera(std::size_t height, std::size_t width,
                         double horizon_fraction) {
  CameraModel cam;
  cam.fx = cam.fy = 0.9 * static_cast<double>(width);
  cam.u0 = 0.5 * static_cast<double>(width - 1);
  cam.v0 = horizon_fraction * static_cast<double>(height);
  cam.f = cam.fx;
  cam.b = 0.5;
  return cam;
}

DisparityRange depth_band(const CameraModel& cam, double z_near,
                          double z_far) {
  return {cam.fb() / z_far, cam.fb() / z_near};
}

}  // namespace

void SceneSpec::validate() const {
  if (objects.empty()) {
    throw std::invalid_argument("scene spec has no objects");
  }
  if (class_names.size() < 2) {
    throw std::invalid_argument("scene spec needs at least 2 classes");
  }
  if (height == 0 || width == 0 || levels == 0) {
    throw std::invalid_argument("scene spec has a zero extent");
  }
  camera.validate();
  if (sky_class > num_classes()) {
    throw std::invalid_argument("sky class out of range");
  }
  for (const auto& o : objects) {
    if (o.class_id == 0 || o.class_id > num_classes()) {
      throw std::invalid_argument("object class id " +
                                  std::to_string(o.class_id) +
                                  " out of range");
    }
    Vec3 anchor;
    if (const auto* b = std::get_if<Box>(&o.shape)) {
      anchor = {0.5 * (b->min[0] + b->max[0]), 0.5 * (b->min[1] + b->max[1]),
                0.5 * (b->min[2] + b->max[2])};
    } else if (const auto* s = std::get_if<Sphere>(&o.shape)) {
      anchor = s->center;
    } else {
      continue;
    }
    if (!(anchor[2] > 0.0)) {
      throw std::invalid_argument("object lies behind the camera");
    }
    const UvdPoint p = xyz_to_uvd({anchor[0], anchor[1], anchor[2]}, camera);
    if (p.u < -0.5 || p.u > static_cast<double>(width) - 0.5 || p.v < -0.5 ||
        p.v > static_cast<double>(height) - 0.5) {
      throw std::invalid_argument("object centre projects outside the image");
    }
  }
}

std::uint64_t SceneSpec::hash() const {
  std::uint64_t h = 0xcbf29ce484222325ull;
  mix(h, static_cast<std::uint64_t>(height));
  mix(h, static_cast<std::uint64_t>(width));
  mix(h, static_cast<std::uint64_t>(levels));
  for (double v : {camera.fx, camera.fy, camera.u0, camera.v0, camera.f,
                   camera.b, range.d_min, range.d_max, jitter}) {
    mix(h, v);
  }
  for (const auto& n : class_names) {
    for (char c : n) mix(h, static_cast<std::uint64_t>(c));
    mix(h, std::uint64_t{0});
  }
  mix(h, static_cast<std::uint64_t>(sky_class));
  for (double c : sky_color) mix(h, c);
  for (const auto& o : objects) {
    mix(h, static_cast<std::uint64_t>(o.shape.index()));
    std::visit(
        [&](const auto& s) {
          using T = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<T, Plane>) {
            for (double v : s.normal) mix(h, v);
            mix(h, s.offset);
          } else if constexpr (std::is_same_v<T, Box>) {
            for (double v : s.min) mix(h, v);
            for (double v : s.max) mix(h, v);
          } else {
            for (double v : s.center) mix(h, v);
            mix(h, s.radius);
          }
        },
        o.shape);
    mix(h, static_cast<std::uint64_t>(o.class_id));
    for (double c : o.color) mix(h, c);
  }
  mix(h, static_cast<std::uint64_t>(shading));
  mix(h, seed);
  return h;
}

Sample generate_scene(const SceneSpec& spec) {
  spec.validate();
  const std::size_t H = spec.height, W = spec.width;
  const CameraModel& cam = spec.camera;
  const Vec3 light = [] {
    Vec3 l{0.3, -1.0, -0.5};
    const double n = std::sqrt(dot3(l, l));
    return Vec3{l[0] / n, l[1] / n, l[2] / n};
  }();

  Sample s;
  s.rgb = Rgb8Image(W, H, 3);
  s.disparity = LabelMap(W, H);
  s.labels = LabelMap(W, H);
  s.seed = spec.seed;
  s.spec_hash = spec.hash();
  Image<double> depth(W, H, 1, kInf);

  Rng noise(spec.seed ^ 0x9e3779b97f4a7c15ull);
  for (std::size_t v = 0; v < H; ++v) {
    for (std::size_t u = 0; u < W; ++u) {
      const Vec3 dir{(static_cast<double>(u) - cam.u0) / cam.fx,
                     (static_cast<double>(v) - cam.v0) / cam.fy, 1.0};
      Hit best;
      const SceneObject* hit_obj = nullptr;
      for (const auto& o : spec.objects) {
        const Hit h = std::visit([&](const auto& p) { return intersect(p, dir); },
                                 o.shape);
        if (h.t < best.t) {
          best = h;
          hit_obj = &o;
        }
      }
      Color base = spec.sky_color;
      double shade = 1.0;
      if (hit_obj) {
        base = hit_obj->color;
        depth(v, u) = best.t;  // dir.z == 1, so t is Z
        s.labels(v, u) = hit_obj->class_id;
        if (spec.shading) {
          shade = 0.6 + 0.4 * std::max(0.0, dot3(best.normal, light));
        }
      } else {
        s.labels(v, u) = spec.sky_class;
      }
      for (std::size_t c = 0; c < 3; ++c) {
        const double n = 2.0 * noise.unit() - 1.0;
        s.rgb(v, u, c) = to_byte(base[c] * shade + spec.jitter * 255.0 * n);
      }
    }
  }
  for (std::size_t i = 0; i < depth.data.size(); ++i) {
    if (s.labels.data[i] == 0) {
      s.disparity.data[i] = 0;
    } else {
      s.disparity.data[i] =
          depth_to_level(depth.data[i], cam, spec.levels, spec.range);
    }
  }
  return s;
}

SceneSpec street_scene_spec(std::uint64_t seed, std::size_t height,
                            std::size_t width, std::size_t levels) {
  Rng rng(seed);
  SceneSpec spec;
  spec.height = height;
  spec.width = width;
  spec.levels = levels;
  spec.camera = scene_camera(height, width, 0.3);
  spec.range = depth_band(spec.camera, 2.0, 40.0);
  spec.class_names = {"sky", "ground", "box", "sphere"};
  spec.sky_class = 1;
  spec.sky_color = {135, 180, 235};
  spec.jitter = 0.04;
  spec.shading = true;
  spec.seed = seed;

  const double cam_height = 1.5;
  spec.objects.push_back({Plane{{0, 1, 0}, cam_height}, 2, {110, 110, 110}});

  // Place objects by their image position so they stay inside the frustum.
  auto ground_point = [&](double u_frac, double z) {
    const double x = (u_frac * static_cast<double>(width) - spec.camera.u0) *
                     z / spec.camera.fx;
    return x;
  };
  const std::size_t boxes = rng.integer(1, 2);
  for (std::size_t i = 0; i < boxes; ++i) {
    const double z = rng.uniform(6.0, 14.0);
    const double x = ground_point(rng.uniform(0.2, 0.8), z);
    const double w = rng.uniform(1.5, 3.0), h = rng.uniform(1.5, 3.0);
    const double d = rng.uniform(1.0, 2.0);
    spec.objects.push_back(
        {Box{{x - w / 2, cam_height - h, z}, {x + w / 2, cam_height, z + d}},
         3,
         {200, 80, 60}});
  }
  const std::size_t spheres = rng.integer(1, 2);
  for (std::size_t i = 0; i < spheres; ++i) {
    const double z = rng.uniform(4.0, 10.0);
    const double x = ground_point(rng.uniform(0.2, 0.8), z);
    const double r = rng.uniform(0.6, 1.1);
    spec.objects.push_back(
        {Sphere{{x, cam_height - r, z}, r}, 4, {60, 170, 80}});
  }
  return spec;
}

SceneSpec depth_discriminative_spec(std::uint64_t seed, std::size_t height,
                                    std::size_t width, std::size_t levels) {
  Rng rng(seed);
  SceneSpec spec;
  spec.height = height;
  spec.width = width;
  spec.levels = levels;
  spec.camera = scene_camera(height, width, 0.5);
  spec.camera.v0 = 0.5 * static_cast<double>(height - 1);
  spec.range = depth_band(spec.camera, 2.0, 40.0);
  spec.class_names = {"near", "far"};
  spec.sky_class = 0;
  spec.jitter = 0.08;
  spec.shading = false;
  spec.seed = seed;

  const Color shared{150, 150, 150};
  spec.objects.push_back({Plane{{0, 0, 1}, rng.uniform(10.0, 16.0)}, 2, shared});
  const std::size_t boxes = rng.integer(1, 3);
  for (std::size_t i = 0; i < boxes; ++i) {
    const double z = rng.uniform(2.2, 3.0);
    const double uc = rng.uniform(0.2, 0.8) * static_cast<double>(width);
    const double vc = rng.uniform(0.2, 0.8) * static_cast<double>(height);
    const double x = (uc - spec.camera.u0) * z / spec.camera.fx;
    const double y = (vc - spec.camera.v0) * z / spec.camera.fy;
    const double w = rng.uniform(0.5, 1.0), h = rng.uniform(0.5, 1.0);
    spec.objects.push_back(
        {Box{{x - w / 2, y - h / 2, z}, {x + w / 2, y + h / 2, z + 0.2}},
         1,
         shared});
  }
  return spec;
}

Sample mirror(const Sample& sample) {
  Sample out = sample;
  const std::size_t H = sample.labels.height, W = sample.labels.width;
  for (std::size_t v = 0; v < H; ++v) {
    for (std::size_t u = 0; u < W; ++u) {
      const std::size_t m = W - 1 - u;
      out.disparity(v, u) = sample.disparity(v, m);
      out.labels(v, u) = sample.labels(v, m);
      for (std::size_t c = 0; c < 3; ++c) out.rgb(v, u, c) = sample.rgb(v, m, c);
    }
  }
  return out;
}

Image<double> normalize_rgb(const Rgb8Image& raw) {
  Image<double> out(raw.width, raw.height, raw.channels);
  for (std::size_t i = 0; i < raw.data.size(); ++i) {
    out.data[i] = static_cast<double>(raw.data[i]) / 127.5 - 1.0;
  }
  return out;
}

RgbdFrame to_frame(const Sample& sample) {
  return RgbdFrame{normalize_rgb(sample.rgb), sample.disparity, sample.labels};
}

void validate_sample(const Sample& sample, std::size_t levels,
                     std::size_t num_classes) {
  to_frame(sample).validate(levels, num_classes);
  for (std::size_t i = 0; i < sample.labels.data.size(); ++i) {
    if (sample.labels.data[i] != 0 && sample.disparity.data[i] == 0) {
      throw std::invalid_argument("labelled pixel " + std::to_string(i) +
                                  " has disparity level 0");
    }
  }
}

SplitIndices dataset_split(std::size_t count, const std::array<double, 3>& ratios,
                           std::uint64_t seed) {
  double total = 0.0;
  for (double r : ratios) {
    if (!(r >= 0.0) || !std::isfinite(r)) {
      throw std::invalid_argument("split ratios must be finite and >= 0");
    }
    total += r;
  }
  if (!(total > 0.0)) {
    throw std::invalid_argument("split ratios must not all be zero");
  }
  std::vector<std::size_t> order(count);
  for (std::size_t i = 0; i < count; ++i) order[i] = i;
  Rng rng(seed);
  for (std::size_t i = count; i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng.next() % i);
    std::swap(order[i - 1], order[j]);
  }
  const auto n_train = static_cast<std::size_t>(
      std::floor(ratios[0] / total * static_cast<double>(count)));
  const auto n_val = std::min(
      count - n_train, static_cast<std::size_t>(std::floor(
                           ratios[1] / total * static_cast<double>(count))));
  SplitIndices s;
  s.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
  s.val.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train),
               order.begin() + static_cast<std::ptrdiff_t>(n_train + n_val));
  s.test.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train + n_val),
                order.end());
  return s;
}

}  // namespace s3d

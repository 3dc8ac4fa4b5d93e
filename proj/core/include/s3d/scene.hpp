#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "s3d/geometry.hpp"
#include "s3d/image.hpp"

namespace s3d {

using Vec3 = std::array<double, 3>;
using Color = std::array<double, 3>;  // 0..255

/// Points p with dot(normal, p) == offset. Camera frame: X right, Y down,
/// Z forward.
struct Plane {
  Vec3 normal;
  double offset;
};

struct Box {
  Vec3 min;
  Vec3 max;
};

struct Sphere {
  Vec3 center;
  double radius;
};

using Primitive = std::variant<Plane, Box, Sphere>;

struct SceneObject {
  Primitive shape;
  std::uint16_t class_id = 1;
  Color color{128, 128, 128};
};

/// Everything needed to render one labelled RGB-D frame.
struct SceneSpec {
  std::size_t height = 32;
  std::size_t width = 32;
  std::size_t levels = 15;
  CameraModel camera;
  DisparityRange range;
  std::vector<std::string> class_names;  // class i + 1 is class_names[i]
  std::uint16_t sky_class = 0;           // label for rays that miss; 0 = void
  Color sky_color{135, 180, 235};
  std::vector<SceneObject> objects;
  double jitter = 0.0;  // per-pixel colour noise amplitude, fraction of 255
  bool shading = true;
  std::uint64_t seed = 0;

  std::size_t num_classes() const { return class_names.size(); }
  /// Throws std::invalid_argument on empty objects, k < 2, bad class ids, or
  /// objects outside the camera frustum.
  void validate() const;
  std::uint64_t hash() const;
};

/// A rendered frame: raw 8-bit colour, disparity levels, labels.
struct Sample {
  Rgb8Image rgb;
  LabelMap disparity;
  LabelMap labels;
  std::uint64_t seed = 0;
  std::uint64_t spec_hash = 0;

  friend bool operator==(const Sample&, const Sample&) = default;
};

/// Casts one ray per pixel; the nearest hit sets depth, class and colour.
/// Misses take the sky class at disparity level 1 (or void at level 0 when
/// there is no sky class).
Sample generate_scene(const SceneSpec& spec);

/// Randomized street-like layout: sky, ground plane, boxes, spheres (k = 4).
SceneSpec street_scene_spec(std::uint64_t seed, std::size_t height,
                            std::size_t width, std::size_t levels);

/// Two classes with one colour distribution: thin boxes in a near disparity
/// band in front of a wall in a far band (k = 2).
SceneSpec depth_discriminative_spec(std::uint64_t seed, std::size_t height,
                                    std::size_t width, std::size_t levels);

/// Horizontal flip of colour, disparity and labels.
Sample mirror(const Sample& sample);

/// x / 127.5 - 1.
Image<double> normalize_rgb(const Rgb8Image& raw);

RgbdFrame to_frame(const Sample& sample);

/// Throws unless sizes agree, disparities lie in [0, D], labels in [0, k],
/// and every labelled pixel has disparity >= 1.
void validate_sample(const Sample& sample, std::size_t levels,
                     std::size_t num_classes);

struct SplitIndices {
  std::vector<std::size_t> train;
  std::vector<std::size_t> val;
  std::vector<std::size_t> test;
};

/// Seeded shuffle of [0, count) cut by `ratios` (normalized). Train and val
/// take floor shares; test takes the rest.
SplitIndices dataset_split(std::size_t count, const std::array<double, 3>& ratios,
                           std::uint64_t seed);

}  // namespace s3d

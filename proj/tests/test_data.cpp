#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <map>
#include <random>
#include <set>
#include <string>

#include "oracles.hpp"
#include "s3d/dataset.hpp"
#include "s3d/metrics.hpp"
#include "s3d/netpbm.hpp"
#include "s3d/scene.hpp"

using namespace s3d;
namespace fs = std::filesystem;

namespace {

std::vector<std::uint8_t> bytes_of(const std::string& s) {
  return {s.begin(), s.end()};
}

SceneSpec ground_only(double v0) {
  SceneSpec s;
  s.height = 12;
  s.width = 10;
  s.levels = 15;
  s.camera = {9.0, 9.0, 4.5, v0, 9.0, 0.5};
  s.range = {s.camera.fb() / 40.0, s.camera.fb() / 1.0};
  s.class_names = {"sky", "ground", "box"};
  s.sky_class = 1;
  s.objects.push_back({Plane{{0, 1, 0}, 1.5}, 2, {100, 100, 100}});
  s.shading = false;
  return s;
}

class TempDir {
 public:
  explicit TempDir(const std::string& name)
      : path_(fs::temp_directory_path() / ("s3d_test_" + name)) {
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

}  // namespace

TEST(Scene, GroundPlaneFillsFrame) {
  const SceneSpec spec = ground_only(-2.0);
  const Sample s = generate_scene(spec);
  for (auto l : s.labels.data) EXPECT_EQ(l, 2);
  for (std::size_t v = 0; v < spec.height; ++v) {
    for (std::size_t u = 0; u < spec.width; ++u) {
      const double z = 1.5 * spec.camera.fy / (static_cast<double>(v) - spec.camera.v0);
      EXPECT_EQ(s.disparity(v, u), depth_to_level(z, spec.camera, spec.levels, spec.range));
      if (v > 0) EXPECT_GE(s.disparity(v, u), s.disparity(v - 1, u));
    }
  }
  EXPECT_GT(s.disparity(spec.height - 1, 0), s.disparity(0, 0));
}

TEST(Scene, OcclusionByNearerBox) {
  SceneSpec spec = ground_only(-2.0);
  const Sample plane_only = generate_scene(spec);
  spec.objects.push_back({Box{{-0.5, 0.2, 1.1}, {0.5, 0.6, 1.3}}, 3, {200, 0, 0}});
  const Sample with_box = generate_scene(spec);
  std::size_t box_pixels = 0;
  for (std::size_t i = 0; i < with_box.labels.data.size(); ++i) {
    if (with_box.labels.data[i] != 3) continue;
    ++box_pixels;
    EXPECT_GT(with_box.disparity.data[i], plane_only.disparity.data[i]);
  }
  EXPECT_GT(box_pixels, 0u);
}

TEST(Scene, SkyAndDeterminism) {
  const SceneSpec spec = street_scene_spec(5, 32, 32, 15);
  const Sample a = generate_scene(spec);
  EXPECT_EQ(a, generate_scene(spec));
  EXPECT_NE(a, generate_scene(street_scene_spec(6, 32, 32, 15)));
  bool saw_sky = false;
  for (std::size_t i = 0; i < a.labels.data.size(); ++i) {
    if (a.labels.data[i] == 1) {
      saw_sky = true;
      EXPECT_EQ(a.disparity.data[i], 1);
    }
  }
  EXPECT_TRUE(saw_sky);
  validate_sample(a, 15, 4);

  SceneSpec empty = spec;
  empty.objects.clear();
  EXPECT_THROW(generate_scene(empty), std::invalid_argument);
}

TEST(Scene, DepthDiscriminativeFixtureSeparatesBands) {
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    const Sample s = generate_scene(depth_discriminative_spec(seed, 32, 32, 15));
    validate_sample(s, 15, 2);
    std::uint16_t near_min = 100, far_max = 0;
    for (std::size_t i = 0; i < s.labels.data.size(); ++i) {
      ASSERT_NE(s.labels.data[i], 0);
      if (s.labels.data[i] == 1) near_min = std::min(near_min, s.disparity.data[i]);
      if (s.labels.data[i] == 2) far_max = std::max(far_max, s.disparity.data[i]);
    }
    EXPECT_GT(near_min, far_max);
  }
}

TEST(Mirror, InvolutionAndColumns) {
  std::mt19937_64 rng(41);
  for (int t = 0; t < 10; ++t) {
    const Sample s = generate_scene(street_scene_spec(rng(), 16, 24, 15));
    const Sample m = mirror(s);
    EXPECT_EQ(mirror(m), s);
    for (std::size_t v = 0; v < 16; ++v) {
      for (std::size_t u = 0; u < 24; ++u) {
        EXPECT_EQ(m.labels(v, u), s.labels(v, 23 - u));
        EXPECT_EQ(m.disparity(v, u), s.disparity(v, 23 - u));
        EXPECT_EQ(m.rgb(v, u, 1), s.rgb(v, 23 - u, 1));
      }
    }
    std::map<std::uint16_t, int> hs, hm;
    for (auto l : s.labels.data) ++hs[l];
    for (auto l : m.labels.data) ++hm[l];
    EXPECT_EQ(hs, hm);
  }
}

TEST(NormalizeRgb, Endpoints) {
  Rgb8Image raw(3, 1, 3);
  raw.data = {0, 255, 0, 255, 0, 255, 0, 0, 0};
  const Image<double> n = normalize_rgb(raw);
  EXPECT_EQ(n.data[0], -1.0);
  EXPECT_EQ(n.data[1], 1.0);
  EXPECT_EQ(127.5 / 127.5 - 1.0, 0.0);
  for (double v : n.data) EXPECT_TRUE(v >= -1.0 && v <= 1.0);
}

TEST(Netpbm, MinimalPpm) {
  auto b = bytes_of("P6\n1 1\n255\n");
  b.insert(b.end(), {1, 2, 3});
  const Rgb8Image img = parse_ppm(b);
  EXPECT_EQ(img.width, 1u);
  EXPECT_EQ(img.data, (std::vector<std::uint8_t>{1, 2, 3}));
  EXPECT_EQ(encode_ppm(img), b);
}

TEST(Netpbm, CommentsAndEightBitPgm) {
  auto b = bytes_of("P5 # grey\n2 # w\n1\n255\n");
  b.insert(b.end(), {7, 200});
  const LabelMap img = parse_pgm(b);
  EXPECT_EQ(img.data, (std::vector<std::uint16_t>{7, 200}));
  const auto wide = encode_pgm(img);
  EXPECT_EQ(parse_pgm(wide), img);
  // 16-bit samples are big-endian.
  EXPECT_EQ(wide[wide.size() - 2], 0);
  EXPECT_EQ(wide[wide.size() - 1], 200);
}

TEST(Netpbm, RandomRoundTrips) {
  std::mt19937_64 rng(42);
  const TempDir dir("netpbm");
  for (int t = 0; t < 20; ++t) {
    const std::size_t w = oracle::pick(rng, 1, 40), h = oracle::pick(rng, 1, 40);
    Rgb8Image rgb(w, h, 3);
    for (auto& v : rgb.data) v = static_cast<std::uint8_t>(rng());
    LabelMap map(w, h);
    for (auto& v : map.data) v = static_cast<std::uint16_t>(rng());
    EXPECT_EQ(parse_ppm(encode_ppm(rgb)), rgb);
    EXPECT_EQ(parse_pgm(encode_pgm(map)), map);
    save_ppm(rgb, dir.path() / "a.ppm");
    save_pgm(map, dir.path() / "a.pgm");
    EXPECT_EQ(load_ppm(dir.path() / "a.ppm"), rgb);
    EXPECT_EQ(load_pgm(dir.path() / "a.pgm"), map);
  }
}

TEST(Netpbm, MalformedInputsCarryOffsets) {
  struct Case {
    std::string bytes;
    bool ppm;
    std::size_t offset;
  };
  const std::vector<Case> cases = {
      {"P3\n1 1\n255\n\x01\x02\x03", true, 0},   // wrong magic
      {"P6\n1 x\n255\n", true, 5},               // bad height
      {"P6\n1 1\n65535\n\x01\x02\x03", true, 12}, // unsupported PPM maxval
      {"P6\n2 1\n255\n\x01\x02\x03", true, 14},  // truncated raster
      {"P5\n0 1\n255\n", false, 11},             // zero width
      {"P5\n1 1\n70000\n\x01\x02", false, 12},    // maxval too large
      {"P5\n1 1\n255", false, 10},               // no whitespace after maxval
  };
  for (const auto& c : cases) {
    try {
      if (c.ppm) {
        parse_ppm(bytes_of(c.bytes));
      } else {
        parse_pgm(bytes_of(c.bytes));
      }
      ADD_FAILURE() << "accepted: " << c.bytes;
    } catch (const FormatError& e) {
      EXPECT_EQ(e.offset(), c.offset) << e.what();
      EXPECT_NE(std::string(e.what()).find("byte offset"), std::string::npos);
    }
  }
  const TempDir dir("malformed");
  const fs::path p = dir.path() / "bad.pgm";
  write_file(p, bytes_of("P2\n"));
  try {
    load_pgm(p);
    ADD_FAILURE();
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("bad.pgm"), std::string::npos);
  }
}

TEST(Split, CoverDisjointAndDeterministic) {
  const SplitIndices all = dataset_split(10, {1, 0, 0}, 3);
  EXPECT_EQ(all.train.size(), 10u);
  EXPECT_TRUE(all.val.empty() && all.test.empty());

  std::mt19937_64 rng(43);
  for (int t = 0; t < 50; ++t) {
    const std::size_t n = oracle::pick(rng, 0, 40);
    const std::array<double, 3> r{oracle::uniform(rng, 0, 1), oracle::uniform(rng, 0, 1),
                                  oracle::uniform(rng, 0.1, 1)};
    const std::uint64_t seed = rng();
    const SplitIndices s = dataset_split(n, r, seed);
    std::multiset<std::size_t> seen;
    for (const auto* part : {&s.train, &s.val, &s.test}) seen.insert(part->begin(), part->end());
    EXPECT_EQ(seen.size(), n);
    for (std::size_t i = 0; i < n; ++i) EXPECT_EQ(seen.count(i), 1u);
    const SplitIndices again = dataset_split(n, r, seed);
    EXPECT_EQ(again.train, s.train);
    EXPECT_EQ(again.test, s.test);
  }
  EXPECT_THROW(dataset_split(3, {0, 0, 0}, 1), std::invalid_argument);
}

TEST(Dataset, LayoutRoundTripKeepsMetrics) {
  const TempDir dir("dataset");
  const Sample s = generate_scene(street_scene_spec(44, 64, 64, 15));
  write_classes(dir.path(), {"sky", "ground", "box", "sphere"});
  write_sample(dir.path() / "train", sample_id(3), s);
  write_manifest(dir.path() / "train", {sample_id(3)});
  EXPECT_EQ(sample_id(3), "000003");
  EXPECT_EQ(read_classes(dir.path()),
            (std::vector<std::string>{"sky", "ground", "box", "sphere"}));

  const auto entries = read_split(dir.path(), "train");
  ASSERT_EQ(entries.size(), 1u);
  const Sample& back = entries[0].sample;
  EXPECT_EQ(back.rgb, s.rgb);
  EXPECT_EQ(back.disparity, s.disparity);
  EXPECT_EQ(back.labels, s.labels);

  // Same metrics downstream against a fixed corruption of the labels.
  LabelMap pred = s.labels;
  for (std::size_t i = 0; i < pred.data.size(); i += 7) pred.data[i] = 2;
  ConfusionMatrix a(4), b(4);
  a.accumulate(s.labels, pred, true);
  b.accumulate(back.labels, pred, true);
  EXPECT_EQ(a, b);
  EXPECT_EQ(metric_report(a, {"void", "sky", "ground", "box", "sphere"}),
            metric_report(b, {"void", "sky", "ground", "box", "sphere"}));

  write_file(dir.path() / "classes.txt", bytes_of("0\tvoid\n2\tsky\n"));
  EXPECT_THROW(read_classes(dir.path()), std::runtime_error);
  EXPECT_THROW(read_split(dir.path(), "val"), std::runtime_error);
}

TEST(Dataset, SampleValidationCatchesBadLabels) {
  Sample s = generate_scene(street_scene_spec(45, 16, 16, 15));
  s.labels.data[0] = 9;
  EXPECT_THROW(validate_sample(s, 15, 4), std::invalid_argument);
  s = generate_scene(street_scene_spec(45, 16, 16, 15));
  s.disparity.data[0] = 0;
  EXPECT_THROW(validate_sample(s, 15, 4), std::invalid_argument);
}

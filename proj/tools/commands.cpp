#include "commands.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>

#include "s3d/checkpoint.hpp"
#include "s3d/dataset.hpp"
#include "s3d/metrics.hpp"
#include "s3d/netpbm.hpp"
#include "s3d/trainer.hpp"
#include "verification.hpp"

namespace s3d::cli {
namespace fs = std::filesystem;

namespace {

constexpr const char* kSplits[] = {"train", "val", "test"};

std::size_t scene_classes(SceneKind kind) {
  return kind == SceneKind::kStreet ? 4 : 2;
}

void require_dataset_root(const RunConfig& cfg) {
  if (cfg.dataset_root.empty()) throw ConfigError("dataset_root is not set");
}

void require_split(const std::string& split) {
  if (std::find(std::begin(kSplits), std::end(kSplits), split) ==
      std::end(kSplits)) {
    throw ConfigError("unknown split '" + split + "' (train, val, test)");
  }
}

std::vector<std::string> class_names_with_void(const RunConfig& cfg) {
  std::vector<std::string> names = read_classes(cfg.dataset_root);
  if (names.size() != cfg.num_classes) {
    throw ConfigError("dataset has " + std::to_string(names.size()) +
                      " classes but num_classes = " +
                      std::to_string(cfg.num_classes));
  }
  names.insert(names.begin(), "void");
  return names;
}

std::vector<DatasetEntry> load_checked_split(const RunConfig& cfg,
                                             const std::string& split) {
  std::vector<DatasetEntry> entries = read_split(cfg.dataset_root, split);
  for (const auto& e : entries) {
    const Sample& s = e.sample;
    if (s.rgb.width != cfg.width || s.rgb.height != cfg.height) {
      throw ConfigError("sample " + e.id + " is " + std::to_string(s.rgb.width) +
                        "x" + std::to_string(s.rgb.height) + ", config expects " +
                        std::to_string(cfg.width) + "x" +
                        std::to_string(cfg.height));
    }
    try {
      validate_sample(s, cfg.levels, cfg.num_classes);
    } catch (const std::invalid_argument& ex) {
      throw ConfigError("sample " + e.id + ": " + ex.what());
    }
  }
  return entries;
}

ResTdmModel load_matching_model(const RunConfig& cfg) {
  const ResTdmConfig expected = cfg.network();
  if (cfg.checkpoint.empty()) throw ConfigError("checkpoint is not set");
  ResTdmModel model = load_checkpoint(cfg.checkpoint);
  if (!(model.config == expected)) {
    throw ConfigError("checkpoint " + cfg.checkpoint +
                      " was trained with a different network configuration");
  }
  return model;
}

void ensure_writable_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw ConfigError("cannot create directory " + dir.string());
  }
  const fs::path probe = dir / ".s3d_write_probe";
  {
    std::ofstream f(probe);
    if (!f) throw ConfigError("directory " + dir.string() + " is not writable");
  }
  fs::remove(probe, ec);
}

std::string format_epoch(const EpochStats& s) {
  char buf[128];
  std::snprintf(buf, sizeof buf, "%zu\t%.9f\t%.6f\n", s.epoch, s.mean_loss,
                s.train_global_accuracy);
  return buf;
}

}  // namespace

std::array<std::uint8_t, 3> palette_color(std::uint16_t label) {
  static constexpr std::array<std::array<std::uint8_t, 3>, 12> kTable = {{
      {0, 0, 0},
      {70, 130, 180},
      {128, 64, 128},
      {220, 20, 60},
      {107, 142, 35},
      {250, 170, 30},
      {0, 0, 142},
      {152, 251, 152},
      {190, 153, 153},
      {255, 255, 0},
      {119, 11, 32},
      {0, 80, 100},
  }};
  if (label < kTable.size()) return kTable[label];
  // Beyond the table: a fixed integer hash, never pure black.
  std::uint32_t h = label * 2654435761u;
  return {static_cast<std::uint8_t>(64 + (h >> 8) % 192),
          static_cast<std::uint8_t>(64 + (h >> 16) % 192),
          static_cast<std::uint8_t>(64 + (h >> 24) % 192)};
}

Rgb8Image colorize(const LabelMap& labels) {
  Rgb8Image img(labels.width, labels.height, 3);
  for (std::size_t i = 0; i < labels.data.size(); ++i) {
    const auto c = palette_color(labels.data[i]);
    for (std::size_t ch = 0; ch < 3; ++ch) img.data[3 * i + ch] = c[ch];
  }
  return img;
}

std::uint64_t sample_seed(std::uint64_t run_seed, std::size_t index) {
  // splitmix64 finaliser over (seed, index)
  std::uint64_t z = run_seed + 0x9e3779b97f4a7c15ull * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

SceneSpec scene_spec(const RunConfig& cfg, std::uint64_t seed) {
  return cfg.scene == SceneKind::kStreet
             ? street_scene_spec(seed, cfg.height, cfg.width, cfg.levels)
             : depth_discriminative_spec(seed, cfg.height, cfg.width,
                                         cfg.levels);
}

void cmd_gen_data(const RunConfig& cfg, std::size_t count,
                  const fs::path& out_dir, std::ostream& out) {
  if (out_dir.empty()) throw ConfigError("no output directory (--out or dataset_root)");
  if (cfg.num_classes != scene_classes(cfg.scene)) {
    throw ConfigError("num_classes = " + std::to_string(cfg.num_classes) +
                      " but the scene generator produces " +
                      std::to_string(scene_classes(cfg.scene)) + " classes");
  }
  if (cfg.height == 0 || cfg.width == 0 || cfg.levels == 0) {
    throw ConfigError("height, width and disparity_levels must be positive");
  }
  SplitIndices split;
  try {
    split = dataset_split(count, cfg.split_ratios, cfg.seed);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  std::vector<SceneSpec> specs;
  specs.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    specs.push_back(scene_spec(cfg, sample_seed(cfg.seed, i)));
    try {
      specs.back().validate();
    } catch (const std::invalid_argument& e) {
      throw ConfigError("scene " + std::to_string(i) + ": " + e.what());
    }
  }
  const std::vector<std::string> names =
      count > 0 ? specs.front().class_names
                : scene_spec(cfg, sample_seed(cfg.seed, 0)).class_names;

  ensure_writable_dir(out_dir);
  write_classes(out_dir, names);
  const std::vector<std::size_t>* parts[] = {&split.train, &split.val,
                                             &split.test};
  for (std::size_t p = 0; p < 3; ++p) {
    std::vector<std::size_t> indices = *parts[p];
    std::sort(indices.begin(), indices.end());
    const fs::path dir = out_dir / kSplits[p];
    std::vector<std::string> ids;
    for (std::size_t i : indices) {
      const Sample s = generate_scene(specs[i]);
      validate_sample(s, cfg.levels, cfg.num_classes);
      ids.push_back(sample_id(i));
      write_sample(dir, ids.back(), s);
    }
    write_manifest(dir, ids);
    out << kSplits[p] << '\t' << ids.size() << '\n';
  }
}

void cmd_train(const RunConfig& cfg, std::ostream& out) {
  const ResTdmConfig net = cfg.network();
  require_dataset_root(cfg);
  if (cfg.checkpoint.empty()) throw ConfigError("checkpoint is not set");
  class_names_with_void(cfg);
  const std::vector<DatasetEntry> entries = load_checked_split(cfg, "train");
  if (entries.empty()) throw ConfigError("train split is empty");
  std::vector<Sample> samples;
  for (const auto& e : entries) samples.push_back(e.sample);

  ResTdmModel model = build_model(net, cfg.seed);
  TrainOptions opts;
  opts.rmsprop = cfg.rmsprop;
  opts.epochs = cfg.epochs;
  opts.max_steps = cfg.max_steps;
  opts.mirror_augment = cfg.mirror_augment;
  opts.seed = cfg.seed;
  std::string log;
  train(model, samples, opts, [&](const EpochStats& s) {
    const std::string line = format_epoch(s);
    out << line << std::flush;
    log += line;
  });
  save_checkpoint(model, cfg.checkpoint);
  const std::vector<std::uint8_t> bytes(log.begin(), log.end());
  write_file(cfg.log_path(), bytes);
}

void cmd_eval(const RunConfig& cfg, const EvalOptions& opts, std::ostream& out) {
  require_dataset_root(cfg);
  require_split(opts.split);
  if (opts.ground_truth && opts.predictions) {
    throw ConfigError("--ground-truth and --predictions are exclusive");
  }
  std::optional<ResTdmModel> model;
  if (!opts.ground_truth && !opts.predictions) model = load_matching_model(cfg);
  const std::vector<std::string> names = class_names_with_void(cfg);
  const std::vector<DatasetEntry> entries = load_checked_split(cfg, opts.split);

  ConfusionMatrix cm(cfg.num_classes);
  for (const auto& e : entries) {
    LabelMap pred;
    if (opts.ground_truth) {
      pred = e.sample.labels;
    } else if (opts.predictions) {
      pred = load_pgm(*opts.predictions / (e.id + ".pred.pgm"));
      if (!pred.same_size(e.sample.labels)) {
        throw ConfigError("prediction for " + e.id + " has the wrong size");
      }
      for (auto v : pred.data) {
        if (v > cfg.num_classes) {
          throw ConfigError("prediction for " + e.id + " has label " +
                            std::to_string(v) + " > num_classes");
        }
      }
    } else {
      pred = predict(*model, to_frame(e.sample));
    }
    cm.accumulate(e.sample.labels, pred, true);
  }
  out << metric_report(cm, names);
}

void cmd_predict(const RunConfig& cfg, const PredictOptions& opts,
                 std::ostream& out) {
  require_dataset_root(cfg);
  require_split(opts.split);
  const bool single = !opts.sample.empty();
  if (single == opts.out_stem.empty() || single == !opts.out_dir.empty()) {
    throw ConfigError("use either --sample ID --out STEM or --out-dir DIR");
  }
  const ResTdmModel model = load_matching_model(cfg);
  class_names_with_void(cfg);
  std::vector<DatasetEntry> entries;
  if (single) {
    const auto ids = read_manifest(fs::path(cfg.dataset_root) / opts.split);
    if (std::find(ids.begin(), ids.end(), opts.sample) == ids.end()) {
      throw ConfigError("sample '" + opts.sample + "' is not in the " +
                        opts.split + " split");
    }
    for (auto& e : load_checked_split(cfg, opts.split)) {
      if (e.id == opts.sample) entries.push_back(std::move(e));
    }
  } else {
    entries = load_checked_split(cfg, opts.split);
    ensure_writable_dir(opts.out_dir);
  }
  for (const auto& e : entries) {
    const fs::path stem = single ? opts.out_stem : opts.out_dir / e.id;
    const LabelMap pred = predict(model, to_frame(e.sample));
    save_pgm(pred, stem.string() + ".pred.pgm");
    save_ppm(colorize(pred), stem.string() + ".pred.ppm");
    out << e.id << '\t' << stem.string() << ".pred.pgm\n";
  }
}

bool cmd_check_geometry(const RunConfig& cfg, std::ostream& out) {
  try {
    cfg.camera.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("camera: ") + e.what());
  }
  if (cfg.geometry_quadrics < 3 || cfg.geometry_points == 0) {
    throw ConfigError("geometry suite needs >= 3 quadrics and >= 1 point");
  }
  const GeometryReport r = run_geometry_suite(
      cfg.camera, cfg.geometry_quadrics, cfg.geometry_points, cfg.seed);
  char buf[160];
  for (const auto& c : r.cases) {
    std::snprintf(buf, sizeof buf, "%s\tcamera%zu\t%zu\t%.3e\n",
                  c.quadric.c_str(), c.camera, c.points, c.max_residual);
    out << buf;
  }
  std::snprintf(buf, sizeof buf, "max_residual\t%.3e\n", r.max_residual);
  out << buf << "status\t" << (r.passed ? "PASS" : "FAIL") << '\n';
  return r.passed;
}

bool cmd_grad_check(const RunConfig& cfg, std::ostream& out) {
  bool ok = true;
  char buf[200];
  for (const auto& r : run_grad_checks(cfg.seed, cfg.grad_check_perturb)) {
    std::snprintf(buf, sizeof buf, "%s\t%zu\t%.3e\t%.0e\t%s\n", r.name.c_str(),
                  r.entries, r.max_rel_error, r.tolerance,
                  r.passed ? "PASS" : "FAIL");
    out << buf;
    ok = ok && r.passed;
  }
  out << "status\t" << (ok ? "PASS" : "FAIL") << '\n';
  return ok;
}

int run_command(const std::function<int()>& body, std::ostream& err) {
  try {
    return body();
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const FormatError& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const CheckpointError& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
}

}  // namespace s3d::cli

#include "run_config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>

namespace s3d::cli {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::size_t to_count(const std::string& key, const std::string& v) {
  std::size_t out = 0;
  const auto* end = v.data() + v.size();
  const auto [p, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc{} || p != end) {
    throw ConfigError("config key '" + key + "': expected a non-negative "
                      "integer, got '" + v + "'");
  }
  return out;
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  const auto* end = v.data() + v.size();
  const auto [p, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc{} || p != end) {
    throw ConfigError("config key '" + key + "': expected an unsigned "
                      "integer, got '" + v + "'");
  }
  return out;
}

double to_real(const std::string& key, const std::string& v) {
  std::istringstream is(v);
  double out = 0.0;
  is >> out;
  if (!is || !is.eof() || !std::isfinite(out)) {
    throw ConfigError("config key '" + key + "': expected a real number, got '" +
                      v + "'");
  }
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("config key '" + key + "': expected true/false, got '" + v +
                    "'");
}

using Setter = std::function<void(RunConfig&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"dataset_root", [](RunConfig& c, const std::string& v) { c.dataset_root = v; }},
      {"height", [](RunConfig& c, const std::string& v) { c.height = to_count("height", v); }},
      {"width", [](RunConfig& c, const std::string& v) { c.width = to_count("width", v); }},
      {"disparity_levels", [](RunConfig& c, const std::string& v) { c.levels = to_count("disparity_levels", v); }},
      {"num_classes", [](RunConfig& c, const std::string& v) { c.num_classes = to_count("num_classes", v); }},
      {"num_scales", [](RunConfig& c, const std::string& v) { c.num_scales = to_count("num_scales", v); }},
      {"features", [](RunConfig& c, const std::string& v) { c.features = to_count("features", v); }},
      {"lr", [](RunConfig& c, const std::string& v) { c.rmsprop.lr = to_real("lr", v); }},
      {"decay", [](RunConfig& c, const std::string& v) { c.rmsprop.decay = to_real("decay", v); }},
      {"epsilon", [](RunConfig& c, const std::string& v) { c.rmsprop.epsilon = to_real("epsilon", v); }},
      {"epochs", [](RunConfig& c, const std::string& v) { c.epochs = to_count("epochs", v); }},
      {"max_steps", [](RunConfig& c, const std::string& v) { c.max_steps = to_count("max_steps", v); }},
      {"seed", [](RunConfig& c, const std::string& v) { c.seed = to_u64("seed", v); }},
      {"mode", [](RunConfig& c, const std::string& v) {
         try {
           c.mode = parse_input_mode(v);
         } catch (const std::invalid_argument& e) {
           throw ConfigError(e.what());
         }
       }},
      {"s2d_zero_disparity", [](RunConfig& c, const std::string& v) { c.s2d_zero_disparity = to_bool("s2d_zero_disparity", v); }},
      {"mirror_augment", [](RunConfig& c, const std::string& v) { c.mirror_augment = to_bool("mirror_augment", v); }},
      {"checkpoint", [](RunConfig& c, const std::string& v) { c.checkpoint = v; }},
      {"log", [](RunConfig& c, const std::string& v) { c.log = v; }},
      {"scene", [](RunConfig& c, const std::string& v) {
         if (v == "street") {
           c.scene = SceneKind::kStreet;
         } else if (v == "depth-discriminative") {
           c.scene = SceneKind::kDepthDiscriminative;
         } else {
           throw ConfigError("config key 'scene': expected street or "
                             "depth-discriminative, got '" + v + "'");
         }
       }},
      {"split_ratios", [](RunConfig& c, const std::string& v) {
         std::array<double, 3> r{};
         std::istringstream is(v);
         std::string part;
         std::size_t i = 0;
         while (std::getline(is, part, ',')) {
           if (i == 3) throw ConfigError("split_ratios takes three values");
           r[i++] = to_real("split_ratios", trim(part));
         }
         if (i != 3) throw ConfigError("split_ratios takes three values");
         c.split_ratios = r;
       }},
      {"cam_fx", [](RunConfig& c, const std::string& v) { c.camera.fx = to_real("cam_fx", v); }},
      {"cam_fy", [](RunConfig& c, const std::string& v) { c.camera.fy = to_real("cam_fy", v); }},
      {"cam_u0", [](RunConfig& c, const std::string& v) { c.camera.u0 = to_real("cam_u0", v); }},
      {"cam_v0", [](RunConfig& c, const std::string& v) { c.camera.v0 = to_real("cam_v0", v); }},
      {"cam_f", [](RunConfig& c, const std::string& v) { c.camera.f = to_real("cam_f", v); }},
      {"cam_b", [](RunConfig& c, const std::string& v) { c.camera.b = to_real("cam_b", v); }},
      {"geometry_quadrics", [](RunConfig& c, const std::string& v) { c.geometry_quadrics = to_count("geometry_quadrics", v); }},
      {"geometry_points", [](RunConfig& c, const std::string& v) { c.geometry_points = to_count("geometry_points", v); }},
      {"grad_check_perturb", [](RunConfig& c, const std::string& v) { c.grad_check_perturb = to_bool("grad_check_perturb", v); }},
  };
  return table;
}

}  // namespace

ResTdmConfig RunConfig::network() const {
  ResTdmConfig n;
  n.num_scales = num_scales;
  n.features = features;
  n.num_classes = num_classes;
  n.height = height;
  n.width = width;
  n.levels = levels;
  n.mode = mode;
  n.zero_disparity_channel = s2d_zero_disparity;
  try {
    n.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return n;
}

std::string RunConfig::log_path() const {
  return log.empty() ? checkpoint + ".log" : log;
}

std::map<std::string, std::string> parse_key_values(const std::string& text) {
  std::map<std::string, std::string> out;
  std::istringstream is(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) {
      line.resize(hash);
    }
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(lineno) +
                        ": expected 'key = value'");
    }
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) {
      throw ConfigError("config line " + std::to_string(lineno) +
                        ": empty key");
    }
    out[key] = trim(line.substr(eq + 1));
  }
  return out;
}

RunConfig make_run_config(std::map<std::string, std::string> values,
                          const std::vector<std::string>& overrides) {
  for (const auto& o : overrides) {
    const auto eq = o.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("override '" + o + "' is not key=value");
    }
    values[trim(o.substr(0, eq))] = trim(o.substr(eq + 1));
  }
  RunConfig cfg;
  const auto& table = setters();
  for (const auto& [key, value] : values) {
    const auto it = table.find(key);
    if (it == table.end()) throw ConfigError("unknown config key '" + key + "'");
    it->second(cfg, value);
  }
  if (!(cfg.rmsprop.lr > 0.0) || !(cfg.rmsprop.epsilon > 0.0) ||
      !(cfg.rmsprop.decay >= 0.0 && cfg.rmsprop.decay < 1.0)) {
    throw ConfigError("RMSProp requires lr > 0, epsilon > 0, 0 <= decay < 1");
  }
  return cfg;
}

RunConfig load_run_config(const std::string& path,
                          const std::vector<std::string>& overrides) {
  std::map<std::string, std::string> values;
  if (!path.empty()) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    values = parse_key_values(ss.str());
  }
  return make_run_config(std::move(values), overrides);
}

}  // namespace s3d::cli

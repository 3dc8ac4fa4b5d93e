#include "s3d/dataset.hpp"

#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "s3d/netpbm.hpp"

namespace s3d {
namespace fs = std::filesystem;

namespace {

std::string strip_cr(std::string line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

}  // namespace

std::string sample_id(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%06zu", index);
  return buf;
}

void write_classes(const fs::path& root, const std::vector<std::string>& names) {
  fs::create_directories(root);
  std::ofstream out(root / "classes.txt", std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + (root / "classes.txt").string());
  out << "0\tvoid\n";
  for (std::size_t i = 0; i < names.size(); ++i) {
    out << (i + 1) << '\t' << names[i] << '\n';
  }
}

std::vector<std::string> read_classes(const fs::path& root) {
  const fs::path path = root / "classes.txt";
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::vector<std::string> names;
  std::string line;
  std::size_t expected = 0;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = strip_cr(line);
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) {
      throw std::runtime_error(path.string() + ":" + std::to_string(lineno) +
                               ": expected index<TAB>name");
    }
    std::size_t index = 0;
    try {
      index = std::stoul(line.substr(0, tab));
    } catch (const std::exception&) {
      throw std::runtime_error(path.string() + ":" + std::to_string(lineno) +
                               ": bad class index");
    }
    if (index != expected) {
      throw std::runtime_error(path.string() + ":" + std::to_string(lineno) +
                               ": class indices must run 0, 1, 2, ...");
    }
    if (index > 0) names.push_back(line.substr(tab + 1));
    ++expected;
  }
  if (expected == 0) {
    throw std::runtime_error(path.string() + ": no classes");
  }
  return names;
}

void write_sample(const fs::path& split_dir, const std::string& id,
                  const Sample& sample) {
  fs::create_directories(split_dir);
  save_ppm(sample.rgb, split_dir / (id + ".rgb.ppm"));
  save_pgm(sample.disparity, split_dir / (id + ".disp.pgm"));
  save_pgm(sample.labels, split_dir / (id + ".label.pgm"));
}

Sample read_sample(const fs::path& split_dir, const std::string& id) {
  Sample s;
  s.rgb = load_ppm(split_dir / (id + ".rgb.ppm"));
  s.disparity = load_pgm(split_dir / (id + ".disp.pgm"));
  s.labels = load_pgm(split_dir / (id + ".label.pgm"));
  if (!s.rgb.same_size(s.disparity) || !s.rgb.same_size(s.labels)) {
    throw std::runtime_error("sample " + id + " in " + split_dir.string() +
                             " has mismatched image sizes");
  }
  return s;
}

void write_manifest(const fs::path& split_dir,
                    const std::vector<std::string>& ids) {
  fs::create_directories(split_dir);
  std::ofstream out(split_dir / "manifest.txt", std::ios::trunc);
  if (!out) {
    throw std::runtime_error("cannot write " +
                             (split_dir / "manifest.txt").string());
  }
  for (const auto& id : ids) out << id << '\n';
}

std::vector<std::string> read_manifest(const fs::path& split_dir) {
  const fs::path path = split_dir / "manifest.txt";
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::vector<std::string> ids;
  std::string line;
  while (std::getline(in, line)) {
    line = strip_cr(line);
    if (!line.empty()) ids.push_back(line);
  }
  return ids;
}

std::vector<DatasetEntry> read_split(const fs::path& root,
                                     const std::string& split) {
  const fs::path dir = root / split;
  std::vector<DatasetEntry> out;
  for (const auto& id : read_manifest(dir)) {
    out.push_back({id, read_sample(dir, id)});
  }
  return out;
}

}  // namespace s3d

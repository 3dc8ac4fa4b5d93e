#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "s3d/scene.hpp"

namespace s3d {

// On-disk layout:
//   <root>/classes.txt            "index<TAB>name" per line, 0 = void
//   <root>/<split>/manifest.txt   one sample id per line
//   <root>/<split>/<id>.rgb.ppm   P6 colour
//   <root>/<split>/<id>.disp.pgm  P5 disparity levels
//   <root>/<split>/<id>.label.pgm P5 class labels

struct DatasetEntry {
  std::string id;
  Sample sample;
};

/// Class names for 1..k (void excluded).
void write_classes(const std::filesystem::path& root,
                   const std::vector<std::string>& names);
std::vector<std::string> read_classes(const std::filesystem::path& root);

void write_sample(const std::filesystem::path& split_dir, const std::string& id,
                  const Sample& sample);
Sample read_sample(const std::filesystem::path& split_dir,
                   const std::string& id);

void write_manifest(const std::filesystem::path& split_dir,
                    const std::vector<std::string>& ids);
std::vector<std::string> read_manifest(const std::filesystem::path& split_dir);

/// Every sample listed in <root>/<split>/manifest.txt.
std::vector<DatasetEntry> read_split(const std::filesystem::path& root,
                                     const std::string& split);

std::string sample_id(std::size_t index);

}  // namespace s3d

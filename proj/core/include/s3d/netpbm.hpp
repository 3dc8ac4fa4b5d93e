#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "s3d/image.hpp"

namespace s3d {

/// Malformed or unsupported netpbm data; `offset` is the byte position where
/// parsing stopped.
class FormatError : public std::runtime_error {
 public:
  FormatError(const std::string& what, std::size_t offset);
  std::size_t offset() const noexcept { return offset_; }
  const std::string& reason() const noexcept { return reason_; }

 private:
  std::string reason_;
  std::size_t offset_;
};

/// Binary P6, maxval 255.
Rgb8Image parse_ppm(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> encode_ppm(const Rgb8Image& image);

/// Binary P5. Reads any maxval in [1, 65535] (two big-endian bytes per sample
/// above 255); always writes maxval 65535.
LabelMap parse_pgm(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> encode_pgm(const LabelMap& image);

Rgb8Image load_ppm(const std::filesystem::path& path);
void save_ppm(const Rgb8Image& image, const std::filesystem::path& path);
LabelMap load_pgm(const std::filesystem::path& path);
void save_pgm(const LabelMap& image, const std::filesystem::path& path);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path,
                std::span<const std::uint8_t> bytes);

}  // namespace s3d

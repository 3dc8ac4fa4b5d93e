#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace s3d {

/// Interleaved H x W x C raster, row-major.
template <typename T>
struct Image {
  std::size_t width = 0;
  std::size_t height = 0;
  std::size_t channels = 1;
  std::vector<T> data;

  Image() = default;
  Image(std::size_t w, std::size_t h, std::size_t c = 1, T fill = T{})
      : width(w), height(h), channels(c), data(w * h * c, fill) {}

  T& operator()(std::size_t v, std::size_t u, std::size_t c = 0) {
    return data[(v * width + u) * channels + c];
  }
  const T& operator()(std::size_t v, std::size_t u, std::size_t c = 0) const {
    return data[(v * width + u) * channels + c];
  }

  std::size_t pixels() const { return width * height; }
  bool same_size(const auto& other) const {
    return width == other.width && height == other.height;
  }

  friend bool operator==(const Image&, const Image&) = default;
};

using LabelMap = Image<std::uint16_t>;
using Rgb8Image = Image<std::uint8_t>;

}  // namespace s3d

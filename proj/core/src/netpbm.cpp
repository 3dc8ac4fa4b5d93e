#include "s3d/netpbm.hpp"

#include <algorithm>
#include <fstream>
#include <iterator>
#include <string>

namespace s3d {

FormatError::FormatError(const std::string& what, std::size_t offset)
    : std::runtime_error(what + " (byte offset " + std::to_string(offset) +
                         ")"),
      reason_(what),
      offset_(offset) {}

namespace {

struct Header {
  std::size_t width = 0;
  std::size_t height = 0;
  std::size_t maxval = 0;
  std::size_t data_offset = 0;
};

bool is_space(std::uint8_t c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' ||
         c == '\f';
}

class HeaderParser {
 public:
  explicit HeaderParser(std::span<const std::uint8_t> b) : b_(b) {}

  void magic(const char* expected) {
    if (b_.size() < 2 || b_[0] != expected[0] || b_[1] != expected[1]) {
      throw FormatError(std::string("missing ") + expected + " magic", 0);
    }
    pos_ = 2;
  }

  std::size_t number(const char* what) {
    skip_space_and_comments();
    const std::size_t start = pos_;
    std::size_t v = 0;
    while (pos_ < b_.size() && b_[pos_] >= '0' && b_[pos_] <= '9') {
      v = v * 10 + (b_[pos_] - '0');
      if (v > 1'000'000'000) {
        throw FormatError(std::string("header ") + what + " too large", start);
      }
      ++pos_;
    }
    if (pos_ == start) {
      throw FormatError(std::string("expected ") + what + " in header", pos_);
    }
    return v;
  }

  // Exactly one whitespace byte separates maxval from the raster.
  std::size_t raster_start() {
    if (pos_ >= b_.size() || !is_space(b_[pos_])) {
      throw FormatError("expected whitespace after maxval", pos_);
    }
    return pos_ + 1;
  }

 private:
  void skip_space_and_comments() {
    while (pos_ < b_.size()) {
      if (is_space(b_[pos_])) {
        ++pos_;
      } else if (b_[pos_] == '#') {
        while (pos_ < b_.size() && b_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  std::span<const std::uint8_t> b_;
  std::size_t pos_ = 0;
};

Header parse_header(std::span<const std::uint8_t> bytes, const char* magic) {
  HeaderParser p(bytes);
  p.magic(magic);
  Header h;
  h.width = p.number("width");
  h.height = p.number("height");
  h.maxval = p.number("maxval");
  h.data_offset = p.raster_start();
  if (h.width == 0 || h.height == 0) {
    throw FormatError("zero image dimension", h.data_offset);
  }
  return h;
}

std::vector<std::uint8_t> header_bytes(const char* magic, std::size_t w,
                                       std::size_t h, std::size_t maxval) {
  const std::string s = std::string(magic) + "\n" + std::to_string(w) + " " +
                        std::to_string(h) + "\n" + std::to_string(maxval) +
                        "\n";
  return {s.begin(), s.end()};
}

void require_payload(std::span<const std::uint8_t> bytes, const Header& h,
                     std::size_t payload) {
  if (bytes.size() - h.data_offset < payload) {
    throw FormatError("truncated raster: need " + std::to_string(payload) +
                          " bytes, have " +
                          std::to_string(bytes.size() - h.data_offset),
                      bytes.size());
  }
}

}  // namespace

Rgb8Image parse_ppm(std::span<const std::uint8_t> bytes) {
  const Header h = parse_header(bytes, "P6");
  if (h.maxval != 255) {
    throw FormatError("unsupported PPM maxval " + std::to_string(h.maxval) +
                          " (only 255)",
                      h.data_offset - 1);
  }
  const std::size_t payload = h.width * h.height * 3;
  require_payload(bytes, h, payload);
  Rgb8Image img(h.width, h.height, 3);
  std::copy_n(bytes.begin() + static_cast<std::ptrdiff_t>(h.data_offset),
              payload, img.data.begin());
  return img;
}

std::vector<std::uint8_t> encode_ppm(const Rgb8Image& image) {
  if (image.channels != 3) {
    throw std::invalid_argument("PPM images need 3 channels");
  }
  auto out = header_bytes("P6", image.width, image.height, 255);
  out.insert(out.end(), image.data.begin(), image.data.end());
  return out;
}

LabelMap parse_pgm(std::span<const std::uint8_t> bytes) {
  const Header h = parse_header(bytes, "P5");
  if (h.maxval == 0 || h.maxval > 65535) {
    throw FormatError("unsupported PGM maxval " + std::to_string(h.maxval),
                      h.data_offset - 1);
  }
  const std::size_t bps = h.maxval > 255 ? 2 : 1;
  const std::size_t payload = h.width * h.height * bps;
  require_payload(bytes, h, payload);
  LabelMap img(h.width, h.height);
  const auto* p = bytes.data() + h.data_offset;
  for (std::size_t i = 0; i < img.data.size(); ++i) {
    const std::size_t v =
        bps == 2 ? (std::size_t{p[2 * i]} << 8) | p[2 * i + 1] : p[i];
    if (v > h.maxval) {
      throw FormatError("sample " + std::to_string(v) + " exceeds maxval",
                        h.data_offset + i * bps);
    }
    img.data[i] = static_cast<std::uint16_t>(v);
  }
  return img;
}

std::vector<std::uint8_t> encode_pgm(const LabelMap& image) {
  if (image.channels != 1) {
    throw std::invalid_argument("PGM images need 1 channel");
  }
  auto out = header_bytes("P5", image.width, image.height, 65535);
  out.reserve(out.size() + image.data.size() * 2);
  for (auto v : image.data) {
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v & 0xff));
  }
  return out;
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path,
                std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() +
                                     " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

Rgb8Image load_ppm(const std::filesystem::path& path) {
  try {
    return parse_ppm(read_file(path));
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.reason(), e.offset());
  }
}

void save_ppm(const Rgb8Image& image, const std::filesystem::path& path) {
  write_file(path, encode_ppm(image));
}

LabelMap load_pgm(const std::filesystem::path& path) {
  try {
    return parse_pgm(read_file(path));
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.reason(), e.offset());
  }
}

void save_pgm(const LabelMap& image, const std::filesystem::path& path) {
  write_file(path, encode_pgm(image));
}

}  // namespace s3d

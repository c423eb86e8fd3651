#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "adaptany/common.hpp"

namespace adaptany {

struct ImageShape {
  int height = 32;
  int width = 32;
  int channels = 3;

  std::size_t size() const {
    return static_cast<std::size_t>(height) * static_cast<std::size_t>(width) *
           static_cast<std::size_t>(channels);
  }
  bool operator==(const ImageShape&) const = default;

  std::string str() const {
    return std::to_string(height) + "x" + std::to_string(width) + "x" + std::to_string(channels);
  }
  json to_json() const { return json::array({height, width, channels}); }
  static ImageShape from_json(const json& j) {
    require(j.is_array() && j.size() == 3, "image_shape must be [height, width, channels]");
    return {j[0].get<int>(), j[1].get<int>(), j[2].get<int>()};
  }
};

// 8-bit interleaved (HWC) image.
struct Image {
  ImageShape shape;
  std::vector<std::uint8_t> pixels;

  Image() = default;
  explicit Image(ImageShape s) : shape(s), pixels(s.size(), 0) {}

  std::uint8_t& at(int y, int x, int c) {
    return pixels[(static_cast<std::size_t>(y) * shape.width + x) * shape.channels + c];
  }
  std::uint8_t at(int y, int x, int c) const {
    return pixels[(static_cast<std::size_t>(y) * shape.width + x) * shape.channels + c];
  }
  bool operator==(const Image&) const = default;
};

// Binary PPM (P6, maxval 255). Lossless, so byte-determinism survives a
// round trip through disk.
inline std::string encode_ppm(const Image& img) {
  require(img.shape.channels == 3, "PPM output needs 3 channels");
  std::string out = "P6\n" + std::to_string(img.shape.width) + " " +
                    std::to_string(img.shape.height) + "\n255\n";
  out.append(reinterpret_cast<const char*>(img.pixels.data()), img.pixels.size());
  return out;
}

namespace detail {

struct PpmHeader {
  int width = 0;
  int height = 0;
  std::size_t data_offset = 0;
};

inline PpmHeader parse_ppm_header(std::string_view bytes, std::size_t start = 0) {
  std::size_t pos = start;
  auto next_token = [&]() -> std::string {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(static_cast<unsigned char>(bytes[pos]))) {
        ++pos;
      } else {
        break;
      }
    }
    const std::size_t b = pos;
    while (pos < bytes.size() && !std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
    return std::string(bytes.substr(b, pos - b));
  };
  if (next_token() != "P6") throw InvalidArgument("not a binary PPM (P6) image");
  PpmHeader h;
  try {
    h.width = std::stoi(next_token());
    h.height = std::stoi(next_token());
    if (std::stoi(next_token()) != 255) throw InvalidArgument("PPM maxval must be 255");
  } catch (const std::logic_error&) {
    throw InvalidArgument("malformed PPM header");
  }
  if (h.width <= 0 || h.height <= 0) throw InvalidArgument("PPM has non-positive size");
  h.data_offset = pos + 1;  // single whitespace after maxval
  return h;
}

}  // namespace detail

inline Image decode_ppm(std::string_view bytes, std::size_t* consumed = nullptr) {
  const auto h = detail::parse_ppm_header(bytes);
  Image img(ImageShape{h.height, h.width, 3});
  if (bytes.size() < h.data_offset + img.pixels.size())
    throw InvalidArgument("truncated PPM pixel data");
  std::copy_n(bytes.data() + h.data_offset, img.pixels.size(),
              reinterpret_cast<char*>(img.pixels.data()));
  if (consumed) *consumed = h.data_offset + img.pixels.size();
  return img;
}

inline void write_ppm(const Image& img, const fs::path& path) { write_file(path, encode_ppm(img)); }

inline Image read_ppm(const fs::path& path) {
  try {
    return decode_ppm(read_file(path));
  } catch (const InvalidArgument& e) {
    throw InvalidArgument(path.string() + ": " + e.what());
  }
}

// Reads only the header; used by manifest validation.
inline ImageShape peek_ppm_shape(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::string head(64, '\0');
  in.read(head.data(), static_cast<std::streamsize>(head.size()));
  head.resize(static_cast<std::size_t>(in.gcount()));
  const auto h = detail::parse_ppm_header(head);
  return {h.height, h.width, 3};
}

// Nearest-neighbour resize; used to bring remote generator output to the
// manifest shape.
inline Image resize_nearest(const Image& src, ImageShape dst_shape) {
  require(src.shape.channels == dst_shape.channels, "resize cannot change channel count");
  if (src.shape == dst_shape) return src;
  Image dst(dst_shape);
  for (int y = 0; y < dst_shape.height; ++y) {
    const int sy = std::min(src.shape.height - 1, y * src.shape.height / dst_shape.height);
    for (int x = 0; x < dst_shape.width; ++x) {
      const int sx = std::min(src.shape.width - 1, x * src.shape.width / dst_shape.width);
      for (int c = 0; c < dst_shape.channels; ++c) dst.at(y, x, c) = src.at(sy, sx, c);
    }
  }
  return dst;
}

}  // namespace adaptany

#pragma once

// Minimal PNG output: 8-bit RGB, one zlib stream, no interlacing.

#include "pidgan/common.hpp"

#include <zlib.h>

#include <array>
#include <fstream>
#include <string>

namespace pidgan::evaluation {

struct Image {
  int width = 0, height = 0;
  std::vector<std::uint8_t> rgb;  // row-major, 3 bytes per pixel

  Image(int w, int h, std::array<std::uint8_t, 3> fill = {255, 255, 255})
      : width(w), height(h), rgb(static_cast<std::size_t>(w) * static_cast<std::size_t>(h) * 3) {
    for (std::size_t i = 0; i < rgb.size(); i += 3) std::copy(fill.begin(), fill.end(), rgb.begin() + static_cast<long>(i));
  }

  void set(int x, int y, std::array<std::uint8_t, 3> c) {
    if (x < 0 || y < 0 || x >= width || y >= height) return;
    const std::size_t o = (static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + static_cast<std::size_t>(x)) * 3;
    rgb[o] = c[0];
    rgb[o + 1] = c[1];
    rgb[o + 2] = c[2];
  }

  void fill_rect(int x0, int y0, int x1, int y1, std::array<std::uint8_t, 3> c) {
    for (int y = y0; y < y1; ++y)
      for (int x = x0; x < x1; ++x) set(x, y, c);
  }
};

namespace detail {

inline void put_u32(std::string& s, std::uint32_t v) {
  for (int sh = 24; sh >= 0; sh -= 8) s.push_back(static_cast<char>((v >> sh) & 0xff));
}

inline void chunk(std::string& out, const char* type, const std::string& data) {
  put_u32(out, static_cast<std::uint32_t>(data.size()));
  std::string body(type, 4);
  body += data;
  out += body;
  put_u32(out, static_cast<std::uint32_t>(
                   ::crc32(0L, reinterpret_cast<const Bytef*>(body.data()), static_cast<uInt>(body.size()))));
}

}  // namespace detail

inline std::string encode_png(const Image& img) {
  std::string raw;
  raw.reserve(static_cast<std::size_t>(img.height) * (static_cast<std::size_t>(img.width) * 3 + 1));
  for (int y = 0; y < img.height; ++y) {
    raw.push_back('\0');  // filter: none
    const auto* row = img.rgb.data() + static_cast<std::size_t>(y) * static_cast<std::size_t>(img.width) * 3;
    raw.append(reinterpret_cast<const char*>(row), static_cast<std::size_t>(img.width) * 3);
  }
  uLongf len = compressBound(static_cast<uLong>(raw.size()));
  std::string z(len, '\0');
  if (compress2(reinterpret_cast<Bytef*>(z.data()), &len, reinterpret_cast<const Bytef*>(raw.data()),
                static_cast<uLong>(raw.size()), 6) != Z_OK)
    throw std::runtime_error("zlib compression failed");
  z.resize(len);

  std::string out("\x89PNG\r\n\x1a\n", 8);
  std::string ihdr;
  detail::put_u32(ihdr, static_cast<std::uint32_t>(img.width));
  detail::put_u32(ihdr, static_cast<std::uint32_t>(img.height));
  ihdr += std::string("\x08\x02\x00\x00\x00", 5);  // 8-bit RGB
  detail::chunk(out, "IHDR", ihdr);
  detail::chunk(out, "IDAT", z);
  detail::chunk(out, "IEND", "");
  return out;
}

inline void write_png(const std::string& path, const Image& img) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ValidationError("cannot open '" + path + "' for writing");
  const std::string bytes = encode_png(img);
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

/// Perceptually ordered dark-blue to yellow ramp, t in [0, 1].
inline std::array<std::uint8_t, 3> colormap(double t) {
  static const double stops[5][3] = {{68, 1, 84}, {59, 82, 139}, {33, 145, 140}, {94, 201, 98}, {253, 231, 37}};
  if (!std::isfinite(t)) return {255, 0, 255};
  t = std::clamp(t, 0.0, 1.0) * 4.0;
  const int i = std::min(static_cast<int>(t), 3);
  const double f = t - i;
  std::array<std::uint8_t, 3> c{};
  for (int k = 0; k < 3; ++k) c[static_cast<std::size_t>(k)] = static_cast<std::uint8_t>(std::lround(stops[i][k] + f * (stops[i + 1][k] - stops[i][k])));
  return c;
}

/// Field rendered top-to-bottom with rows flipped so row 0 is at the bottom.
inline Image heatmap(const Matrix& field, int scale = 2) {
  const double lo = field.minCoeff(), hi = field.maxCoeff();
  const double span = hi > lo ? hi - lo : 1.0;
  Image img(static_cast<int>(field.cols()) * scale, static_cast<int>(field.rows()) * scale);
  for (Eigen::Index i = 0; i < field.rows(); ++i)
    for (Eigen::Index j = 0; j < field.cols(); ++j) {
      const auto c = colormap((field(i, j) - lo) / span);
      const int y0 = static_cast<int>(field.rows() - 1 - i) * scale, x0 = static_cast<int>(j) * scale;
      img.fill_rect(x0, y0, x0 + scale, y0 + scale, c);
    }
  return img;
}

/// Overlaid bar histograms, one colour per series, normalized to the tallest bin.
inline Image histogram_plot(const std::vector<std::vector<int>>& series, int width = 480, int height = 240) {
  static const std::array<std::uint8_t, 3> colours[] = {{31, 119, 180}, {255, 127, 14}, {44, 160, 44}, {214, 39, 40}};
  Image img(width, height);
  int top = 1;
  std::size_t bins = 0;
  for (const auto& s : series) {
    bins = std::max(bins, s.size());
    for (int c : s) top = std::max(top, c);
  }
  if (bins == 0) return img;
  const int margin = 10, plot_h = height - 2 * margin;
  const double bw = static_cast<double>(width - 2 * margin) / static_cast<double>(bins);
  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& col = colours[k % 4];
    const double sub = bw / static_cast<double>(series.size());
    for (std::size_t b = 0; b < series[k].size(); ++b) {
      const int h = static_cast<int>(std::lround(plot_h * static_cast<double>(series[k][b]) / top));
      const int x0 = margin + static_cast<int>(b * bw + k * sub);
      img.fill_rect(x0, height - margin - h, x0 + std::max(1, static_cast<int>(sub) - 1), height - margin, col);
    }
  }
  img.fill_rect(margin, height - margin, width - margin, height - margin + 1, {0, 0, 0});
  return img;
}

}  // namespace pidgan::evaluation

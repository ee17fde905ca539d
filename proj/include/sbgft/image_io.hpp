#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace sbgft {

/// 8-bit grayscale image, samples row-major.
struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;

  GrayImage() = default;
  GrayImage(int w, int h, std::uint8_t fill = 0)
      : width(w), height(h), pixels(static_cast<std::size_t>(w) * h, fill) {}
  std::uint8_t at(int row, int col) const { return pixels[static_cast<std::size_t>(row) * width + col]; }
  std::uint8_t& at(int row, int col) { return pixels[static_cast<std::size_t>(row) * width + col]; }
  bool operator==(const GrayImage&) const = default;

  /// size x size block at (row, col) as doubles, matrix rows = image rows.
  Eigen::MatrixXd block(int row, int col, int size) const;
};

/// Binary P5 with maxval 255; '#' comments are skipped in the header.
GrayImage read_pgm(const std::string& path);
GrayImage parse_pgm(const std::vector<std::uint8_t>& bytes);
void write_pgm(const GrayImage& img, const std::string& path);
std::vector<std::uint8_t> encode_pgm(const GrayImage& img);

/// Top-left crop to the largest multiple of `unit` on both sides. Throws
/// std::invalid_argument when a side would become zero.
GrayImage crop_to_multiple(const GrayImage& img, int unit = 64);

}  // namespace sbgft

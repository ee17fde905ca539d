#include "sbgft/image_io.hpp"

#include <cctype>
#include <stdexcept>

#include "sbgft/binio.hpp"

namespace sbgft {

Eigen::MatrixXd GrayImage::block(int row, int col, int size) const {
  if (row < 0 || col < 0 || row + size > height || col + size > width)
    throw std::out_of_range("image block outside the image");
  Eigen::MatrixXd b(size, size);
  for (int c = 0; c < size; ++c)
    for (int r = 0; r < size; ++r) b(r, c) = at(row + r, col + c);
  return b;
}

namespace {

class HeaderReader {
 public:
  explicit HeaderReader(const std::vector<std::uint8_t>& b) : b_(b) {}

  long number() {
    skip_space();
    if (pos_ >= b_.size() || !std::isdigit(b_[pos_]))
      throw FormatError(FormatError::Kind::Invalid, "PGM header: expected a number");
    long v = 0;
    while (pos_ < b_.size() && std::isdigit(b_[pos_])) {
      v = v * 10 + (b_[pos_++] - '0');
      if (v > 1000000) throw FormatError(FormatError::Kind::Invalid, "PGM header: number too large");
    }
    return v;
  }
  std::size_t pos() const { return pos_; }
  void set_pos(std::size_t p) { pos_ = p; }

 private:
  void skip_space() {
    while (pos_ < b_.size()) {
      if (b_[pos_] == '#') {
        while (pos_ < b_.size() && b_[pos_] != '\n') ++pos_;
      } else if (std::isspace(b_[pos_])) {
        ++pos_;
      } else {
        break;
      }
    }
    if (pos_ >= b_.size()) throw FormatError(FormatError::Kind::Truncated, "PGM header truncated");
  }
  const std::vector<std::uint8_t>& b_;
  std::size_t pos_ = 0;
};

}  // namespace

GrayImage parse_pgm(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '5')
    throw FormatError(FormatError::Kind::Magic, "not a binary PGM (P5)");
  HeaderReader h(bytes);
  h.set_pos(2);
  const long w = h.number(), ht = h.number(), maxval = h.number();
  if (maxval != 255) throw FormatError(FormatError::Kind::Invalid, "PGM maxval must be 255");
  if (w <= 0 || ht <= 0) throw FormatError(FormatError::Kind::Invalid, "PGM has empty dimensions");
  std::size_t p = h.pos();
  if (p >= bytes.size() || !std::isspace(bytes[p]))
    throw FormatError(FormatError::Kind::Truncated, "PGM header truncated");
  ++p;
  const std::size_t need = static_cast<std::size_t>(w) * static_cast<std::size_t>(ht);
  if (bytes.size() - p < need) throw FormatError(FormatError::Kind::Truncated, "PGM pixel data truncated");
  GrayImage img(static_cast<int>(w), static_cast<int>(ht));
  std::copy(bytes.begin() + static_cast<std::ptrdiff_t>(p),
            bytes.begin() + static_cast<std::ptrdiff_t>(p + need), img.pixels.begin());
  return img;
}

GrayImage read_pgm(const std::string& path) { return parse_pgm(read_file_bytes(path)); }

std::vector<std::uint8_t> encode_pgm(const GrayImage& img) {
  const std::string head =
      "P5\n" + std::to_string(img.width) + " " + std::to_string(img.height) + "\n255\n";
  std::vector<std::uint8_t> out(head.begin(), head.end());
  out.insert(out.end(), img.pixels.begin(), img.pixels.end());
  return out;
}

void write_pgm(const GrayImage& img, const std::string& path) {
  write_file_bytes(path, encode_pgm(img));
}

GrayImage crop_to_multiple(const GrayImage& img, int unit) {
  const int w = img.width / unit * unit, h = img.height / unit * unit;
  if (w == 0 || h == 0) throw std::invalid_argument("image smaller than one macroblock");
  if (w == img.width && h == img.height) return img;
  GrayImage out(w, h);
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c) out.at(r, c) = img.at(r, c);
  return out;
}

}  // namespace sbgft

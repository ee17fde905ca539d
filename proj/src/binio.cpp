#include "sbgft/binio.hpp"

#include <algorithm>
#include <fstream>
#include <iterator>

#include <zlib.h>

namespace sbgft {

std::uint32_t crc32_of(const void* data, std::size_t len, std::uint32_t seed) {
  uLong c = seed;
  const auto* p = static_cast<const Bytef*>(data);
  while (len > 0) {
    const uInt chunk = static_cast<uInt>(std::min<std::size_t>(len, 1u << 30));
    c = crc32(c, p, chunk);
    p += chunk;
    len -= chunk;
  }
  return static_cast<std::uint32_t>(c);
}

std::vector<std::uint8_t> read_file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file_bytes(const std::string& path, const std::vector<std::uint8_t>& data) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path);
  out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
  if (!out) throw std::runtime_error("write failed for " + path);
}

}  // namespace sbgft

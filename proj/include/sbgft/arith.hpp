#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace sbgft {

/// Binary-output integer arithmetic coder (32-bit registers, 64-bit
/// products). Frequency totals must stay below 2^24.
class ArithmeticEncoder {
 public:
  void encode(std::uint32_t cum_lo, std::uint32_t cum_hi, std::uint32_t total);
  /// nbits equiprobable bits, most significant first.
  void encode_bits(std::uint32_t value, int nbits);
  /// Flushes and returns the byte stream; the encoder is left empty.
  std::vector<std::uint8_t> finish();
  std::size_t bits() const { return bits_.size(); }

 private:
  void emit(int bit);
  std::uint64_t low_ = 0, high_ = 0xFFFFFFFFull;
  std::uint64_t pending_ = 0;
  std::vector<std::uint8_t> bits_;
};

class ArithmeticDecoder {
 public:
  ArithmeticDecoder(const std::uint8_t* data, std::size_t size);
  explicit ArithmeticDecoder(const std::vector<std::uint8_t>& v)
      : ArithmeticDecoder(v.data(), v.size()) {}
  /// Cumulative frequency target in [0, total).
  std::uint32_t target(std::uint32_t total) const;
  void consume(std::uint32_t cum_lo, std::uint32_t cum_hi, std::uint32_t total);
  std::uint32_t decode_bits(int nbits);

 private:
  int next_bit();
  const std::uint8_t* data_;
  std::size_t size_;
  std::size_t bitpos_ = 0;
  std::uint64_t low_ = 0, high_ = 0xFFFFFFFFull, value_ = 0;
};

/// Adaptive binary probability with Krichevsky-Trofimov half-unit counts.
class BinaryContext {
 public:
  void encode(ArithmeticEncoder& enc, int bit);
  int decode(ArithmeticDecoder& dec);

 private:
  void update(int bit);
  std::uint32_t c0_ = 1, c1_ = 1;
};

/// Adaptive model for quantization indices. Each value is binarized into a
/// zero flag, a sign and a short unary magnitude with one context per bin;
/// larger magnitudes continue as an order-0 Exp-Golomb code whose prefix
/// bins are adaptive (the last prefix context is shared) and whose suffix
/// bits are equiprobable.
class CoefficientModel {
 public:
  static constexpr int kUnaryMax = 4;
  static constexpr int kPrefixContexts = 16;
  void encode(ArithmeticEncoder& enc, int v);
  int decode(ArithmeticDecoder& dec);

 private:
  BinaryContext zero_, sign_;
  BinaryContext mag_[kUnaryMax];
  BinaryContext prefix_[kPrefixContexts];
};

void write_gamma(ArithmeticEncoder& enc, std::uint64_t v);  // v >= 1
std::uint64_t read_gamma(ArithmeticDecoder& dec);
inline std::uint64_t zigzag(int v) {
  return v >= 0 ? 2ull * static_cast<std::uint64_t>(v)
                : 2ull * static_cast<std::uint64_t>(-static_cast<std::int64_t>(v)) - 1;
}
inline int unzigzag(std::uint64_t z) {
  return (z & 1) ? -static_cast<int>((z + 1) / 2) : static_cast<int>(z / 2);
}

/// One CoefficientModel over the whole sequence.
std::vector<std::uint8_t> arithmetic_encode(std::span<const int> symbols);
std::vector<int> arithmetic_decode(const std::vector<std::uint8_t>& bytes, std::size_t count);

}  // namespace sbgft

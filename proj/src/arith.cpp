#include "sbgft/arith.hpp"

#include <algorithm>

#include "sbgft/binio.hpp"

namespace sbgft {

namespace {

constexpr std::uint64_t kTop = 0xFFFFFFFFull;
constexpr std::uint64_t kHalf = 0x80000000ull;
constexpr std::uint64_t kQuarter = 0x40000000ull;
constexpr std::uint32_t kMaxBinaryTotal = 1u << 16;
constexpr int kMaxGammaZeros = 40;
constexpr std::size_t kMaxOverrun = 64;

void check_freqs(std::uint32_t lo, std::uint32_t hi, std::uint32_t total) {
  if (!(lo < hi && hi <= total && total <= (1u << 24)))
    throw std::invalid_argument("arithmetic coder: bad frequency triple");
}

}  // namespace

void ArithmeticEncoder::emit(int bit) {
  bits_.push_back(static_cast<std::uint8_t>(bit));
  for (; pending_ > 0; --pending_) bits_.push_back(static_cast<std::uint8_t>(!bit));
}

void ArithmeticEncoder::encode(std::uint32_t lo, std::uint32_t hi, std::uint32_t total) {
  check_freqs(lo, hi, total);
  const std::uint64_t range = high_ - low_ + 1;
  high_ = low_ + range * hi / total - 1;
  low_ = low_ + range * lo / total;
  for (;;) {
    if (high_ < kHalf) {
      emit(0);
    } else if (low_ >= kHalf) {
      emit(1);
      low_ -= kHalf;
      high_ -= kHalf;
    } else if (low_ >= kQuarter && high_ < kHalf + kQuarter) {
      ++pending_;
      low_ -= kQuarter;
      high_ -= kQuarter;
    } else {
      break;
    }
    low_ = 2 * low_;
    high_ = 2 * high_ + 1;
  }
}

void ArithmeticEncoder::encode_bits(std::uint32_t value, int nbits) {
  for (int i = nbits - 1; i >= 0; --i) {
    const std::uint32_t b = (value >> i) & 1u;
    encode(b, b + 1, 2);
  }
}

std::vector<std::uint8_t> ArithmeticEncoder::finish() {
  ++pending_;
  emit(low_ < kQuarter ? 0 : 1);
  std::vector<std::uint8_t> out((bits_.size() + 7) / 8, 0);
  for (std::size_t i = 0; i < bits_.size(); ++i)
    if (bits_[i]) out[i / 8] |= static_cast<std::uint8_t>(0x80u >> (i % 8));
  bits_.clear();
  low_ = 0;
  high_ = kTop;
  pending_ = 0;
  return out;
}

ArithmeticDecoder::ArithmeticDecoder(const std::uint8_t* data, std::size_t size)
    : data_(data), size_(size) {
  for (int i = 0; i < 32; ++i) value_ = (value_ << 1) | static_cast<std::uint64_t>(next_bit());
}

int ArithmeticDecoder::next_bit() {
  const std::size_t p = bitpos_++;
  if (p / 8 >= size_) {
    if (p - size_ * 8 > kMaxOverrun)
      throw FormatError(FormatError::Kind::Truncated, "arithmetic stream overrun (corrupt stream)");
    return 0;
  }
  return (data_[p / 8] >> (7 - p % 8)) & 1;
}

std::uint32_t ArithmeticDecoder::target(std::uint32_t total) const {
  const std::uint64_t range = high_ - low_ + 1;
  const std::uint64_t t = ((value_ - low_ + 1) * total - 1) / range;
  if (t >= total) throw FormatError(FormatError::Kind::Invalid, "corrupt arithmetic stream");
  return static_cast<std::uint32_t>(t);
}

void ArithmeticDecoder::consume(std::uint32_t lo, std::uint32_t hi, std::uint32_t total) {
  check_freqs(lo, hi, total);
  const std::uint64_t range = high_ - low_ + 1;
  high_ = low_ + range * hi / total - 1;
  low_ = low_ + range * lo / total;
  for (;;) {
    if (high_ < kHalf) {
    } else if (low_ >= kHalf) {
      low_ -= kHalf;
      high_ -= kHalf;
      value_ -= kHalf;
    } else if (low_ >= kQuarter && high_ < kHalf + kQuarter) {
      low_ -= kQuarter;
      high_ -= kQuarter;
      value_ -= kQuarter;
    } else {
      break;
    }
    low_ = 2 * low_;
    high_ = 2 * high_ + 1;
    value_ = 2 * value_ + static_cast<std::uint64_t>(next_bit());
  }
}

std::uint32_t ArithmeticDecoder::decode_bits(int nbits) {
  std::uint32_t v = 0;
  for (int i = 0; i < nbits; ++i) {
    const std::uint32_t b = target(2);
    consume(b, b + 1, 2);
    v = (v << 1) | b;
  }
  return v;
}

void write_gamma(ArithmeticEncoder& enc, std::uint64_t v) {
  if (v == 0) throw std::invalid_argument("gamma code needs v >= 1");
  int len = 0;
  while ((v >> len) > 1) ++len;
  for (int i = 0; i < len; ++i) enc.encode_bits(0, 1);
  for (int i = len; i >= 0; --i) enc.encode_bits(static_cast<std::uint32_t>((v >> i) & 1), 1);
}

std::uint64_t read_gamma(ArithmeticDecoder& dec) {
  int zeros = 0;
  while (dec.decode_bits(1) == 0)
    if (++zeros > kMaxGammaZeros)
      throw FormatError(FormatError::Kind::Invalid, "corrupt gamma code");
  std::uint64_t v = 1;
  for (int i = 0; i < zeros; ++i) v = (v << 1) | dec.decode_bits(1);
  return v;
}

void BinaryContext::update(int bit) {
  (bit ? c1_ : c0_) += 2;
  if (c0_ + c1_ > kMaxBinaryTotal) {
    c0_ = std::max<std::uint32_t>(1, c0_ / 2);
    c1_ = std::max<std::uint32_t>(1, c1_ / 2);
  }
}

void BinaryContext::encode(ArithmeticEncoder& enc, int bit) {
  if (bit)
    enc.encode(c0_, c0_ + c1_, c0_ + c1_);
  else
    enc.encode(0, c0_, c0_ + c1_);
  update(bit);
}

int BinaryContext::decode(ArithmeticDecoder& dec) {
  const int bit = dec.target(c0_ + c1_) >= c0_ ? 1 : 0;
  if (bit)
    dec.consume(c0_, c0_ + c1_, c0_ + c1_);
  else
    dec.consume(0, c0_, c0_ + c1_);
  update(bit);
  return bit;
}

void CoefficientModel::encode(ArithmeticEncoder& enc, int v) {
  zero_.encode(enc, v != 0);
  if (v == 0) return;
  sign_.encode(enc, v < 0);
  const std::uint64_t m = v < 0 ? -static_cast<std::int64_t>(v) : v;
  for (int k = 1; k <= kUnaryMax; ++k) {
    const int more = m > static_cast<std::uint64_t>(k);
    mag_[k - 1].encode(enc, more);
    if (!more) return;
  }
  const std::uint64_t x = m - kUnaryMax;  // >= 1
  int len = 0;
  while ((x >> len) > 1) ++len;
  for (int i = 0; i < len; ++i) prefix_[std::min(i, kPrefixContexts - 1)].encode(enc, 1);
  prefix_[std::min(len, kPrefixContexts - 1)].encode(enc, 0);
  for (int i = len - 1; i >= 0; --i) enc.encode_bits(static_cast<std::uint32_t>((x >> i) & 1), 1);
}

int CoefficientModel::decode(ArithmeticDecoder& dec) {
  if (!zero_.decode(dec)) return 0;
  const bool neg = sign_.decode(dec);
  std::uint64_t m = 1;
  for (int k = 1; k <= kUnaryMax; ++k) {
    if (!mag_[k - 1].decode(dec)) break;
    m = k + 1;
  }
  if (m > static_cast<std::uint64_t>(kUnaryMax)) {
    int len = 0;
    while (prefix_[std::min(len, kPrefixContexts - 1)].decode(dec))
      if (++len > kMaxGammaZeros) throw FormatError(FormatError::Kind::Invalid, "corrupt coefficient prefix");
    std::uint64_t x = 1;
    for (int i = 0; i < len; ++i) x = (x << 1) | dec.decode_bits(1);
    m = kUnaryMax + x;
  }
  if (m > 0x7FFFFFFFull) throw FormatError(FormatError::Kind::Invalid, "corrupt coefficient magnitude");
  return neg ? -static_cast<int>(m) : static_cast<int>(m);
}

std::vector<std::uint8_t> arithmetic_encode(std::span<const int> symbols) {
  ArithmeticEncoder enc;
  CoefficientModel model;
  for (int v : symbols) model.encode(enc, v);
  return enc.finish();
}

std::vector<int> arithmetic_decode(const std::vector<std::uint8_t>& bytes, std::size_t count) {
  ArithmeticDecoder dec(bytes);
  CoefficientModel model;
  std::vector<int> out(count);
  for (auto& v : out) v = model.decode(dec);
  return out;
}

}  // namespace sbgft

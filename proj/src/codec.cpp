#include "sbgft/codec.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "sbgft/binio.hpp"
#include "sbgft/parallel.hpp"

namespace sbgft {

const TransformBank& CodingSetup::bank(int n) const {
  const auto it = banks->find(n);
  if (it == banks->end()) throw std::invalid_argument("no bank for block size " + std::to_string(n));
  return it->second;
}

std::vector<int> CodingSetup::candidates(int n, int pm) const {
  const TransformBank& b = bank(n);
  const int l = static_cast<int>(b.size());
  if (config == Config::F_C && l > subset_size) {
    auto c = subsets->ordinals(qp, pm, n);
    if (static_cast<int>(c.size()) > subset_size) c.resize(static_cast<std::size_t>(subset_size));
    for (int o : c)
      if (o < 0 || o >= l) throw std::out_of_range("subset ordinal outside the bank");
    return c;
  }
  std::vector<int> all(static_cast<std::size_t>(l));
  std::iota(all.begin(), all.end(), 0);
  return all;
}

int CodingSetup::index_bits(int n, int pm) const {
  if (config == Config::F_C && full_width_index) return sbgft::index_bits(bank(n).size());
  return sbgft::index_bits(candidates(n, pm).size());
}

RdotOptions CodingSetup::rdot(int n, int pm) const {
  RdotOptions o = rdot_options(qp);
  o.side_bits = index_bits(n, pm);
  o.include_side_bits = index_side_bits;
  return o;
}

void CodingSetup::validate() const {
  QuantizerSpec::from_qp(qp);
  if (!banks) throw std::invalid_argument("coding setup without banks");
  for (int n = kMinBlockSize; n <= kMacroblockSize; n *= 2) bank(n);
  if (config == Config::F_C && (!subsets || subset_size < 1))
    throw std::invalid_argument("configuration F_C needs a subset table and a subset size");
}

std::vector<CodedBlock> select_transforms(const std::vector<const Eigen::MatrixXd*>& signals,
                                          const std::vector<int>& pms, const CodingSetup& setup,
                                          int threads) {
  if (signals.size() != pms.size()) throw std::invalid_argument("select_transforms: size mismatch");
  constexpr std::size_t kChunk = 64;
  struct Chunk {
    int n;
    std::vector<int> cand;
    std::vector<std::size_t> items;
  };
  std::map<std::pair<int, std::vector<int>>, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < signals.size(); ++i) {
    const int n = static_cast<int>(signals[i]->rows());
    groups[{n, setup.candidates(n, pms[i])}].push_back(i);
  }
  std::vector<Chunk> chunks;
  for (const auto& [key, items] : groups)
    for (std::size_t s = 0; s < items.size(); s += kChunk)
      chunks.push_back({key.first, key.second,
                        {items.begin() + static_cast<std::ptrdiff_t>(s),
                         items.begin() + static_cast<std::ptrdiff_t>(std::min(items.size(), s + kChunk))}});
  std::vector<CodedBlock> out(signals.size());
  parallel_for(chunks.size(), threads, [&](std::size_t c) {
    const Chunk& ch = chunks[c];
    Eigen::MatrixXd F(ch.n * ch.n, static_cast<Eigen::Index>(ch.items.size()));
    for (std::size_t b = 0; b < ch.items.size(); ++b)
      F.col(static_cast<Eigen::Index>(b)) =
          Eigen::Map<const Eigen::VectorXd>(signals[ch.items[b]]->data(), ch.n * ch.n);
    const RdotOptions o = setup.rdot(ch.n, pms[ch.items[0]]);
    auto coded = rdot_select_batch(F, setup.bank(ch.n), ch.cand, o);
    for (std::size_t b = 0; b < ch.items.size(); ++b) out[ch.items[b]] = std::move(coded[b]);
  });
  return out;
}

void reconstruct_leaf(const LeafCode& lc, const CodingSetup& setup, GrayImage& out) {
  const Eigen::MatrixXd res = decode_block(lc.coded, setup.bank(lc.leaf.size), setup.qp);
  const int n = lc.leaf.size;
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) {
      const double v = res(r, c) + (lc.prediction.size() ? lc.prediction(r, c) : 0.0);
      out.at(lc.leaf.row + r, lc.leaf.col + c) = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
    }
}

// ---------------------------------------------------------------------------
// Payload syntax

void PayloadWriter::macroblock(const MacroblockCode& mb) {
  for (bool f : mb.tree.split_flags()) enc_.encode_bits(f, 1);
  for (const auto& lc : mb.leaves) {
    const int n = lc.leaf.size;
    if (setup_.residual()) enc_.encode_bits(static_cast<std::uint32_t>(lc.pm), kModeBits);
    const int bits = setup_.index_bits(n, lc.pm);
    int symbol = lc.coded.transform;
    if (!(setup_.config == Config::F_C && setup_.full_width_index)) {
      const auto cand = setup_.candidates(n, lc.pm);
      const auto it = std::find(cand.begin(), cand.end(), lc.coded.transform);
      if (it == cand.end()) throw std::invalid_argument("leaf transform outside its candidate set");
      symbol = static_cast<int>(it - cand.begin());
    }
    enc_.encode_bits(static_cast<std::uint32_t>(symbol), bits);
    auto& model = models_[n];
    for (int v : lc.coded.indices) model.encode(enc_, v);
  }
}

MacroblockCode PayloadReader::macroblock(int row, int col) {
  MacroblockCode mb;
  // Flags are read lazily in depth-first order, as they were written.
  std::vector<bool> flags;
  {
    QuadTree t(row, col, kMacroblockSize);
    std::vector<int> stack{0};
    while (!stack.empty()) {
      const int id = stack.back();
      stack.pop_back();
      if (t.nodes()[static_cast<std::size_t>(id)].size <= kMinBlockSize) continue;
      const bool f = dec_.decode_bits(1);
      flags.push_back(f);
      if (!f) continue;
      const int first = t.split(id);
      for (int k = 3; k >= 0; --k) stack.push_back(first + k);
    }
    std::size_t pos = 0;
    mb.tree = QuadTree::from_flags(row, col, kMacroblockSize, flags, pos);
  }
  for (const Leaf& l : mb.tree.leaves()) {
    LeafCode lc;
    lc.leaf = l;
    if (setup_.residual()) {
      lc.pm = static_cast<int>(dec_.decode_bits(kModeBits));
      if (lc.pm >= kPredictionModes) throw FormatError(FormatError::Kind::Invalid, "corrupt prediction mode");
    }
    const int bits = setup_.index_bits(l.size, lc.pm);
    const int symbol = static_cast<int>(dec_.decode_bits(bits));
    if (setup_.config == Config::F_C && setup_.full_width_index) {
      lc.coded.transform = symbol;
    } else {
      const auto cand = setup_.candidates(l.size, lc.pm);
      if (symbol >= static_cast<int>(cand.size()))
        throw FormatError(FormatError::Kind::Invalid, "corrupt transform index");
      lc.coded.transform = cand[static_cast<std::size_t>(symbol)];
    }
    if (lc.coded.transform >= static_cast<int>(setup_.bank(l.size).size()))
      throw FormatError(FormatError::Kind::Invalid, "corrupt transform index");
    lc.coded.n = l.size;
    lc.coded.indices.resize(static_cast<std::size_t>(l.size) * l.size);
    auto& model = models_[l.size];
    for (auto& v : lc.coded.indices) v = model.decode(dec_);
    mb.leaves.push_back(std::move(lc));
  }
  return mb;
}

// ---------------------------------------------------------------------------
// Image streams

namespace {

constexpr char kStreamMagic[4] = {'S', 'B', 'G', 'C'};
constexpr std::uint16_t kStreamVersion = 1;

double leaf_bits(const LeafCode& lc, bool residual) {
  return lc.coded.rate_bits + (residual ? kModeBits : 0);
}

}  // namespace

std::uint32_t subset_table_hash(const SubsetTable& t) {
  const std::string s = subset_table_csv(t);
  return crc32_of(s.data(), s.size());
}

EncodedImage encode_image(const GrayImage& img, const CodingSetup& setup, int threads) {
  setup.validate();
  if (img.width % kMacroblockSize || img.height % kMacroblockSize || img.width == 0 || img.height == 0)
    throw std::invalid_argument("image dimensions must be nonzero multiples of 64");
  if (img.width > 65535 || img.height > 65535) throw std::invalid_argument("image too large for the stream");
  const SignalDomain domain = setup.residual() ? SignalDomain::Residual : SignalDomain::Pixel;
  const BankSet driver = driver_banks(domain);
  std::vector<std::pair<int, int>> mbs;
  for (int r = 0; r < img.height; r += kMacroblockSize)
    for (int c = 0; c < img.width; c += kMacroblockSize) mbs.push_back({r, c});
  std::vector<MacroblockPartition> parts(mbs.size());
  parallel_for(mbs.size(), threads, [&](std::size_t i) {
    parts[i] = partition_macroblock(img, mbs[i].first, mbs[i].second, setup.qp, domain, driver);
  });

  EncodedImage out;
  out.reconstruction = GrayImage(img.width, img.height, 128);
  out.macroblocks.resize(mbs.size());
  if (!setup.residual()) {
    std::vector<const Eigen::MatrixXd*> sig;
    std::vector<int> pms;
    for (const auto& p : parts)
      for (const auto& l : p.leaves) {
        sig.push_back(&l.signal);
        pms.push_back(-1);
      }
    auto coded = select_transforms(sig, pms, setup, threads);
    std::size_t k = 0;
    for (std::size_t i = 0; i < mbs.size(); ++i) {
      out.macroblocks[i].tree = parts[i].tree;
      for (const auto& l : parts[i].leaves) {
        LeafCode lc{l.leaf, -1, Eigen::MatrixXd(), std::move(coded[k++])};
        out.macroblocks[i].leaves.push_back(std::move(lc));
      }
    }
    parallel_for(mbs.size(), threads, [&](std::size_t i) {
      for (const auto& lc : out.macroblocks[i].leaves) reconstruct_leaf(lc, setup, out.reconstruction);
    });
  } else {
    // Closed loop: references come from what the decoder will have.
    for (std::size_t i = 0; i < mbs.size(); ++i) {
      out.macroblocks[i].tree = parts[i].tree;
      for (const auto& l : parts[i].leaves) {
        const Leaf& g = l.leaf;
        LeafCode lc;
        lc.leaf = g;
        const Eigen::MatrixXd orig = img.block(g.row, g.col, g.size);
        lc.pm = best_prediction_mode(orig, gather_references(out.reconstruction, g.row, g.col, g.size),
                                     &lc.prediction);
        const Eigen::MatrixXd res = orig - lc.prediction;
        lc.coded = rdot_select_among(res, setup.bank(g.size), setup.candidates(g.size, lc.pm),
                                     setup.rdot(g.size, lc.pm));
        reconstruct_leaf(lc, setup, out.reconstruction);
        out.macroblocks[i].leaves.push_back(std::move(lc));
      }
    }
  }

  PayloadWriter pw(setup);
  for (const auto& mb : out.macroblocks) {
    pw.macroblock(mb);
    out.estimated_bits += mb.tree.split_flag_bits();
    for (const auto& lc : mb.leaves) out.estimated_bits += leaf_bits(lc, setup.residual());
  }
  out.payload_bits = pw.bits();
  const auto payload = pw.finish();

  ByteWriter w;
  w.bytes(kStreamMagic, 4);
  w.u16(kStreamVersion);
  w.u16(static_cast<std::uint16_t>(img.width));
  w.u16(static_cast<std::uint16_t>(img.height));
  w.u8(static_cast<std::uint8_t>(setup.qp));
  w.u8(static_cast<std::uint8_t>(setup.config));
  w.u8(static_cast<std::uint8_t>(setup.config == Config::F_C ? setup.subset_size : 0));
  w.u8(setup.config == Config::F_C && setup.full_width_index ? 1 : 0);
  for (int n = kMinBlockSize; n <= kMacroblockSize; n *= 2) {
    w.u16(static_cast<std::uint16_t>(n));
    w.u16(static_cast<std::uint16_t>(setup.bank(n).size()));
    w.u32(bank_hash(setup.bank(n)));
  }
  w.u32(setup.config == Config::F_C ? subset_table_hash(*setup.subsets) : 0);
  w.u32(static_cast<std::uint32_t>(payload.size()));
  w.bytes(payload.data(), payload.size());
  w.u32(crc32_of(w.data().data(), w.data().size()));
  out.stream = std::move(w.data());

  double sse = 0;
  for (std::size_t i = 0; i < img.pixels.size(); ++i) {
    const double d = static_cast<double>(img.pixels[i]) - out.reconstruction.pixels[i];
    sse += d * d;
  }
  const double mse = sse / static_cast<double>(img.pixels.size());
  out.psnr = mse == 0 ? std::numeric_limits<double>::infinity() : 10 * std::log10(255.0 * 255.0 / mse);
  return out;
}

namespace {

StreamHeader parse_header(ByteReader& rd) {
  char magic[4];
  rd.bytes(magic, 4);
  if (std::memcmp(magic, kStreamMagic, 4) != 0) throw FormatError(FormatError::Kind::Magic, "not an SBGC stream");
  if (rd.u16() != kStreamVersion) throw FormatError(FormatError::Kind::Version, "unsupported SBGC version");
  StreamHeader h;
  h.width = rd.u16();
  h.height = rd.u16();
  h.qp = rd.u8();
  const int cfg = rd.u8();
  if (cfg > static_cast<int>(Config::F_C)) throw FormatError(FormatError::Kind::Invalid, "unknown configuration");
  h.config = static_cast<Config>(cfg);
  h.subset_size = rd.u8();
  h.full_width_index = rd.u8() & 1;
  for (int n = kMinBlockSize; n <= kMacroblockSize; n *= 2) {
    const int sz = rd.u16();
    const int count = rd.u16();
    const std::uint32_t hash = rd.u32();
    if (sz != n) throw FormatError(FormatError::Kind::Invalid, "bad bank table in stream header");
    h.banks[n] = {count, hash};
  }
  h.subset_hash = rd.u32();
  if (h.qp > 51 || h.width == 0 || h.height == 0 || h.width % kMacroblockSize || h.height % kMacroblockSize)
    throw FormatError(FormatError::Kind::Invalid, "bad SBGC header fields");
  return h;
}

}  // namespace

StreamHeader read_stream_header(const std::vector<std::uint8_t>& stream) {
  ByteReader rd(stream);
  return parse_header(rd);
}

GrayImage decode_image(const std::vector<std::uint8_t>& stream, const BankSet& banks,
                       const SubsetTable* subsets) {
  if (stream.size() < 4) throw FormatError(FormatError::Kind::Truncated, "stream too short");
  ByteReader rd(stream.data(), stream.size() - 4);
  const StreamHeader h = parse_header(rd);
  const std::uint32_t len = rd.u32();
  if (rd.remaining() != len) throw FormatError(FormatError::Kind::Truncated, "SBGC payload length mismatch");
  ByteReader tail(stream.data() + stream.size() - 4, 4);
  if (tail.u32() != crc32_of(stream.data(), stream.size() - 4))
    throw FormatError(FormatError::Kind::Checksum, "SBGC checksum mismatch");
  std::vector<std::uint8_t> payload(len);
  rd.bytes(payload.data(), len);

  CodingSetup setup;
  setup.config = h.config;
  setup.qp = h.qp;
  setup.banks = &banks;
  setup.subsets = subsets;
  setup.subset_size = h.subset_size;
  setup.full_width_index = h.full_width_index;
  setup.validate();
  for (const auto& [n, info] : h.banks)
    if (static_cast<int>(setup.bank(n).size()) != info.first || bank_hash(setup.bank(n)) != info.second)
      throw std::invalid_argument("stream was coded with a different bank at size " + std::to_string(n));
  if (h.config == Config::F_C && subset_table_hash(*subsets) != h.subset_hash)
    throw std::invalid_argument("stream was coded with a different subset table");

  GrayImage rec(h.width, h.height, 128);
  PayloadReader pr(setup, payload);
  for (int r = 0; r < h.height; r += kMacroblockSize)
    for (int c = 0; c < h.width; c += kMacroblockSize) {
      MacroblockCode mb = pr.macroblock(r, c);
      for (auto& lc : mb.leaves) {
        if (setup.residual())
          lc.prediction = predict(gather_references(rec, lc.leaf.row, lc.leaf.col, lc.leaf.size), lc.pm);
        reconstruct_leaf(lc, setup, rec);
      }
    }
  return rec;
}

}  // namespace sbgft

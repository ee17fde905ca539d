#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sbgft/arith.hpp"
#include "sbgft/block_codec.hpp"
#include "sbgft/image_io.hpp"
#include "sbgft/partition.hpp"
#include "sbgft/subsets.hpp"

namespace sbgft {

/// What a configuration codes with: banks per size, the candidate policy
/// and the quantizer.
struct CodingSetup {
  Config config = Config::A;
  int qp = 30;
  const BankSet* banks = nullptr;
  /// F_C only: subset table and cardinality (entries are truncated to it).
  const SubsetTable* subsets = nullptr;
  int subset_size = 0;
  /// F_C only: signal bank ordinals with ceil(log2 l) bits instead of the
  /// rank within the subset.
  bool full_width_index = false;
  /// Charge index bits in the RD cost and the rate estimate. The index is
  /// written to the stream either way.
  bool index_side_bits = true;

  bool residual() const { return is_residual_config(config); }
  const TransformBank& bank(int n) const;
  /// Candidate ordinals for a block of size n predicted with mode pm.
  std::vector<int> candidates(int n, int pm) const;
  int index_bits(int n, int pm) const;
  RdotOptions rdot(int n, int pm) const;
  /// Throws std::invalid_argument when the setup is incomplete.
  void validate() const;
};

struct LeafCode {
  Leaf leaf;
  int pm = -1;
  Eigen::MatrixXd prediction;  // zero in the pixel domain
  CodedBlock coded;
};

struct MacroblockCode {
  QuadTree tree;
  std::vector<LeafCode> leaves;  // Z-order
};

/// RDOT for many blocks at once, grouped by size and candidate set into
/// fixed chunks so results do not depend on the thread count.
std::vector<CodedBlock> select_transforms(const std::vector<const Eigen::MatrixXd*>& signals,
                                          const std::vector<int>& pms, const CodingSetup& setup,
                                          int threads);

/// Reconstructed samples of one leaf: prediction plus decoded residual,
/// rounded and clamped to 8 bits.
void reconstruct_leaf(const LeafCode& lc, const CodingSetup& setup, GrayImage& out);

/// Arithmetic-coded macroblock syntax: split flags and mode, transform index
/// bits as raw bits; coefficients through one adaptive model per size.
class PayloadWriter {
 public:
  explicit PayloadWriter(const CodingSetup& setup) : setup_(setup) {}
  void macroblock(const MacroblockCode& mb);
  std::vector<std::uint8_t> finish() { return enc_.finish(); }
  std::size_t bits() const { return enc_.bits(); }

 private:
  const CodingSetup& setup_;
  ArithmeticEncoder enc_;
  std::map<int, CoefficientModel> models_;
};

class PayloadReader {
 public:
  PayloadReader(const CodingSetup& setup, const std::vector<std::uint8_t>& payload)
      : setup_(setup), dec_(payload) {}
  /// Decodes the tree and leaf syntax of the macroblock at (row, col);
  /// predictions are left empty for the caller to fill.
  MacroblockCode macroblock(int row, int col);

 private:
  const CodingSetup& setup_;
  ArithmeticDecoder dec_;
  std::map<int, CoefficientModel> models_;
};

struct EncodedImage {
  std::vector<std::uint8_t> stream;
  GrayImage reconstruction;
  std::vector<MacroblockCode> macroblocks;  // raster order
  double estimated_bits = 0.0;  // rate model incl. split flags and modes
  std::size_t payload_bits = 0;
  double psnr = 0.0;
};

/// "SBGC" stream: version u16, width u16, height u16, qp u8, config u8,
/// subset size u8, flags u8, then for each size 4..64 the size u16, bank
/// member count u16 and bank hash u32, the subset table hash u32, the
/// payload length u32 and the payload, then CRC32 of everything before.
/// Residual configurations predict from the reconstruction (closed loop).
EncodedImage encode_image(const GrayImage& img, const CodingSetup& setup, int threads = 0);

struct StreamHeader {
  int width = 0, height = 0, qp = 0;
  Config config = Config::A;
  int subset_size = 0;
  bool full_width_index = false;
  std::map<int, std::pair<int, std::uint32_t>> banks;  // n -> (count, hash)
  std::uint32_t subset_hash = 0;
};
StreamHeader read_stream_header(const std::vector<std::uint8_t>& stream);

/// Decodes with the given banks (and subset table for F_C), which must match
/// the hashes recorded in the stream.
GrayImage decode_image(const std::vector<std::uint8_t>& stream, const BankSet& banks,
                       const SubsetTable* subsets = nullptr);

std::uint32_t subset_table_hash(const SubsetTable& t);

}  // namespace sbgft

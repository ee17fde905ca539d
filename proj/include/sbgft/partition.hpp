#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sbgft/image_io.hpp"
#include "sbgft/transform_bank.hpp"

namespace sbgft {

inline constexpr int kMacroblockSize = 64;
inline constexpr int kMinBlockSize = 4;

// ---------------------------------------------------------------------------
// Intra prediction

/// 0 = Planar, 1 = DC, 2..9 = angular directions 22.5 degrees apart, from
/// bottom-left (2) through horizontal (4), top-left diagonal (6) and
/// vertical (8) to 9.
inline constexpr int kPredictionModes = 10;
inline constexpr int kModeBits = 4;
inline constexpr int kModePlanar = 0;
inline constexpr int kModeDC = 1;
inline constexpr int kModeHorizontal = 4;
inline constexpr int kModeVertical = 8;

/// Reference samples of an n x n block. top[0] = left[0] is the corner;
/// top[1 + c] is the sample above column c and left[1 + r] the one left of
/// row r, for c, r in [0, 2n).
struct ReferenceSamples {
  int n = 0;
  std::vector<int> top, left;
};

/// Samples taken from `src` around the block at (row, col); positions
/// outside the image read as 128.
ReferenceSamples gather_references(const GrayImage& src, int row, int col, int n);
/// Integer prediction, rows = image rows.
Eigen::MatrixXd predict(const ReferenceSamples& refs, int mode);
/// Mode with the smallest SAD against `block`; ties go to the lowest id.
int best_prediction_mode(const Eigen::MatrixXd& block, const ReferenceSamples& refs,
                         Eigen::MatrixXd* prediction = nullptr);

// ---------------------------------------------------------------------------
// Quad-tree

struct Leaf {
  int row = 0, col = 0, size = 0;
  bool operator==(const Leaf&) const = default;
};

struct QuadNode {
  int row = 0, col = 0, size = 0;
  bool split = false;
  std::array<int, 4> child{-1, -1, -1, -1};  // TL, TR, BL, BR
  double cost = 0.0;                          // of the subtree, flags included
};

class QuadTree {
 public:
  QuadTree() = default;
  /// Single-leaf tree.
  QuadTree(int row, int col, int size, int min_size = kMinBlockSize);

  const std::vector<QuadNode>& nodes() const { return nodes_; }
  const QuadNode& root() const { return nodes_.front(); }
  int min_size() const { return min_size_; }
  /// Splits a leaf node into four children; returns the first child index.
  int split(int node);
  void set_cost(int node, double cost) { nodes_.at(static_cast<std::size_t>(node)).cost = cost; }
  /// Leaves in Z-order (TL, TR, BL, BR recursively).
  std::vector<Leaf> leaves() const;
  /// One flag for every node larger than the minimum size.
  int split_flag_bits() const;
  /// Split flags in depth-first order, as signaled in a stream.
  std::vector<bool> split_flags() const;
  /// Inverse of split_flags().
  static QuadTree from_flags(int row, int col, int size, const std::vector<bool>& flags,
                             std::size_t& pos, int min_size = kMinBlockSize);
  std::size_t leaf_count() const;

 private:
  int min_size_ = kMinBlockSize;
  std::vector<QuadNode> nodes_;
};

/// Cost of coding the node (row, col, size) as one leaf, without flag bits.
using NodeCostFn = std::function<double(int row, int col, int size)>;

/// Bottom-up DP: a node splits iff its children's cost is strictly below its
/// own leaf cost. Every node above min_size pays lambda for one split flag
/// whichever way it goes, so the decision matches comparing the children
/// plus one flag against the leaf. Node costs hold subtree totals.
QuadTree optimize_partition(int row, int col, int size, double lambda, const NodeCostFn& leaf_cost,
                            int min_size = kMinBlockSize);

enum class SignalDomain : std::uint8_t { Pixel, Residual };

/// Partition drivers: DCT-II for pixel-domain coding, MTS-5 for residuals
/// (DCT-II at 64 x 64 in both).
BankSet driver_banks(SignalDomain domain);

/// Pixel-domain partition of a 64 x 64 macroblock with driver RDOT costs.
QuadTree optimize_partition(const Eigen::MatrixXd& macroblock, int qp, const BankSet& driver);

struct LeafSignal {
  Leaf leaf;
  int pm = -1;                 // prediction mode, residual domain only
  Eigen::MatrixXd prediction;  // zero in the pixel domain
  Eigen::MatrixXd signal;      // block to transform
};

struct MacroblockPartition {
  QuadTree tree;
  std::vector<LeafSignal> leaves;  // Z-order
};

/// Partitions the macroblock at (row, col) of `img`. In the residual domain
/// each candidate node is predicted open-loop from `img` with the mode of
/// least SAD, and the leaf cost also covers the mode bits.
MacroblockPartition partition_macroblock(const GrayImage& img, int row, int col, int qp,
                                         SignalDomain domain, const BankSet& driver);

// ---------------------------------------------------------------------------
// Residual dataset

struct ResidualRecord {
  int size = 0;
  int pm = 0;
  int qp = 0;
  std::vector<std::int16_t> residual;  // row-major
  Eigen::MatrixXd block() const;
  bool operator==(const ResidualRecord&) const = default;
};

/// Open-loop residuals of every optimized leaf, image by image, macroblocks
/// in raster order and leaves in Z-order. Images are cropped to multiples
/// of 64.
std::vector<ResidualRecord> generate_residual_dataset(const std::vector<GrayImage>& images, int qp,
                                                      int threads = 0);

/// "SBRD" file: version u16, count u32, then per record size u16, pm u8,
/// qp u8 and size^2 samples i16, little-endian.
std::vector<std::uint8_t> serialize_residuals(const std::vector<ResidualRecord>& records);
std::vector<ResidualRecord> deserialize_residuals(const std::vector<std::uint8_t>& bytes);
void save_residuals(const std::vector<ResidualRecord>& records, const std::string& path);
std::vector<ResidualRecord> load_residuals(const std::string& path);

}  // namespace sbgft

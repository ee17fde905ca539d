#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sbgft/grid_graph.hpp"
#include "sbgft/spectral.hpp"

namespace sbgft {

/// Orthonormal 1-D kernels; row k is basis function k.
Eigen::MatrixXd dct2_kernel(int n);
Eigen::MatrixXd dst7_kernel(int n);
Eigen::MatrixXd dct8_kernel(int n);

enum class Kernel1D : std::uint8_t { DCT2 = 0, DST7 = 1, DCT8 = 2 };
const char* to_string(Kernel1D k);
Eigen::MatrixXd make_kernel(Kernel1D k, int n);

/// C = V * B * H^T: columns of the block are transformed by v, rows by h.
Eigen::MatrixXd apply_separable(const Eigen::MatrixXd& h, const Eigen::MatrixXd& v,
                                const Eigen::MatrixXd& block);
Eigen::MatrixXd apply_separable_inverse(const Eigen::MatrixXd& h, const Eigen::MatrixXd& v,
                                        const Eigen::MatrixXd& coeffs);

enum class TransformKind : std::uint8_t { Sbgft = 0, Dct2 = 1, Mts = 2 };

struct TransformId {
  int n = 0;
  TransformKind kind = TransformKind::Dct2;
  std::optional<ReflectionAxis> axis;  // Sbgft only
  Kernel1D h = Kernel1D::DCT2;         // separable kinds
  Kernel1D v = Kernel1D::DCT2;
  int ordinal = 0;
  std::string label() const;
};

/// One bank member. Blocks are n x n matrices with rows = grid x, so the
/// column-major data of a block is the graph signal in node order, and the
/// coefficients of a separable member are its n x n output in column-major
/// order.
class Transform {
 public:
  static Transform sbgft(std::shared_ptr<const GftBasis> basis, const ReflectionAxis& axis,
                         int ordinal);
  static Transform separable(int n, Kernel1D h, Kernel1D v, int ordinal);
  /// Separable member with explicitly supplied kernels (used when loading).
  static Transform separable(int n, Kernel1D h, Kernel1D v, int ordinal, Eigen::MatrixXd hk,
                             Eigen::MatrixXd vk);

  const TransformId& id() const { return id_; }
  int n() const { return id_.n; }
  const GftBasis* basis() const { return basis_.get(); }
  const Eigen::MatrixXd& h_kernel() const { return h_; }
  const Eigen::MatrixXd& v_kernel() const { return v_; }

  /// Signal (N^2, node order) to coefficients (N^2).
  void forward(const double* f, double* c) const;
  void inverse(const double* c, double* f) const;
  /// F is N^2 x B signals; C receives N^2 x B coefficients.
  void forward_batch(const Eigen::MatrixXd& F, Eigen::MatrixXd& C) const;
  /// N^2 x N^2 with basis vectors as columns (c = U^T f).
  Eigen::MatrixXd dense() const;
  /// Multiplications per forward transform.
  long multiplications() const;

 private:
  TransformId id_;
  std::shared_ptr<const GftBasis> basis_;
  Eigen::MatrixXd h_, v_;
};

enum class Config : std::uint8_t { A, B, C, D, E, F, F_C };
const char* to_string(Config c);
/// Accepts "A".."F", "F_C" and "F_<C>" (the subset cardinality is returned
/// through `subset_size` when given).
Config parse_config(const std::string& s, int* subset_size = nullptr);
/// True for the residual-domain configurations D, E, F and F_C.
bool is_residual_config(Config c);

struct TransformBank {
  int n = 0;
  std::string label;
  std::vector<Transform> members;
  std::size_t size() const { return members.size(); }
  const Transform& operator[](std::size_t i) const { return members[i]; }
};

/// Largest size at which banks use SBGFT or MTS candidates; 64x64 blocks are
/// coded with DCT-II in every configuration.
inline constexpr int kMaxMultiTransformSize = 32;

/// Members for one block size. SBGFT bases come from `lib`.
///   A: DCT2.  B: DCT2 + SBGFTs at n=8, DCT2 otherwise.  C: DCT2 + SBGFTs.
///   D: MTS-5.  E: SBGFTs at n=8, MTS-5 otherwise.  F, F_C: SBGFTs.
TransformBank build_bank(int n, Config config, SbgftLibrary& lib = SbgftLibrary::shared());
/// Banks keyed by block size.
using BankSet = std::map<int, TransformBank>;
/// build_bank for every size 4, 8, ..., 64.
BankSet config_banks(Config config, SbgftLibrary& lib = SbgftLibrary::shared());

/// The five primary MTS combinations (h, v): DCT2/DCT2, DST7/DST7,
/// DCT8/DCT8, DST7/DCT8, DCT8/DST7.
TransformBank build_mts5_bank(int n);
TransformBank build_dct_bank(int n);

/// Bank file "SBGF": version u16, n u16, count u32, label (u8 length +
/// bytes), then per member a kind tag u8 and descriptor (Sbgft: direction u8,
/// k u16, N^2 x N^2 forward matrix; separable: h tag u8, v tag u8, two n x n
/// kernels), all f64 little-endian row-major, then CRC32 of all preceding
/// bytes.
std::vector<std::uint8_t> serialize_bank(const TransformBank& bank);
TransformBank deserialize_bank(const std::vector<std::uint8_t>& bytes);
void save_bank(const TransformBank& bank, const std::string& path);
TransformBank load_bank(const std::string& path);

/// Checksum over member descriptors and operator coefficients, used to tie
/// coded streams to the bank they were produced with.
std::uint32_t bank_hash(const TransformBank& bank);

}  // namespace sbgft

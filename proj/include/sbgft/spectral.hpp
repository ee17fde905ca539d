#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sbgft/grid_graph.hpp"

namespace sbgft {

/// Grid reflections realizing the edge-symmetry types.
///   LeftRight:     (x,y) -> (x, N+1-y)
///   UpDown:        (x,y) -> (N+1-x, y)
///   AntiTranspose: (x,y) -> (N+1-y, N+1-x)
///   Transpose:     (x,y) -> (y, x)
enum class PairingKind : std::uint8_t {
  LeftRight = 0,
  UpDown = 1,
  AntiTranspose = 2,
  Transpose = 3
};

const char* to_string(PairingKind k);

struct SymmetryPairing {
  PairingKind kind = PairingKind::LeftRight;
  int n = 0;
  /// image[i] is the 0-based index paired with 0-based node i.
  std::vector<int> image;
  /// 1-based ids with involution(id) == id.
  std::vector<int> fixed_nodes;

  /// Acts on 1-based node ids.
  int operator()(int id) const { return image[id - 1] + 1; }
};

SymmetryPairing make_pairing(PairingKind kind, int n);
/// The involution whose edge symmetry the SBG of `axis` carries.
SymmetryPairing pairing_for_axis(const ReflectionAxis& axis);
/// Main-axis SBGs carry a second, commuting edge symmetry.
std::optional<SymmetryPairing> secondary_pairing_for_axis(
    const ReflectionAxis& axis);
/// Primary pairing, followed by the secondary one when present.
std::vector<SymmetryPairing> symmetry_generators(const ReflectionAxis& axis);
bool is_automorphism(const GridGraph& g, const SymmetryPairing& p);

struct SymmetricEigen {
  Eigen::VectorXd values;   // ascending
  Eigen::MatrixXd vectors;  // column j pairs with values[j]
};

/// Dense symmetric eigensolver. Throws std::invalid_argument when m is not
/// symmetric within 1e-10 and std::runtime_error when the solver fails.
SymmetricEigen eig_symmetric(const Eigen::MatrixXd& m);

/// Butterfly-accelerated GFT. The pairing group (one or two commuting
/// involutions) splits the node set into orbits; for every character of the
/// group the signal is folded onto the orbit representatives with +/-1
/// weights (additions only) and multiplied by a small dense block. The
/// blocks together hold the whole orthonormal basis.
class FastPlan {
 public:
  struct Block {
    std::int8_t parity = 1;   // character value on the first generator
    std::int8_t parity2 = 0;  // on the second generator, 0 when absent
    /// Flattened orbit members: terms[offsets[r] .. offsets[r+1]) fold onto
    /// row r of the reduced signal.
    std::vector<int> nodes;
    std::vector<std::int8_t> signs;
    std::vector<int> offsets;
    /// d x d, already scaled by 1/sqrt(orbit size); row i is the canonical
    /// coefficient index out_index[i].
    Eigen::MatrixXd W;
    std::vector<int> out_index;
    int dim() const { return static_cast<int>(W.rows()); }
  };

  FastPlan() = default;
  FastPlan(int n, std::vector<Block> blocks);

  int n() const { return n_; }
  int size() const { return n_ * n_; }
  const std::vector<Block>& blocks() const { return blocks_; }
  /// Sum of squared block sides.
  long multiplication_count() const { return mults_; }

  void forward(std::span<const double> f, std::span<double> c) const;
  void inverse(std::span<const double> c, std::span<double> f) const;
  /// Column-wise batch: F is N^2 x B signals, C receives N^2 x B coefficients.
  void forward_batch(const Eigen::MatrixXd& F, Eigen::MatrixXd& C) const;

  /// Column j of the result is basis vector j.
  Eigen::MatrixXd dense() const;
  Eigen::VectorXd basis_vector(int j) const;

 private:
  int n_ = 0;
  std::vector<Block> blocks_;
  long mults_ = 0;
};

/// Orthonormal Laplacian eigenbasis in canonical order.
struct GftBasis {
  int n = 0;
  std::string label;
  std::vector<SymmetryPairing> pairings;
  Eigen::VectorXd eigenvalues;
  /// Per canonical index: character value on pairings[0] / pairings[1]
  /// (parity2 is 0 when there is no second pairing).
  std::vector<std::int8_t> parity;
  std::vector<std::int8_t> parity2;
  std::shared_ptr<const FastPlan> plan;

  int size() const { return n * n; }
  /// N^2 x N^2, columns are eigenvectors u_j.
  Eigen::MatrixXd eigenvectors() const { return plan->dense(); }
};

/// Builds the basis through the reduced per-character problems so parity is
/// exact by construction. Eigenvalues are sorted ascending; ties within
/// 1e-9 are ordered symmetric-first (pairing 0, then pairing 1) and then by
/// descending lexicographic order of the sign-fixed vectors. Each vector's
/// first entry above 1e-12 in magnitude is positive.
GftBasis build_gft_basis(const GridGraph& g,
                         const std::vector<SymmetryPairing>& pairings);
GftBasis build_gft_basis(const GridGraph& g, const SymmetryPairing& pairing);
/// SBG of `axis` with its full symmetry group.
GftBasis build_sbg_basis(const ReflectionAxis& axis);

/// Recovers the plan of a basis from its dense eigenvector matrix (columns)
/// and pairing group, reproducing the original plan bit-exactly when U came
/// from FastPlan::dense().
FastPlan plan_from_dense(const Eigen::MatrixXd& U,
                         const std::vector<SymmetryPairing>& pairings);

const FastPlan& make_fast_plan(const GftBasis& basis);
inline long multiplication_count(const FastPlan& plan) {
  return plan.multiplication_count();
}
void fast_forward(const FastPlan& plan, std::span<const double> f,
                  std::span<double> c);
void fast_inverse(const FastPlan& plan, std::span<const double> c,
                  std::span<double> f);
inline void fast_forward(const FastPlan& plan, const Eigen::VectorXd& f,
                         Eigen::VectorXd& c) {
  c.resize(f.size());
  plan.forward({f.data(), static_cast<std::size_t>(f.size())},
               {c.data(), static_cast<std::size_t>(c.size())});
}
inline void fast_inverse(const FastPlan& plan, const Eigen::VectorXd& c,
                         Eigen::VectorXd& f) {
  f.resize(c.size());
  plan.inverse({c.data(), static_cast<std::size_t>(c.size())},
               {f.data(), static_cast<std::size_t>(f.size())});
}

/// Dense c = U^T f and f = U c.
Eigen::VectorXd gft_forward(const Eigen::MatrixXd& U, const Eigen::VectorXd& f);
Eigen::VectorXd gft_inverse(const Eigen::MatrixXd& U, const Eigen::VectorXd& c);
Eigen::VectorXd gft_forward(const GftBasis& basis, const Eigen::VectorXd& f);
Eigen::VectorXd gft_inverse(const GftBasis& basis, const Eigen::VectorXd& c);

/// Lazily built, shared SBG bases per grid size in axis enumeration order.
/// Safe for concurrent use.
class SbgftLibrary {
 public:
  explicit SbgftLibrary(int threads = 1) : threads_(threads) {}
  const std::vector<std::shared_ptr<const GftBasis>>& bases(int n);
  void set_threads(int threads) { threads_ = threads; }

  /// Process-wide instance.
  static SbgftLibrary& shared();

 private:
  int threads_;
  std::mutex mu_;
  std::map<int, std::shared_ptr<std::vector<std::shared_ptr<const GftBasis>>>>
      cache_;
};

}  // namespace sbgft

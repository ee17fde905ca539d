#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "sbgft/transform_bank.hpp"

namespace sbgft {

/// Uniform scalar quantizer, step 2^((qp-4)/6), rounding half away from zero.
struct QuantizerSpec {
  int qp = 0;
  double step = 1.0;
  static QuantizerSpec from_qp(int qp);
};

/// 0.57 * 2^((qp-12)/3); throws std::out_of_range outside [0, 51].
double lambda_from_qp(int qp);

std::vector<int> quantize(std::span<const double> coeffs, const QuantizerSpec& q);
std::vector<double> dequantize(std::span<const int> indices, const QuantizerSpec& q);
inline int quantize_one(double c, double step) {
  const double t = c / step;
  return static_cast<int>(t >= 0 ? std::floor(t + 0.5) : -std::floor(-t + 0.5));
}

/// ceil(log2 l); 0 for l = 1.
int index_bits(std::size_t l);
/// Number of indices times their empirical order-0 entropy in bits.
double coefficient_entropy_bits(std::span<const int> indices);
/// coefficient_entropy_bits + ceil(log2 l).
double rate_estimate(std::span<const int> indices, std::size_t l);

struct CodedBlock {
  int n = 0;
  int transform = 0;  // ordinal in the bank
  std::vector<int> indices;
  double rate_bits = 0.0;   // coefficient entropy + side bits
  double side_bits = 0.0;
  double distortion = 0.0;  // transform-domain sum of squared errors
  double cost = 0.0;        // distortion + lambda * rate_bits
  int evaluations = 0;      // candidate transforms evaluated
  double mse() const { return distortion / (static_cast<double>(n) * n); }
};

/// Relative cost gap below which two candidates tie and the lower ordinal wins.
inline constexpr double kCostTieTolerance = 1e-9;

struct RdotOptions {
  int qp = 30;
  double lambda = 0.0;
  /// Fixed-length transform-index bits added to the rate; when negative,
  /// ceil(log2 of the candidate count) is used.
  int side_bits = -1;
  /// Off: the rate term counts coefficient entropy only.
  bool include_side_bits = true;
};

RdotOptions rdot_options(int qp);

/// Exhaustive transform selection over the whole bank. Ties resolve to the
/// lowest ordinal. `block` is n x n (rows = grid x).
CodedBlock rdot_select(const Eigen::MatrixXd& block, const TransformBank& bank,
                       const RdotOptions& opt);
/// Same over a candidate subset (ordinals into the bank).
CodedBlock rdot_select_among(const Eigen::MatrixXd& block, const TransformBank& bank,
                             std::span<const int> candidates, const RdotOptions& opt);
/// Batched selection: column b of F is block b in node order.
std::vector<CodedBlock> rdot_select_batch(const Eigen::MatrixXd& F, const TransformBank& bank,
                                          std::span<const int> candidates,
                                          const RdotOptions& opt);

/// Inverse transform of the dequantized indices (n x n, unrounded).
Eigen::MatrixXd decode_block(const CodedBlock& cb, const TransformBank& bank, int qp);

/// Quantizes one coefficient vector: indices, squared error, entropy bits.
void evaluate_candidate(const double* coeffs, int nn, double step, std::vector<int>& indices,
                        double& distortion, double& coef_bits);

}  // namespace sbgft

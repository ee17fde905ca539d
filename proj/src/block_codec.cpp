#include "sbgft/block_codec.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace sbgft {

QuantizerSpec QuantizerSpec::from_qp(int qp) {
  if (qp < 0 || qp > 51) throw std::out_of_range("qp outside [0, 51]");
  return {qp, std::pow(2.0, (qp - 4) / 6.0)};
}

double lambda_from_qp(int qp) {
  if (qp < 0 || qp > 51) throw std::out_of_range("qp outside [0, 51]");
  return 0.57 * std::pow(2.0, (qp - 12) / 3.0);
}

std::vector<int> quantize(std::span<const double> coeffs, const QuantizerSpec& q) {
  std::vector<int> out(coeffs.size());
  for (std::size_t i = 0; i < coeffs.size(); ++i) out[i] = quantize_one(coeffs[i], q.step);
  return out;
}

std::vector<double> dequantize(std::span<const int> indices, const QuantizerSpec& q) {
  std::vector<double> out(indices.size());
  for (std::size_t i = 0; i < indices.size(); ++i) out[i] = indices[i] * q.step;
  return out;
}

int index_bits(std::size_t l) {
  if (l == 0) throw std::invalid_argument("empty bank");
  int b = 0;
  while ((std::size_t{1} << b) < l) ++b;
  return b;
}

namespace {

constexpr int kDirect = 1024;

// Entropy from counts, summed in ascending value order.
double entropy_bits(std::span<const int> idx, std::vector<int>& counts) {
  const double total = static_cast<double>(idx.size());
  if (idx.empty()) return 0.0;
  counts.assign(2 * kDirect + 1, 0);
  std::map<int, int> far;
  for (int v : idx) {
    if (v > -kDirect && v < kDirect)
      ++counts[v + kDirect];
    else
      ++far[v];
  }
  double bits = 0.0;
  auto add = [&](int c) {
    if (c > 0) bits -= c * std::log2(c / total);
  };
  auto it = far.begin();
  for (; it != far.end() && it->first <= -kDirect; ++it) add(it->second);
  for (int c : counts) add(c);
  for (; it != far.end(); ++it) add(it->second);
  return bits;
}

}  // namespace

double coefficient_entropy_bits(std::span<const int> indices) {
  std::vector<int> counts;
  return entropy_bits(indices, counts);
}

double rate_estimate(std::span<const int> indices, std::size_t l) {
  return coefficient_entropy_bits(indices) + index_bits(l);
}

RdotOptions rdot_options(int qp) {
  RdotOptions o;
  o.qp = qp;
  o.lambda = lambda_from_qp(qp);
  return o;
}

void evaluate_candidate(const double* coeffs, int nn, double step, std::vector<int>& indices,
                        double& distortion, double& coef_bits) {
  indices.resize(nn);
  double sse = 0.0;
  for (int i = 0; i < nn; ++i) {
    const int q = quantize_one(coeffs[i], step);
    indices[i] = q;
    const double e = coeffs[i] - q * step;
    sse += e * e;
  }
  distortion = sse;
  thread_local std::vector<int> counts;
  coef_bits = entropy_bits(indices, counts);
}

std::vector<CodedBlock> rdot_select_batch(const Eigen::MatrixXd& F, const TransformBank& bank,
                                          std::span<const int> candidates,
                                          const RdotOptions& opt) {
  if (candidates.empty()) throw std::invalid_argument("rdot_select: empty candidate set");
  const int n = bank.n, nn = n * n;
  if (F.rows() != nn) throw std::invalid_argument("rdot_select: block size does not match bank");
  for (int c : candidates)
    if (c < 0 || c >= static_cast<int>(bank.size()))
      throw std::out_of_range("rdot_select: candidate ordinal outside bank");
  const double step = QuantizerSpec::from_qp(opt.qp).step;
  const double side =
      opt.include_side_bits ? (opt.side_bits >= 0 ? opt.side_bits : index_bits(candidates.size())) : 0.0;
  const Eigen::Index B = F.cols();
  std::vector<CodedBlock> best(B);
  for (auto& cb : best) {
    cb.n = n;
    cb.transform = -1;
    cb.evaluations = static_cast<int>(candidates.size());
  }
  Eigen::MatrixXd C;
  std::vector<int> idx;
  for (int t : candidates) {
    bank[t].forward_batch(F, C);
    for (Eigen::Index b = 0; b < B; ++b) {
      double dist, bits;
      evaluate_candidate(C.col(b).data(), nn, step, idx, dist, bits);
      const double rate = bits + side;
      const double J = dist + opt.lambda * rate;
      auto& cb = best[b];
      // Costs within rounding noise of each other count as ties.
      const double tol = kCostTieTolerance * std::max(1.0, std::abs(cb.cost));
      if (cb.transform < 0 || J < cb.cost - tol ||
          (J <= cb.cost + tol && t < cb.transform)) {
        cb.transform = t;
        cb.indices = idx;
        cb.distortion = dist;
        cb.rate_bits = rate;
        cb.side_bits = side;
        cb.cost = J;
      }
    }
  }
  return best;
}

CodedBlock rdot_select_among(const Eigen::MatrixXd& block, const TransformBank& bank,
                             std::span<const int> candidates, const RdotOptions& opt) {
  if (block.rows() != bank.n || block.cols() != bank.n)
    throw std::invalid_argument("rdot_select: block size does not match bank");
  Eigen::MatrixXd F = Eigen::Map<const Eigen::MatrixXd>(block.data(), bank.n * bank.n, 1);
  return rdot_select_batch(F, bank, candidates, opt)[0];
}

CodedBlock rdot_select(const Eigen::MatrixXd& block, const TransformBank& bank,
                       const RdotOptions& opt) {
  if (bank.size() == 0) throw std::invalid_argument("rdot_select: empty bank");
  std::vector<int> all(bank.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<int>(i);
  return rdot_select_among(block, bank, all, opt);
}

Eigen::MatrixXd decode_block(const CodedBlock& cb, const TransformBank& bank, int qp) {
  if (cb.transform < 0 || cb.transform >= static_cast<int>(bank.size()))
    throw std::out_of_range("decode_block: unknown transform id");
  const int n = bank.n, nn = n * n;
  if (static_cast<int>(cb.indices.size()) != nn)
    throw std::invalid_argument("decode_block: index count does not match bank");
  const double step = QuantizerSpec::from_qp(qp).step;
  Eigen::VectorXd c(nn);
  for (int i = 0; i < nn; ++i) c[i] = cb.indices[i] * step;
  Eigen::MatrixXd out(n, n);
  bank[cb.transform].inverse(c.data(), out.data());
  return out;
}

}  // namespace sbgft

#pragma once

#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "sbgft/grid_graph.hpp"

namespace sbgft {

/// Nodes that belong to a connected specular pair for an axis, and those
/// pairs. Node ids are 1-based and V_s is ascending; on-axis nodes never
/// appear. Each pair is stored (near, far) with near the smaller id.
struct Support {
  ReflectionAxis axis;
  int n = 0;
  std::vector<int> nodes;
  std::vector<std::pair<int, int>> pairs;
  /// partner[i] is the position in `nodes` of the mirror of nodes[i].
  std::vector<int> partner;

  bool empty() const { return nodes.empty(); }
};

/// Exhaustive scan of all specular node pairs joined by an edge of g. The
/// axis only needs matching n; indices outside the SBG enumeration (such as
/// the border axis x = 1.5 at k = 0) are accepted for analysis.
Support support_of(const GridGraph& g, const ReflectionAxis& axis);

/// Signal samples at the support nodes, in support order. `f` is indexed by
/// node id - 1 (equivalently an n x n column-major block).
Eigen::VectorXd restrict_to_support(std::span<const double> f, const Support& s);
Eigen::VectorXd mirror(const Eigen::VectorXd& fs, const Support& s);
/// fs^T mirror(fs) / fs^T fs. Throws std::domain_error for zero energy.
double symmetry_ratio(const Eigen::VectorXd& fs, const Support& s);

struct SymmetryReport {
  ReflectionAxis axis;
  /// Per eigenvector in canonical order; NaN where the eigenvector has no
  /// energy on the support.
  std::vector<double> ratios;
  double min_abs = 0.0;
  double mean_abs = 0.0;
};

/// One report per SBG of size n, in axis enumeration order.
std::vector<SymmetryReport> eigenvector_symmetry_report(int n, int threads = 1);

struct SymmetryHistogram {
  int n = 0;
  double threshold = 0.7;
  std::size_t blocks = 0;
  std::vector<ReflectionAxis> axes;
  /// Fraction of blocks with S_s > threshold on each axis.
  std::vector<double> per_axis;
  /// Fraction of blocks above threshold on at least one axis of a direction,
  /// indexed by AxisDirection.
  double any_axis[4] = {0, 0, 0, 0};
};

/// Blocks are n x n with rows = x. A block with no energy on a support is
/// perfectly symmetric there (S_s = 1).
SymmetryHistogram residual_symmetry_histogram(
    const std::vector<Eigen::MatrixXd>& blocks, int n, double threshold = 0.7,
    int threads = 1);

}  // namespace sbgft

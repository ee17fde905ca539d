#pragma once

#include <compare>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace sbgft {

/// Grid coordinates are 1-based: x is the row (north to south), y the column
/// (west to east). Node ids follow column-wise ordering id = (y-1)*n + x.
struct GridPoint {
  int x = 0;
  int y = 0;
  friend bool operator==(const GridPoint&, const GridPoint&) = default;
};

inline int node_id(int n, int x, int y) { return (y - 1) * n + x; }
inline int node_id(int n, GridPoint p) { return node_id(n, p.x, p.y); }
inline GridPoint node_point(int n, int id) {
  return {(id - 1) % n + 1, (id - 1) / n + 1};
}
inline bool inside_grid(int n, GridPoint p) {
  return p.x >= 1 && p.x <= n && p.y >= 1 && p.y <= n;
}

/// Throws std::invalid_argument unless n is even and 4 <= n <= 64.
void validate_grid_size(int n);

enum class AxisDirection : std::uint8_t { H = 0, V = 1, D = 2, AD = 3 };

const char* to_string(AxisDirection d);
AxisDirection parse_axis_direction(const std::string& s);

/// A reflection axis of an n-by-n grid, indexed as in the SBG construction:
///   H:  x = (k+3)/2,          k = 1..2n-5
///   V:  y = (k+3)/2,          k = 1..2n-5
///   D:  y = x - (n-3) + k,    k = 1..2n-7
///   AD: y = -x + 4 + k,       k = 1..2n-7
struct ReflectionAxis {
  AxisDirection direction = AxisDirection::H;
  int k = 1;
  int n = 4;

  /// Line position: the x (H) or y (V) value, the intercept q of y = x + q
  /// (D) or of y = -x + q (AD).
  double offset() const;
  /// True for the four axes through the grid center.
  bool is_main() const;
  GridPoint reflect(GridPoint p) const;
  /// "H:3" style label.
  std::string label() const;

  friend bool operator==(const ReflectionAxis&, const ReflectionAxis&) = default;
};

/// Count of axes per direction for size n.
int axis_count(AxisDirection d, int n);
/// Throws std::invalid_argument if the axis index is out of range for its n.
void validate_axis(const ReflectionAxis& axis);

/// All 8n-24 axes: H by ascending k, then V, D, AD.
std::vector<ReflectionAxis> enumerate_reflection_axes(int n);

/// Undirected unit-weight edge between 1-based node ids, u < v.
struct Edge {
  int u = 0;
  int v = 0;
  friend auto operator<=>(const Edge&, const Edge&) = default;
};

/// Immutable graph on an n-by-n node grid. Edge set is stored sorted and
/// duplicate-free; every weight is 1.
class GridGraph {
 public:
  GridGraph(int n, std::vector<Edge> edges,
            std::optional<ReflectionAxis> axis = std::nullopt);

  int n() const { return n_; }
  int node_count() const { return n_ * n_; }
  std::span<const Edge> edges() const { return edges_; }
  std::size_t edge_count() const { return edges_.size(); }
  bool has_edge(int u, int v) const;
  const std::optional<ReflectionAxis>& axis() const { return axis_; }
  /// Degree of every node, indexed by id-1.
  std::vector<int> degrees() const;
  std::string label() const;

 private:
  int n_;
  std::vector<Edge> edges_;
  std::optional<ReflectionAxis> axis_;
};

/// The 4-connected grid with 2n(n-1) unit edges.
GridGraph build_2dgg(int n);
/// The 2DGG plus the node-symmetry edges for `axis`.
GridGraph build_sbg(int n, const ReflectionAxis& axis);
/// One SBG per axis, in enumerate_reflection_axes order.
std::vector<GridGraph> build_sbg_family(int n);

/// L = D - W as a dense n^2-by-n^2 matrix.
Eigen::MatrixXd laplacian(const GridGraph& g);
/// Sum over edges of (f_u - f_v)^2.
double laplacian_quadratic_form(const GridGraph& g, std::span<const double> f);

/// Edge-list text: header "SBG n=<N> axis=<dir>:<k>" (or "2DGG n=<N>" for a
/// graph without axis), then one "u v 1" line per edge.
void write_edge_list(const GridGraph& g, std::ostream& os);
GridGraph read_edge_list(std::istream& is);

}  // namespace sbgft

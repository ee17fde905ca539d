#include "sbgft/grid_graph.hpp"

#include <algorithm>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace sbgft {

void validate_grid_size(int n) {
  if (n < 4 || n > 64 || n % 2 != 0)
    throw std::invalid_argument("unsupported grid size " + std::to_string(n) +
                                " (need even n in 4..64)");
}

const char* to_string(AxisDirection d) {
  switch (d) {
    case AxisDirection::H: return "H";
    case AxisDirection::V: return "V";
    case AxisDirection::D: return "D";
    case AxisDirection::AD: return "AD";
  }
  return "?";
}

AxisDirection parse_axis_direction(const std::string& s) {
  if (s == "H") return AxisDirection::H;
  if (s == "V") return AxisDirection::V;
  if (s == "D") return AxisDirection::D;
  if (s == "AD") return AxisDirection::AD;
  throw std::invalid_argument("unknown axis direction '" + s + "'");
}

int axis_count(AxisDirection d, int n) {
  return (d == AxisDirection::H || d == AxisDirection::V) ? 2 * n - 5
                                                          : 2 * n - 7;
}

void validate_axis(const ReflectionAxis& axis) {
  validate_grid_size(axis.n);
  if (axis.k < 1 || axis.k > axis_count(axis.direction, axis.n))
    throw std::invalid_argument("axis index out of range: " + axis.label() +
                                " for n=" + std::to_string(axis.n));
}

double ReflectionAxis::offset() const {
  switch (direction) {
    case AxisDirection::H:
    case AxisDirection::V: return (k + 3) / 2.0;
    case AxisDirection::D: return k - (n - 3);
    case AxisDirection::AD: return 4 + k;
  }
  return 0.0;
}

bool ReflectionAxis::is_main() const {
  if (direction == AxisDirection::H || direction == AxisDirection::V)
    return k == n - 2;
  return k == n - 3;
}

GridPoint ReflectionAxis::reflect(GridPoint p) const {
  switch (direction) {
    case AxisDirection::H: return {k + 3 - p.x, p.y};
    case AxisDirection::V: return {p.x, k + 3 - p.y};
    case AxisDirection::D: {
      int q = k - (n - 3);
      return {p.y - q, p.x + q};
    }
    case AxisDirection::AD: {
      int s = 4 + k;
      return {s - p.y, s - p.x};
    }
  }
  return p;
}

std::string ReflectionAxis::label() const {
  return std::string(to_string(direction)) + ":" + std::to_string(k);
}

std::vector<ReflectionAxis> enumerate_reflection_axes(int n) {
  validate_grid_size(n);
  std::vector<ReflectionAxis> out;
  out.reserve(8 * n - 24);
  for (auto d : {AxisDirection::H, AxisDirection::V, AxisDirection::D,
                 AxisDirection::AD})
    for (int k = 1; k <= axis_count(d, n); ++k) out.push_back({d, k, n});
  return out;
}

GridGraph::GridGraph(int n, std::vector<Edge> edges,
                     std::optional<ReflectionAxis> axis)
    : n_(n), edges_(std::move(edges)), axis_(axis) {
  if (n < 1) throw std::invalid_argument("grid side must be positive");
  const int nn = n * n;
  for (auto& e : edges_) {
    if (e.u == e.v) throw std::invalid_argument("self-loop in edge set");
    if (e.u > e.v) std::swap(e.u, e.v);
    if (e.u < 1 || e.v > nn)
      throw std::invalid_argument("edge endpoint out of range");
  }
  std::sort(edges_.begin(), edges_.end());
  edges_.erase(std::unique(edges_.begin(), edges_.end()), edges_.end());
}

bool GridGraph::has_edge(int u, int v) const {
  if (u > v) std::swap(u, v);
  return std::binary_search(edges_.begin(), edges_.end(), Edge{u, v});
}

std::vector<int> GridGraph::degrees() const {
  std::vector<int> deg(node_count(), 0);
  for (const auto& e : edges_) {
    ++deg[e.u - 1];
    ++deg[e.v - 1];
  }
  return deg;
}

std::string GridGraph::label() const {
  std::string s = (axis_ ? "SBG n=" : "2DGG n=") + std::to_string(n_);
  if (axis_) s += " axis=" + axis_->label();
  return s;
}

namespace {

std::vector<Edge> grid_edges(int n) {
  std::vector<Edge> e;
  e.reserve(2 * n * (n - 1));
  for (int y = 1; y <= n; ++y)
    for (int x = 1; x <= n; ++x) {
      if (x < n) e.push_back({node_id(n, x, y), node_id(n, x + 1, y)});
      if (y < n) e.push_back({node_id(n, x, y), node_id(n, x, y + 1)});
    }
  return e;
}

void add_pair(std::vector<Edge>& e, int n, GridPoint a, GridPoint b) {
  e.push_back({node_id(n, a), node_id(n, b)});
}

// Horizontal and vertical axes: the specular pairs (a,j)-(b,j) (H) or
// (j,a)-(j,b) (V) with a, b walking outwards from the axis line.
void algorithm1(std::vector<Edge>& e, int n, const ReflectionAxis& ax) {
  const int k = ax.k;
  const double c = (k + 3) / 2.0;
  const double frac = (k + 3) % 2 ? 0.5 : 0.0;
  const int imax = std::min((k + 2) / 2, n - (k + 3) / 2);
  for (int i = 1; i <= imax; ++i) {
    const int a = static_cast<int>(c - i + frac);
    const int b = static_cast<int>(c + i - frac);
    for (int j = 1; j <= n; ++j) {
      if (ax.direction == AxisDirection::H)
        add_pair(e, n, {a, j}, {b, j});
      else
        add_pair(e, n, {j, a}, {j, b});
    }
  }
}

// Diagonal and anti-diagonal axes. The base pattern pairs (i,j) with
// (j+m-1, i-m+1), i.e. the reflection across y = x-(m-1); the other three
// cases are its transpose and column-flipped variants.
void algorithm2(std::vector<Edge>& e, int n, const ReflectionAxis& ax) {
  const int q = ax.k - (n - 3);
  const int m = std::abs(q) + 1;
  for (int j = 1; j <= n - m; ++j)
    for (int i = m + j; i <= n; ++i) {
      const int a = j + m - 1;
      const int b = i - m + 1;
      if (ax.direction == AxisDirection::D) {
        if (q <= 0)
          add_pair(e, n, {i, j}, {a, b});
        else
          add_pair(e, n, {j, i}, {b, a});
      } else {
        if (q >= 0)
          add_pair(e, n, {a, n + 1 - b}, {i, n + 1 - j});
        else
          add_pair(e, n, {b, n + 1 - a}, {j, n + 1 - i});
      }
    }
}

}  // namespace

GridGraph build_2dgg(int n) {
  validate_grid_size(n);
  return GridGraph(n, grid_edges(n));
}

GridGraph build_sbg(int n, const ReflectionAxis& axis) {
  validate_grid_size(n);
  if (axis.n != n)
    throw std::invalid_argument("axis was enumerated for a different size");
  validate_axis(axis);
  auto e = grid_edges(n);
  if (axis.direction == AxisDirection::H || axis.direction == AxisDirection::V)
    algorithm1(e, n, axis);
  else
    algorithm2(e, n, axis);
  return GridGraph(n, std::move(e), axis);
}

std::vector<GridGraph> build_sbg_family(int n) {
  std::vector<GridGraph> out;
  for (const auto& ax : enumerate_reflection_axes(n))
    out.push_back(build_sbg(n, ax));
  return out;
}

Eigen::MatrixXd laplacian(const GridGraph& g) {
  const int nn = g.node_count();
  Eigen::MatrixXd L = Eigen::MatrixXd::Zero(nn, nn);
  for (const auto& e : g.edges()) {
    L(e.u - 1, e.u - 1) += 1.0;
    L(e.v - 1, e.v - 1) += 1.0;
    L(e.u - 1, e.v - 1) -= 1.0;
    L(e.v - 1, e.u - 1) -= 1.0;
  }
  return L;
}

double laplacian_quadratic_form(const GridGraph& g, std::span<const double> f) {
  if (f.size() != static_cast<std::size_t>(g.node_count()))
    throw std::invalid_argument("signal length does not match node count");
  double s = 0.0;
  for (const auto& e : g.edges()) {
    const double d = f[e.u - 1] - f[e.v - 1];
    s += d * d;
  }
  return s;
}

void write_edge_list(const GridGraph& g, std::ostream& os) {
  os << g.label() << '\n';
  for (const auto& e : g.edges()) os << e.u << ' ' << e.v << " 1\n";
}

GridGraph read_edge_list(std::istream& is) {
  std::string header;
  if (!std::getline(is, header)) throw std::runtime_error("empty edge list");
  std::istringstream hs(header);
  std::string kind, ntok, axtok;
  hs >> kind >> ntok;
  if ((kind != "SBG" && kind != "2DGG") || ntok.rfind("n=", 0) != 0)
    throw std::runtime_error("bad edge-list header: " + header);
  const int n = std::stoi(ntok.substr(2));
  std::optional<ReflectionAxis> axis;
  if (kind == "SBG") {
    hs >> axtok;
    auto colon = axtok.find(':');
    if (axtok.rfind("axis=", 0) != 0 || colon == std::string::npos)
      throw std::runtime_error("bad axis in edge-list header: " + header);
    ReflectionAxis ax{parse_axis_direction(axtok.substr(5, colon - 5)),
                      std::stoi(axtok.substr(colon + 1)), n};
    validate_axis(ax);
    axis = ax;
  }
  std::vector<Edge> edges;
  int u, v;
  double w;
  while (is >> u >> v >> w) {
    if (w != 1.0) throw std::runtime_error("edge weight other than 1");
    edges.push_back({u, v});
  }
  if (!is.eof()) throw std::runtime_error("malformed edge line");
  return GridGraph(n, std::move(edges), axis);
}

}  // namespace sbgft

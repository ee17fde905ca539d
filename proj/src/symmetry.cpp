#include "sbgft/symmetry.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "sbgft/parallel.hpp"
#include "sbgft/spectral.hpp"

namespace sbgft {

Support support_of(const GridGraph& g, const ReflectionAxis& axis) {
  if (axis.n != g.n()) throw std::invalid_argument("support_of: size mismatch");
  const int n = g.n();
  Support s;
  s.axis = axis;
  s.n = n;
  std::vector<int> mate(n * n + 1, 0);
  for (int id = 1; id <= n * n; ++id) {
    const GridPoint r = axis.reflect(node_point(n, id));
    if (!inside_grid(n, r)) continue;
    const int rid = node_id(n, r);
    if (rid == id || !g.has_edge(id, rid)) continue;
    mate[id] = rid;
    s.nodes.push_back(id);
    if (id < rid) s.pairs.push_back({id, rid});
  }
  std::vector<int> pos(n * n + 1, -1);
  for (std::size_t i = 0; i < s.nodes.size(); ++i) pos[s.nodes[i]] = static_cast<int>(i);
  s.partner.resize(s.nodes.size());
  for (std::size_t i = 0; i < s.nodes.size(); ++i) s.partner[i] = pos[mate[s.nodes[i]]];
  return s;
}

Eigen::VectorXd restrict_to_support(std::span<const double> f, const Support& s) {
  if (f.size() != static_cast<std::size_t>(s.n * s.n))
    throw std::invalid_argument("restrict_to_support: length mismatch");
  Eigen::VectorXd fs(s.nodes.size());
  for (std::size_t i = 0; i < s.nodes.size(); ++i) fs[i] = f[s.nodes[i] - 1];
  return fs;
}

Eigen::VectorXd mirror(const Eigen::VectorXd& fs, const Support& s) {
  if (fs.size() != static_cast<Eigen::Index>(s.nodes.size()))
    throw std::invalid_argument("mirror: index mismatch");
  Eigen::VectorXd out(fs.size());
  for (Eigen::Index i = 0; i < fs.size(); ++i) out[i] = fs[s.partner[i]];
  return out;
}

double symmetry_ratio(const Eigen::VectorXd& fs, const Support& s) {
  const double e = fs.squaredNorm();
  if (!(e > 0.0)) throw std::domain_error("symmetry ratio of a zero-energy signal");
  return fs.dot(mirror(fs, s)) / e;
}

std::vector<SymmetryReport> eigenvector_symmetry_report(int n, int threads) {
  const auto axes = enumerate_reflection_axes(n);
  const auto& bases = SbgftLibrary::shared().bases(n);
  std::vector<SymmetryReport> out(axes.size());
  parallel_for(axes.size(), threads, [&](std::size_t a) {
    const auto sup = support_of(build_sbg(n, axes[a]), axes[a]);
    const auto U = bases[a]->eigenvectors();
    auto& rep = out[a];
    rep.axis = axes[a];
    rep.ratios.resize(n * n);
    double mn = std::numeric_limits<double>::infinity(), sum = 0.0;
    int cnt = 0;
    for (int j = 0; j < n * n; ++j) {
      const auto fs = restrict_to_support({U.col(j).data(), static_cast<std::size_t>(n * n)}, sup);
      if (fs.squaredNorm() <= 1e-24) {
        rep.ratios[j] = std::numeric_limits<double>::quiet_NaN();
        continue;
      }
      const double r = symmetry_ratio(fs, sup);
      rep.ratios[j] = r;
      mn = std::min(mn, std::abs(r));
      sum += std::abs(r);
      ++cnt;
    }
    rep.min_abs = cnt ? mn : std::numeric_limits<double>::quiet_NaN();
    rep.mean_abs = cnt ? sum / cnt : std::numeric_limits<double>::quiet_NaN();
  });
  return out;
}

SymmetryHistogram residual_symmetry_histogram(const std::vector<Eigen::MatrixXd>& blocks,
                                              int n, double threshold, int threads) {
  if (blocks.empty()) throw std::invalid_argument("residual_symmetry_histogram: no blocks");
  SymmetryHistogram h;
  h.n = n;
  h.threshold = threshold;
  h.blocks = blocks.size();
  h.axes = enumerate_reflection_axes(n);
  std::vector<Support> sup;
  for (const auto& ax : h.axes) sup.push_back(support_of(build_sbg(n, ax), ax));
  // hits[b] bit a: block b exceeds the threshold on axis a.
  std::vector<std::vector<char>> hits(blocks.size());
  parallel_for(blocks.size(), threads, [&](std::size_t b) {
    const auto& blk = blocks[b];
    if (blk.rows() != n || blk.cols() != n)
      throw std::invalid_argument("residual_symmetry_histogram: block size mismatch");
    hits[b].resize(h.axes.size());
    for (std::size_t a = 0; a < h.axes.size(); ++a) {
      const auto fs = restrict_to_support({blk.data(), static_cast<std::size_t>(n * n)}, sup[a]);
      const double r = fs.squaredNorm() > 0.0 ? symmetry_ratio(fs, sup[a]) : 1.0;
      hits[b][a] = r > threshold;
    }
  });
  h.per_axis.assign(h.axes.size(), 0.0);
  for (const auto& hb : hits) {
    bool any[4] = {false, false, false, false};
    for (std::size_t a = 0; a < h.axes.size(); ++a)
      if (hb[a]) {
        h.per_axis[a] += 1.0;
        any[static_cast<int>(h.axes[a].direction)] = true;
      }
    for (int d = 0; d < 4; ++d) h.any_axis[d] += any[d];
  }
  const double total = static_cast<double>(blocks.size());
  for (auto& v : h.per_axis) v /= total;
  for (double& v : h.any_axis) v /= total;
  return h;
}

}  // namespace sbgft

#include "sbgft/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include <Eigen/Eigenvalues>

#include "sbgft/parallel.hpp"

namespace sbgft {

const char* to_string(PairingKind k) {
  switch (k) {
    case PairingKind::LeftRight: return "LR";
    case PairingKind::UpDown: return "UD";
    case PairingKind::AntiTranspose: return "D";
    case PairingKind::Transpose: return "AD";
  }
  return "?";
}

SymmetryPairing make_pairing(PairingKind kind, int n) {
  SymmetryPairing p;
  p.kind = kind;
  p.n = n;
  p.image.resize(n * n);
  for (int y = 1; y <= n; ++y)
    for (int x = 1; x <= n; ++x) {
      GridPoint q{};
      switch (kind) {
        case PairingKind::LeftRight: q = {x, n + 1 - y}; break;
        case PairingKind::UpDown: q = {n + 1 - x, y}; break;
        case PairingKind::AntiTranspose: q = {n + 1 - y, n + 1 - x}; break;
        case PairingKind::Transpose: q = {y, x}; break;
      }
      const int id = node_id(n, x, y);
      p.image[id - 1] = node_id(n, q) - 1;
      if (node_id(n, q) == id) p.fixed_nodes.push_back(id);
    }
  std::sort(p.fixed_nodes.begin(), p.fixed_nodes.end());
  return p;
}

namespace {

PairingKind primary_kind(AxisDirection d) {
  switch (d) {
    case AxisDirection::H: return PairingKind::LeftRight;
    case AxisDirection::V: return PairingKind::UpDown;
    case AxisDirection::D: return PairingKind::AntiTranspose;
    case AxisDirection::AD: return PairingKind::Transpose;
  }
  return PairingKind::LeftRight;
}

PairingKind secondary_kind(AxisDirection d) {
  switch (d) {
    case AxisDirection::H: return PairingKind::UpDown;
    case AxisDirection::V: return PairingKind::LeftRight;
    case AxisDirection::D: return PairingKind::Transpose;
    case AxisDirection::AD: return PairingKind::AntiTranspose;
  }
  return PairingKind::UpDown;
}

}  // namespace

SymmetryPairing pairing_for_axis(const ReflectionAxis& axis) {
  validate_axis(axis);
  return make_pairing(primary_kind(axis.direction), axis.n);
}

std::optional<SymmetryPairing> secondary_pairing_for_axis(
    const ReflectionAxis& axis) {
  validate_axis(axis);
  if (!axis.is_main()) return std::nullopt;
  return make_pairing(secondary_kind(axis.direction), axis.n);
}

std::vector<SymmetryPairing> symmetry_generators(const ReflectionAxis& axis) {
  std::vector<SymmetryPairing> g{pairing_for_axis(axis)};
  if (auto s = secondary_pairing_for_axis(axis)) g.push_back(std::move(*s));
  return g;
}

bool is_automorphism(const GridGraph& g, const SymmetryPairing& p) {
  if (p.n != g.n()) return false;
  for (const auto& e : g.edges())
    if (!g.has_edge(p(e.u), p(e.v))) return false;
  return true;
}

SymmetricEigen eig_symmetric(const Eigen::MatrixXd& m) {
  if (m.rows() != m.cols())
    throw std::invalid_argument("eig_symmetric: matrix not square");
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale)
    throw std::invalid_argument("eig_symmetric: matrix not symmetric");
  SymmetricEigen out;
  if (m.rows() == 0) return out;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("eig_symmetric: solver did not converge");
  out.values = es.eigenvalues();
  out.vectors = es.eigenvectors();
  return out;
}

namespace {

// Orbits of the group generated by up to two commuting involutions. Group
// element e encodes g1^(e&1) g2^(e>>1).
struct OrbitTable {
  int nn = 0;
  int gens = 0;
  std::vector<std::vector<int>> members;  // 0-based node ids
  std::vector<std::vector<int>> elems;    // group element per member
  std::vector<std::vector<int>> stab;     // non-identity stabilizer elements
  std::vector<int> node_orbit, node_elem;
};

int apply_elem(const std::vector<SymmetryPairing>& p, int e, int i) {
  if (e & 1) i = p[0].image[i];
  if (e & 2) i = p[1].image[i];
  return i;
}

int character(int s1, int s2, int e) {
  int c = 1;
  if (e & 1) c *= s1;
  if (e & 2) c *= s2;
  return c;
}

OrbitTable make_orbits(int n, const std::vector<SymmetryPairing>& p) {
  if (p.empty() || p.size() > 2)
    throw std::invalid_argument("need one or two pairings");
  for (const auto& q : p)
    if (q.n != n) throw std::invalid_argument("pairing size mismatch");
  OrbitTable t;
  t.nn = n * n;
  t.gens = static_cast<int>(p.size());
  const int order = 1 << t.gens;
  if (t.gens == 2)
    for (int i = 0; i < t.nn; ++i)
      if (p[0].image[p[1].image[i]] != p[1].image[p[0].image[i]])
        throw std::invalid_argument("pairings do not commute");
  t.node_orbit.assign(t.nn, -1);
  t.node_elem.assign(t.nn, -1);
  for (int i = 0; i < t.nn; ++i) {
    if (t.node_orbit[i] >= 0) continue;
    const int r = static_cast<int>(t.members.size());
    t.members.emplace_back();
    t.elems.emplace_back();
    t.stab.emplace_back();
    for (int e = 0; e < order; ++e) {
      const int j = apply_elem(p, e, i);
      if (j == i && e != 0) t.stab[r].push_back(e);
      if (t.node_orbit[j] >= 0) continue;
      t.node_orbit[j] = r;
      t.node_elem[j] = e;
      t.members[r].push_back(j);
      t.elems[r].push_back(e);
    }
  }
  return t;
}

struct Character {
  int s1, s2;
};

std::vector<Character> characters(int gens) {
  if (gens == 1) return {{1, 0}, {-1, 0}};
  return {{1, 1}, {1, -1}, {-1, 1}, {-1, -1}};
}

// Orbits on which the character's basis vector does not vanish.
std::vector<int> admissible_orbits(const OrbitTable& t, Character ch) {
  std::vector<int> rows;
  for (int r = 0; r < static_cast<int>(t.members.size()); ++r) {
    bool ok = true;
    for (int e : t.stab[r])
      if (character(ch.s1, ch.s2, e) != 1) ok = false;
    if (ok) rows.push_back(r);
  }
  return rows;
}

void fill_fold(const OrbitTable& t, Character ch, const std::vector<int>& rows,
               FastPlan::Block& b) {
  b.parity = static_cast<std::int8_t>(ch.s1);
  b.parity2 = static_cast<std::int8_t>(ch.s2);
  b.offsets.assign(1, 0);
  for (int r : rows) {
    for (std::size_t m = 0; m < t.members[r].size(); ++m) {
      b.nodes.push_back(t.members[r][m]);
      b.signs.push_back(
          static_cast<std::int8_t>(character(ch.s1, ch.s2, t.elems[r][m])));
    }
    b.offsets.push_back(static_cast<int>(b.nodes.size()));
  }
}

// Reduced operator Q^T L Q for one character, from the sparse edge list.
Eigen::MatrixXd reduced_laplacian(const GridGraph& g, const OrbitTable& t,
                                  Character ch, const std::vector<int>& rows) {
  const int d = static_cast<int>(rows.size());
  std::vector<int> row_of(t.members.size(), -1);
  for (int i = 0; i < d; ++i) row_of[rows[i]] = i;
  std::vector<double> coef(t.nn, 0.0);
  for (int v = 0; v < t.nn; ++v) {
    const int r = t.node_orbit[v];
    if (row_of[r] < 0) continue;
    coef[v] = character(ch.s1, ch.s2, t.node_elem[v]) /
              std::sqrt(static_cast<double>(t.members[r].size()));
  }
  const auto deg = g.degrees();
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(d, d);
  for (int v = 0; v < t.nn; ++v) {
    if (coef[v] == 0.0) continue;
    const int rv = row_of[t.node_orbit[v]];
    M(rv, rv) += coef[v] * deg[v] * coef[v];
  }
  for (const auto& e : g.edges()) {
    const int u = e.u - 1, v = e.v - 1;
    if (coef[u] == 0.0 || coef[v] == 0.0) continue;
    const int ru = row_of[t.node_orbit[u]], rv = row_of[t.node_orbit[v]];
    M(ru, rv) -= coef[u] * coef[v];
    M(rv, ru) -= coef[u] * coef[v];
  }
  return 0.5 * (M + M.transpose());
}

// Dense entries of row i of block b, in node order.
Eigen::VectorXd block_vector(const FastPlan::Block& b, int i, int nn) {
  Eigen::VectorXd u = Eigen::VectorXd::Zero(nn);
  for (int r = 0; r + 1 < static_cast<int>(b.offsets.size()); ++r)
    for (int m = b.offsets[r]; m < b.offsets[r + 1]; ++m)
      u[b.nodes[m]] = b.signs[m] * b.W(i, r);
  return u;
}

// Reorders block rows by ascending output index.
void sort_block_rows(FastPlan::Block& b) {
  const int d = b.dim();
  std::vector<int> perm(d);
  std::iota(perm.begin(), perm.end(), 0);
  std::sort(perm.begin(), perm.end(),
            [&](int a, int c) { return b.out_index[a] < b.out_index[c]; });
  Eigen::MatrixXd W(d, d);
  std::vector<int> idx(d);
  for (int i = 0; i < d; ++i) {
    W.row(i) = b.W.row(perm[i]);
    idx[i] = b.out_index[perm[i]];
  }
  b.W = std::move(W);
  b.out_index = std::move(idx);
}

}  // namespace

FastPlan::FastPlan(int n, std::vector<Block> blocks)
    : n_(n), blocks_(std::move(blocks)) {
  int total = 0;
  for (const auto& b : blocks_) {
    mults_ += static_cast<long>(b.dim()) * b.dim();
    total += b.dim();
  }
  if (total != n_ * n_)
    throw std::invalid_argument("fast plan blocks do not cover the basis");
}

void FastPlan::forward(std::span<const double> f, std::span<double> c) const {
  if (f.size() != static_cast<std::size_t>(size()) || c.size() != f.size())
    throw std::invalid_argument("fast_forward: length mismatch");
  Eigen::VectorXd y, z;
  for (const auto& b : blocks_) {
    const int d = b.dim();
    y.resize(d);
    for (int r = 0; r < d; ++r) {
      double s = 0.0;
      for (int m = b.offsets[r]; m < b.offsets[r + 1]; ++m)
        s = b.signs[m] > 0 ? s + f[b.nodes[m]] : s - f[b.nodes[m]];
      y[r] = s;
    }
    z.noalias() = b.W * y;
    for (int i = 0; i < d; ++i) c[b.out_index[i]] = z[i];
  }
}

void FastPlan::inverse(std::span<const double> c, std::span<double> f) const {
  if (c.size() != static_cast<std::size_t>(size()) || f.size() != c.size())
    throw std::invalid_argument("fast_inverse: length mismatch");
  std::fill(f.begin(), f.end(), 0.0);
  Eigen::VectorXd y, z;
  for (const auto& b : blocks_) {
    const int d = b.dim();
    y.resize(d);
    for (int i = 0; i < d; ++i) y[i] = c[b.out_index[i]];
    z.noalias() = b.W.transpose() * y;
    for (int r = 0; r < d; ++r)
      for (int m = b.offsets[r]; m < b.offsets[r + 1]; ++m)
        f[b.nodes[m]] += b.signs[m] > 0 ? z[r] : -z[r];
  }
}

void FastPlan::forward_batch(const Eigen::MatrixXd& F, Eigen::MatrixXd& C) const {
  if (F.rows() != size())
    throw std::invalid_argument("forward_batch: row count mismatch");
  const Eigen::Index B = F.cols();
  C.resize(size(), B);
  Eigen::MatrixXd Y, Z;
  for (const auto& b : blocks_) {
    const int d = b.dim();
    Y.resize(d, B);
    for (Eigen::Index col = 0; col < B; ++col) {
      const double* fc = F.col(col).data();
      for (int r = 0; r < d; ++r) {
        double s = 0.0;
        for (int m = b.offsets[r]; m < b.offsets[r + 1]; ++m)
          s = b.signs[m] > 0 ? s + fc[b.nodes[m]] : s - fc[b.nodes[m]];
        Y(r, col) = s;
      }
    }
    Z.noalias() = b.W * Y;
    for (int i = 0; i < d; ++i) C.row(b.out_index[i]) = Z.row(i);
  }
}

Eigen::MatrixXd FastPlan::dense() const {
  Eigen::MatrixXd U = Eigen::MatrixXd::Zero(size(), size());
  for (const auto& b : blocks_)
    for (int r = 0; r < b.dim(); ++r)
      for (int m = b.offsets[r]; m < b.offsets[r + 1]; ++m)
        for (int i = 0; i < b.dim(); ++i)
          U(b.nodes[m], b.out_index[i]) = b.signs[m] * b.W(i, r);
  return U;
}

Eigen::VectorXd FastPlan::basis_vector(int j) const {
  for (const auto& b : blocks_)
    for (int i = 0; i < b.dim(); ++i)
      if (b.out_index[i] == j) return block_vector(b, i, size());
  throw std::out_of_range("basis index out of range");
}

GftBasis build_gft_basis(const GridGraph& g,
                         const std::vector<SymmetryPairing>& pairings) {
  for (const auto& p : pairings)
    if (!is_automorphism(g, p))
      throw std::invalid_argument(std::string("pairing ") + to_string(p.kind) +
                                  " is not an automorphism of " + g.label());
  const int n = g.n(), nn = n * n;
  const OrbitTable t = make_orbits(n, pairings);

  std::vector<FastPlan::Block> blocks;
  std::vector<Eigen::VectorXd> evals;
  for (Character ch : characters(t.gens)) {
    const auto rows = admissible_orbits(t, ch);
    if (rows.empty()) continue;
    FastPlan::Block b;
    fill_fold(t, ch, rows, b);
    auto es = eig_symmetric(reduced_laplacian(g, t, ch, rows));
    const int d = static_cast<int>(rows.size());
    b.W.resize(d, d);
    for (int r = 0; r < d; ++r) {
      const double s = 1.0 / std::sqrt(static_cast<double>(t.members[rows[r]].size()));
      for (int j = 0; j < d; ++j) b.W(j, r) = es.vectors(r, j) * s;
    }
    b.out_index.assign(d, -1);
    blocks.push_back(std::move(b));
    evals.push_back(std::move(es.values));
  }

  // Sign convention, then a dense copy of every vector for tie-breaking.
  struct Entry {
    double lambda;
    int block, row;
    int p1, p2;
  };
  std::vector<Entry> entries;
  std::vector<std::vector<Eigen::VectorXd>> vecs(blocks.size());
  for (std::size_t bi = 0; bi < blocks.size(); ++bi) {
    auto& b = blocks[bi];
    for (int i = 0; i < b.dim(); ++i) {
      Eigen::VectorXd u = block_vector(b, i, nn);
      for (int k = 0; k < nn; ++k)
        if (std::abs(u[k]) > 1e-12) {
          if (u[k] < 0) {
            b.W.row(i) *= -1.0;
            u = -u;
          }
          break;
        }
      vecs[bi].push_back(std::move(u));
      const double lam = std::abs(evals[bi][i]) < 1e-12 ? 0.0 : std::max(0.0, evals[bi][i]);
      entries.push_back({lam, static_cast<int>(bi), i,
                         b.parity, b.parity2});
    }
  }
  std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
    if (a.lambda != b.lambda) return a.lambda < b.lambda;
    if (a.block != b.block) return a.block < b.block;
    return a.row < b.row;
  });
  auto tie_less = [&](const Entry& a, const Entry& b) {
    if (a.p1 != b.p1) return a.p1 > b.p1;
    if (a.p2 != b.p2) return a.p2 > b.p2;
    const auto& u = vecs[a.block][a.row];
    const auto& v = vecs[b.block][b.row];
    for (int k = 0; k < nn; ++k)
      if (std::abs(u[k] - v[k]) > 1e-12) return u[k] > v[k];
    if (a.block != b.block) return a.block < b.block;
    return a.row < b.row;
  };
  for (std::size_t s = 0; s < entries.size();) {
    std::size_t e = s + 1;
    while (e < entries.size() && entries[e].lambda - entries[e - 1].lambda <= 1e-9)
      ++e;
    if (e - s > 1) std::sort(entries.begin() + s, entries.begin() + e, tie_less);
    s = e;
  }

  GftBasis basis;
  basis.n = n;
  basis.label = g.label();
  basis.pairings = pairings;
  basis.eigenvalues.resize(nn);
  basis.parity.resize(nn);
  basis.parity2.resize(nn);
  for (int j = 0; j < nn; ++j) {
    const auto& en = entries[j];
    blocks[en.block].out_index[en.row] = j;
    basis.eigenvalues[j] = en.lambda;
    basis.parity[j] = static_cast<std::int8_t>(en.p1);
    basis.parity2[j] = static_cast<std::int8_t>(en.p2);
  }
  for (auto& b : blocks) sort_block_rows(b);
  basis.plan = std::make_shared<FastPlan>(n, std::move(blocks));
  return basis;
}

GftBasis build_gft_basis(const GridGraph& g, const SymmetryPairing& pairing) {
  return build_gft_basis(g, std::vector<SymmetryPairing>{pairing});
}

GftBasis build_sbg_basis(const ReflectionAxis& axis) {
  return build_gft_basis(build_sbg(axis.n, axis), symmetry_generators(axis));
}

FastPlan plan_from_dense(const Eigen::MatrixXd& U,
                         const std::vector<SymmetryPairing>& pairings) {
  const int nn = static_cast<int>(U.rows());
  const int n = static_cast<int>(std::lround(std::sqrt(nn)));
  if (n * n != nn || U.cols() != nn)
    throw std::invalid_argument("plan_from_dense: bad matrix shape");
  const OrbitTable t = make_orbits(n, pairings);
  auto sign_under = [&](int j, const SymmetryPairing& p) {
    double s = 0.0;
    for (int i = 0; i < nn; ++i) s += U(p.image[i], j) * U(i, j);
    return s >= 0 ? 1 : -1;
  };
  std::vector<FastPlan::Block> blocks;
  for (Character ch : characters(t.gens)) {
    const auto rows = admissible_orbits(t, ch);
    if (rows.empty()) continue;
    FastPlan::Block b;
    fill_fold(t, ch, rows, b);
    for (int j = 0; j < nn; ++j) {
      if (sign_under(j, pairings[0]) != ch.s1) continue;
      if (t.gens == 2 && sign_under(j, pairings[1]) != ch.s2) continue;
      b.out_index.push_back(j);
    }
    const int d = static_cast<int>(rows.size());
    if (static_cast<int>(b.out_index.size()) != d)
      throw std::runtime_error("plan_from_dense: basis parity does not match pairings");
    b.W.resize(d, d);
    for (int i = 0; i < d; ++i)
      for (int r = 0; r < d; ++r) b.W(i, r) = U(t.members[rows[r]][0], b.out_index[i]);
    blocks.push_back(std::move(b));
  }
  return FastPlan(n, std::move(blocks));
}

const FastPlan& make_fast_plan(const GftBasis& basis) { return *basis.plan; }

void fast_forward(const FastPlan& plan, std::span<const double> f,
                  std::span<double> c) {
  plan.forward(f, c);
}

void fast_inverse(const FastPlan& plan, std::span<const double> c,
                  std::span<double> f) {
  plan.inverse(c, f);
}

Eigen::VectorXd gft_forward(const Eigen::MatrixXd& U, const Eigen::VectorXd& f) {
  if (f.size() != U.rows())
    throw std::invalid_argument("gft_forward: length mismatch");
  return U.transpose() * f;
}

Eigen::VectorXd gft_inverse(const Eigen::MatrixXd& U, const Eigen::VectorXd& c) {
  if (c.size() != U.cols())
    throw std::invalid_argument("gft_inverse: length mismatch");
  return U * c;
}

Eigen::VectorXd gft_forward(const GftBasis& basis, const Eigen::VectorXd& f) {
  return gft_forward(basis.eigenvectors(), f);
}

Eigen::VectorXd gft_inverse(const GftBasis& basis, const Eigen::VectorXd& c) {
  return gft_inverse(basis.eigenvectors(), c);
}

const std::vector<std::shared_ptr<const GftBasis>>& SbgftLibrary::bases(int n) {
  std::lock_guard<std::mutex> lk(mu_);
  auto it = cache_.find(n);
  if (it != cache_.end()) return *it->second;
  const auto axes = enumerate_reflection_axes(n);
  auto out = std::make_shared<std::vector<std::shared_ptr<const GftBasis>>>(axes.size());
  parallel_for(axes.size(), threads_, [&](std::size_t i) {
    (*out)[i] = std::make_shared<const GftBasis>(build_sbg_basis(axes[i]));
  });
  return *cache_.emplace(n, std::move(out)).first->second;
}

SbgftLibrary& SbgftLibrary::shared() {
  static SbgftLibrary lib(1);
  return lib;
}

}  // namespace sbgft

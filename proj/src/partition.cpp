#include "sbgft/partition.hpp"

#include <bit>
#include <cstring>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "sbgft/binio.hpp"
#include "sbgft/block_codec.hpp"
#include "sbgft/parallel.hpp"

namespace sbgft {

// ---------------------------------------------------------------------------
// Intra prediction

namespace {

// Angular modes 2..9 as (horizontal family?, projection angle in 1/32 pel).
struct Angular {
  bool horizontal;
  int angle;
};
constexpr Angular kAngular[8] = {{true, 32},   {true, 13},  {true, 0},  {true, -13},
                                 {false, -32}, {false, -13}, {false, 0}, {false, 13}};

int inverse_angle(int angle) { return angle == -32 ? -256 : -630; }

int log2_int(int n) { return std::countr_zero(static_cast<unsigned>(n)); }

// ref[k] for k in [-n, 2n]; stored at offset n.
Eigen::MatrixXd angular(const std::vector<int>& main, const std::vector<int>& side, int n,
                        int angle, bool transpose) {
  std::vector<int> ref(3 * n + 1);
  auto R = [&](int k) -> int& { return ref[static_cast<std::size_t>(k + n)]; };
  for (int k = 0; k <= 2 * n; ++k) R(k) = main[static_cast<std::size_t>(k)];
  if (angle < 0) {
    const int last = (n * angle) >> 5;
    const int inv = inverse_angle(angle);
    for (int k = last; k < 0; ++k) R(k) = side[static_cast<std::size_t>((k * inv + 128) >> 8)];
  }
  Eigen::MatrixXd p(n, n);
  for (int i = 0; i < n; ++i) {
    const int idx = ((i + 1) * angle) >> 5;
    const int frac = ((i + 1) * angle) & 31;
    for (int j = 0; j < n; ++j) {
      const int a = R(j + idx + 1);
      const int v = frac ? ((32 - frac) * a + frac * R(j + idx + 2) + 16) >> 5 : a;
      if (transpose)
        p(j, i) = v;
      else
        p(i, j) = v;
    }
  }
  return p;
}

}  // namespace

ReferenceSamples gather_references(const GrayImage& src, int row, int col, int n) {
  ReferenceSamples r;
  r.n = n;
  r.top.resize(2 * n + 1);
  r.left.resize(2 * n + 1);
  auto sample = [&](int y, int x) -> int {
    if (y < 0 || x < 0 || y >= src.height || x >= src.width) return 128;
    return src.at(y, x);
  };
  r.top[0] = r.left[0] = sample(row - 1, col - 1);
  for (int k = 0; k < 2 * n; ++k) {
    r.top[k + 1] = sample(row - 1, col + k);
    r.left[k + 1] = sample(row + k, col - 1);
  }
  return r;
}

Eigen::MatrixXd predict(const ReferenceSamples& refs, int mode) {
  const int n = refs.n;
  if (n < 1 || (n & (n - 1)) || refs.top.size() != static_cast<std::size_t>(2 * n + 1) ||
      refs.left.size() != refs.top.size())
    throw std::invalid_argument("predict: malformed reference samples");
  if (mode < 0 || mode >= kPredictionModes) throw std::out_of_range("predict: unknown mode");
  const int shift = log2_int(n) + 1;
  Eigen::MatrixXd p(n, n);
  if (mode == kModePlanar) {
    const int tr = refs.top[n + 1], bl = refs.left[n + 1];
    for (int r = 0; r < n; ++r)
      for (int c = 0; c < n; ++c)
        p(r, c) = ((n - 1 - c) * refs.left[r + 1] + (c + 1) * tr + (n - 1 - r) * refs.top[c + 1] +
                   (r + 1) * bl + n) >>
                  shift;
    return p;
  }
  if (mode == kModeDC) {
    int sum = n;
    for (int k = 1; k <= n; ++k) sum += refs.top[k] + refs.left[k];
    p.setConstant(sum >> shift);
    return p;
  }
  const Angular a = kAngular[mode - 2];
  return a.horizontal ? angular(refs.left, refs.top, n, a.angle, true)
                      : angular(refs.top, refs.left, n, a.angle, false);
}

int best_prediction_mode(const Eigen::MatrixXd& block, const ReferenceSamples& refs,
                         Eigen::MatrixXd* prediction) {
  int best = -1;
  double best_sad = 0;
  for (int m = 0; m < kPredictionModes; ++m) {
    Eigen::MatrixXd p = predict(refs, m);
    const double sad = (block - p).cwiseAbs().sum();
    if (best < 0 || sad < best_sad) {
      best = m;
      best_sad = sad;
      if (prediction) *prediction = std::move(p);
    }
  }
  return best;
}

// ---------------------------------------------------------------------------
// Quad-tree

QuadTree::QuadTree(int row, int col, int size, int min_size) : min_size_(min_size) {
  if (size < min_size || min_size < 1 || (size & (size - 1)) || (min_size & (min_size - 1)))
    throw std::invalid_argument("quad-tree sizes must be powers of two above the minimum");
  QuadNode n;
  n.row = row;
  n.col = col;
  n.size = size;
  nodes_.push_back(n);
}

int QuadTree::split(int node) {
  QuadNode& p = nodes_.at(static_cast<std::size_t>(node));
  if (p.split) throw std::logic_error("quad-tree node already split");
  if (p.size / 2 < min_size_) throw std::invalid_argument("quad-tree node at minimum size");
  const int h = p.size / 2, r = p.row, c = p.col;
  const int first = static_cast<int>(nodes_.size());
  nodes_[static_cast<std::size_t>(node)].split = true;
  for (int k = 0; k < 4; ++k) {
    QuadNode ch;
    ch.row = r + (k / 2) * h;
    ch.col = c + (k % 2) * h;
    ch.size = h;
    nodes_[static_cast<std::size_t>(node)].child[static_cast<std::size_t>(k)] = first + k;
    nodes_.push_back(ch);
  }
  return first;
}

std::vector<Leaf> QuadTree::leaves() const {
  std::vector<Leaf> out;
  std::vector<int> stack{0};
  while (!stack.empty()) {
    const QuadNode& n = nodes_[static_cast<std::size_t>(stack.back())];
    stack.pop_back();
    if (!n.split) {
      out.push_back({n.row, n.col, n.size});
      continue;
    }
    for (int k = 3; k >= 0; --k) stack.push_back(n.child[static_cast<std::size_t>(k)]);
  }
  return out;
}

std::size_t QuadTree::leaf_count() const {
  std::size_t k = 0;
  for (const auto& n : nodes_) k += !n.split;
  return k;
}

int QuadTree::split_flag_bits() const {
  int bits = 0;
  for (const auto& n : nodes_) bits += n.size > min_size_;
  return bits;
}

std::vector<bool> QuadTree::split_flags() const {
  std::vector<bool> flags;
  std::vector<int> stack{0};
  while (!stack.empty()) {
    const QuadNode& n = nodes_[static_cast<std::size_t>(stack.back())];
    stack.pop_back();
    if (n.size > min_size_) flags.push_back(n.split);
    if (n.split)
      for (int k = 3; k >= 0; --k) stack.push_back(n.child[static_cast<std::size_t>(k)]);
  }
  return flags;
}

QuadTree QuadTree::from_flags(int row, int col, int size, const std::vector<bool>& flags,
                              std::size_t& pos, int min_size) {
  QuadTree t(row, col, size, min_size);
  std::vector<int> stack{0};
  while (!stack.empty()) {
    const int id = stack.back();
    stack.pop_back();
    if (t.nodes_[static_cast<std::size_t>(id)].size <= min_size) continue;
    if (pos >= flags.size()) throw FormatError(FormatError::Kind::Truncated, "split flags truncated");
    if (!flags[pos++]) continue;
    const int first = t.split(id);
    for (int k = 3; k >= 0; --k) stack.push_back(first + k);
  }
  return t;
}

namespace {

struct Decision {
  bool split = false;
  double cost = 0.0;
};

// Keyed by (size, row, col); sizes visited bottom-up through the recursion.
using DecisionMap = std::map<std::array<int, 3>, Decision>;

double solve_node(int row, int col, int size, double lambda, const NodeCostFn& leaf_cost,
                  int min_size, DecisionMap& out) {
  const double flag = size > min_size ? lambda : 0.0;
  Decision d{false, leaf_cost(row, col, size) + flag};
  if (size > min_size) {
    const int h = size / 2;
    double children = flag;
    for (int k = 0; k < 4; ++k)
      children += solve_node(row + (k / 2) * h, col + (k % 2) * h, h, lambda, leaf_cost, min_size, out);
    if (children < d.cost) d = {true, children};
  }
  out[{size, row, col}] = d;
  return d.cost;
}

}  // namespace

QuadTree optimize_partition(int row, int col, int size, double lambda, const NodeCostFn& leaf_cost,
                            int min_size) {
  QuadTree tree(row, col, size, min_size);
  DecisionMap dec;
  solve_node(row, col, size, lambda, leaf_cost, min_size, dec);
  for (std::size_t i = 0; i < tree.nodes().size(); ++i) {
    const QuadNode n = tree.nodes()[i];
    const Decision& d = dec.at({n.size, n.row, n.col});
    tree.set_cost(static_cast<int>(i), d.cost);
    if (d.split) tree.split(static_cast<int>(i));
  }
  return tree;
}

BankSet driver_banks(SignalDomain domain) {
  BankSet b;
  for (int n = kMinBlockSize; n <= kMacroblockSize; n *= 2)
    b.emplace(n, domain == SignalDomain::Residual && n <= kMaxMultiTransformSize ? build_mts5_bank(n)
                                                                                 : build_dct_bank(n));
  return b;
}

namespace {

struct NodeSignal {
  int pm = -1;
  Eigen::MatrixXd prediction, signal;
};

// Evaluates every candidate node of a macroblock, one batch per size.
template <class SignalFn>
MacroblockPartition partition_impl(int row, int col, int size, int qp, bool residual,
                                   const BankSet& driver, SignalFn&& signal_of) {
  const RdotOptions opt = rdot_options(qp);
  std::map<int, std::vector<NodeSignal>> signals;
  std::map<int, std::vector<double>> costs;
  for (int s = size; s >= kMinBlockSize; s /= 2) {
    const auto it = driver.find(s);
    if (it == driver.end()) throw std::invalid_argument("partition driver lacks block size " + std::to_string(s));
    const TransformBank& bank = it->second;
    const int per = size / s, count = per * per;
    auto& sig = signals[s];
    sig.resize(static_cast<std::size_t>(count));
    Eigen::MatrixXd F(s * s, count);
    for (int i = 0; i < count; ++i) {
      sig[static_cast<std::size_t>(i)] = signal_of(row + (i / per) * s, col + (i % per) * s, s);
      F.col(i) = Eigen::Map<const Eigen::VectorXd>(sig[static_cast<std::size_t>(i)].signal.data(), s * s);
    }
    std::vector<int> all(bank.size());
    for (std::size_t t = 0; t < all.size(); ++t) all[t] = static_cast<int>(t);
    const auto coded = rdot_select_batch(F, bank, all, opt);
    auto& c = costs[s];
    c.resize(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i)
      c[static_cast<std::size_t>(i)] = coded[static_cast<std::size_t>(i)].cost + (residual ? opt.lambda * kModeBits : 0.0);
  }
  auto slot = [&](int r, int c, int s) {
    const int per = size / s;
    return static_cast<std::size_t>(((r - row) / s) * per + (c - col) / s);
  };
  MacroblockPartition mp;
  mp.tree = optimize_partition(row, col, size, opt.lambda,
                               [&](int r, int c, int s) { return costs[s][slot(r, c, s)]; });
  for (const Leaf& l : mp.tree.leaves()) {
    NodeSignal& ns = signals[l.size][slot(l.row, l.col, l.size)];
    mp.leaves.push_back({l, ns.pm, std::move(ns.prediction), std::move(ns.signal)});
  }
  return mp;
}

}  // namespace

QuadTree optimize_partition(const Eigen::MatrixXd& mb, int qp, const BankSet& driver) {
  if (mb.rows() != kMacroblockSize || mb.cols() != kMacroblockSize)
    throw std::invalid_argument("macroblock must be 64 x 64");
  return partition_impl(0, 0, kMacroblockSize, qp, false, driver, [&](int r, int c, int s) {
           return NodeSignal{-1, Eigen::MatrixXd::Zero(s, s), mb.block(r, c, s, s)};
         })
      .tree;
}

MacroblockPartition partition_macroblock(const GrayImage& img, int row, int col, int qp,
                                         SignalDomain domain, const BankSet& driver) {
  if (row < 0 || col < 0 || row + kMacroblockSize > img.height || col + kMacroblockSize > img.width)
    throw std::invalid_argument("macroblock outside the image");
  const bool residual = domain == SignalDomain::Residual;
  return partition_impl(row, col, kMacroblockSize, qp, residual, driver, [&](int r, int c, int s) {
    NodeSignal ns;
    Eigen::MatrixXd orig = img.block(r, c, s);
    if (!residual) {
      ns.prediction = Eigen::MatrixXd::Zero(s, s);
      ns.signal = std::move(orig);
      return ns;
    }
    ns.pm = best_prediction_mode(orig, gather_references(img, r, c, s), &ns.prediction);
    ns.signal = orig - ns.prediction;
    return ns;
  });
}

// ---------------------------------------------------------------------------
// Residual dataset

Eigen::MatrixXd ResidualRecord::block() const {
  if (residual.size() != static_cast<std::size_t>(size) * size)
    throw std::invalid_argument("residual record has the wrong sample count");
  Eigen::MatrixXd b(size, size);
  for (int r = 0; r < size; ++r)
    for (int c = 0; c < size; ++c) b(r, c) = residual[static_cast<std::size_t>(r) * size + c];
  return b;
}

std::vector<ResidualRecord> generate_residual_dataset(const std::vector<GrayImage>& images, int qp,
                                                      int threads) {
  if (images.empty()) throw std::invalid_argument("residual dataset needs at least one image");
  QuantizerSpec::from_qp(qp);
  const BankSet driver = driver_banks(SignalDomain::Residual);
  struct Job {
    std::size_t image;
    int row, col;
  };
  std::vector<GrayImage> cropped;
  std::vector<Job> jobs;
  for (std::size_t i = 0; i < images.size(); ++i) {
    cropped.push_back(crop_to_multiple(images[i], kMacroblockSize));
    for (int r = 0; r < cropped[i].height; r += kMacroblockSize)
      for (int c = 0; c < cropped[i].width; c += kMacroblockSize) jobs.push_back({i, r, c});
  }
  std::vector<std::vector<ResidualRecord>> per(jobs.size());
  parallel_for(jobs.size(), threads, [&](std::size_t j) {
    const auto mp = partition_macroblock(cropped[jobs[j].image], jobs[j].row, jobs[j].col, qp,
                                         SignalDomain::Residual, driver);
    for (const auto& l : mp.leaves) {
      ResidualRecord rec;
      rec.size = l.leaf.size;
      rec.pm = l.pm;
      rec.qp = qp;
      rec.residual.resize(static_cast<std::size_t>(rec.size) * rec.size);
      for (int r = 0; r < rec.size; ++r)
        for (int c = 0; c < rec.size; ++c)
          rec.residual[static_cast<std::size_t>(r) * rec.size + c] =
              static_cast<std::int16_t>(std::lround(l.signal(r, c)));
      per[j].push_back(std::move(rec));
    }
  });
  std::vector<ResidualRecord> out;
  for (auto& v : per)
    for (auto& r : v) out.push_back(std::move(r));
  return out;
}

namespace {
constexpr char kResidualMagic[4] = {'S', 'B', 'R', 'D'};
constexpr std::uint16_t kResidualVersion = 1;
}  // namespace

std::vector<std::uint8_t> serialize_residuals(const std::vector<ResidualRecord>& records) {
  ByteWriter w;
  w.bytes(kResidualMagic, 4);
  w.u16(kResidualVersion);
  w.u32(static_cast<std::uint32_t>(records.size()));
  for (const auto& r : records) {
    if (r.residual.size() != static_cast<std::size_t>(r.size) * r.size || r.pm < 0 || r.pm > 255 ||
        r.qp < 0 || r.qp > 255)
      throw std::invalid_argument("malformed residual record");
    w.u16(static_cast<std::uint16_t>(r.size));
    w.u8(static_cast<std::uint8_t>(r.pm));
    w.u8(static_cast<std::uint8_t>(r.qp));
    for (auto v : r.residual) w.i16(v);
  }
  return std::move(w.data());
}

std::vector<ResidualRecord> deserialize_residuals(const std::vector<std::uint8_t>& bytes) {
  ByteReader rd(bytes);
  char magic[4];
  rd.bytes(magic, 4);
  if (std::memcmp(magic, kResidualMagic, 4) != 0)
    throw FormatError(FormatError::Kind::Magic, "not a residual dataset (SBRD)");
  if (rd.u16() != kResidualVersion)
    throw FormatError(FormatError::Kind::Version, "unsupported residual dataset version");
  const std::uint32_t count = rd.u32();
  std::vector<ResidualRecord> out;
  for (std::uint32_t i = 0; i < count; ++i) {
    ResidualRecord r;
    r.size = rd.u16();
    r.pm = rd.u8();
    r.qp = rd.u8();
    if (r.size < kMinBlockSize || r.size > kMacroblockSize || (r.size & (r.size - 1)))
      throw FormatError(FormatError::Kind::Invalid, "residual record with invalid block size");
    if (r.pm >= kPredictionModes) throw FormatError(FormatError::Kind::Invalid, "residual record with invalid mode");
    r.residual.resize(static_cast<std::size_t>(r.size) * r.size);
    for (auto& v : r.residual) v = rd.i16();
    out.push_back(std::move(r));
  }
  if (rd.remaining() != 0) throw FormatError(FormatError::Kind::Invalid, "trailing bytes after residual dataset");
  return out;
}

void save_residuals(const std::vector<ResidualRecord>& records, const std::string& path) {
  write_file_bytes(path, serialize_residuals(records));
}

std::vector<ResidualRecord> load_residuals(const std::string& path) {
  return deserialize_residuals(read_file_bytes(path));
}

}  // namespace sbgft

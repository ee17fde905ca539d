#include <cmath>
#include <cstdio>
#include <filesystem>
#include <random>

#include "doctest.h"
#include "sbgft/binio.hpp"
#include "sbgft/block_codec.hpp"
#include "sbgft/image_io.hpp"
#include "sbgft/partition.hpp"

using namespace sbgft;

namespace {

// Every tree on a 16 x 16 root with 4 x 4 minimum: the root leaf, or a split
// whose four children are each an 8 x 8 leaf or four 4 x 4 leaves.
double exhaustive_best(double lambda, const NodeCostFn& cost) {
  double best = cost(0, 0, 16) + lambda;
  for (int mask = 0; mask < 16; ++mask) {
    double total = lambda;  // root flag
    for (int k = 0; k < 4; ++k) {
      const int r = (k / 2) * 8, c = (k % 2) * 8;
      total += lambda;  // 8 x 8 flag
      if (mask & (1 << k)) {
        for (int q = 0; q < 4; ++q) total += cost(r + (q / 2) * 4, c + (q % 2) * 4, 4);
      } else {
        total += cost(r, c, 8);
      }
    }
    best = std::min(best, total);
  }
  return best;
}

double tree_cost(const QuadTree& t, double lambda, const NodeCostFn& cost) {
  double total = lambda * t.split_flag_bits();
  for (const auto& l : t.leaves()) total += cost(l.row, l.col, l.size);
  return total;
}

GrayImage synthetic(int w, int h, auto fn) {
  GrayImage img(w, h);
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c) img.at(r, c) = static_cast<std::uint8_t>(fn(r, c));
  return img;
}

}  // namespace

TEST_CASE("predictor examples") {
  ReferenceSamples refs;
  refs.n = 8;
  refs.top.assign(17, 100);
  refs.left.assign(17, 100);
  for (int m = 0; m < kPredictionModes; ++m) CHECK(predict(refs, m).isConstant(100.0));
  CHECK(predict(refs, kModeDC).isConstant(100.0));
  for (int k = 1; k <= 16; ++k) refs.top[k] = 10 * k;
  const auto v = predict(refs, kModeVertical);
  for (int r = 0; r < 8; ++r)
    for (int c = 0; c < 8; ++c) CHECK(v(r, c) == refs.top[c + 1]);
  for (int k = 1; k <= 16; ++k) refs.left[k] = 3 * k;
  const auto h = predict(refs, kModeHorizontal);
  for (int r = 0; r < 8; ++r)
    for (int c = 0; c < 8; ++c) CHECK(h(r, c) == refs.left[r + 1]);
  // The 45 degree modes copy diagonals exactly.
  const auto dl = predict(refs, 2);
  CHECK(dl(0, 0) == refs.left[2]);
  CHECK(dl(3, 4) == refs.left[3 + 4 + 2]);
  const auto diag = predict(refs, 6);
  CHECK(diag(0, 0) == refs.top[0]);
  CHECK(diag(2, 5) == refs.top[5 - 2]);
  CHECK(diag(5, 2) == refs.left[5 - 2]);
  CHECK_THROWS_AS(predict(refs, 10), std::out_of_range);

  // Gathering near the border pads with mid-gray.
  const GrayImage img(64, 64, 7);
  const auto g = gather_references(img, 0, 0, 4);
  CHECK(g.top[0] == 128);
  CHECK(g.top[3] == 128);
  CHECK(g.left[2] == 128);
  const auto inner = gather_references(img, 8, 60, 4);
  CHECK(inner.top[4] == 7);
  CHECK(inner.top[5] == 128);  // column 64 is past the right edge
  CHECK(inner.left[8] == 7);
}

TEST_CASE("quad-tree flattening") {
  QuadTree t(0, 0, 64);
  CHECK(t.leaves().size() == 1);
  CHECK(t.split_flag_bits() == 1);
  const int first = t.split(0);
  auto leaves = t.leaves();
  REQUIRE(leaves.size() == 4);
  CHECK(leaves[1] == Leaf{0, 32, 32});
  CHECK(leaves[2] == Leaf{32, 0, 32});
  t.split(first + 1);
  t.split(first + 4 + 2);  // a 16 x 16 child
  int area = 0;
  for (const auto& l : t.leaves()) area += l.size * l.size;
  CHECK(area == 4096);
  CHECK(t.leaves()[1] == Leaf{0, 32, 16});
  std::size_t pos = 0;
  const auto flags = t.split_flags();
  const auto back = QuadTree::from_flags(0, 0, 64, flags, pos);
  CHECK(pos == flags.size());
  CHECK(back.leaves() == t.leaves());
  CHECK(back.split_flag_bits() == t.split_flag_bits());
  QuadTree m(0, 0, 4);
  CHECK_THROWS_AS(m.split(0), std::invalid_argument);
  CHECK_THROWS_AS(QuadTree(0, 0, 48), std::invalid_argument);
}

TEST_CASE("partition DP equals exhaustive search on 16x16") {
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> u(0, 100);
  for (int trial = 0; trial < 200; ++trial) {
    std::map<std::array<int, 3>, double> table;
    const NodeCostFn cost = [&](int r, int c, int s) {
      auto it = table.find({r, c, s});
      if (it == table.end()) it = table.emplace(std::array<int, 3>{r, c, s}, u(rng) * s / 4).first;
      return it->second;
    };
    const double lambda = u(rng) / 10;
    const auto t = optimize_partition(0, 0, 16, lambda, cost);
    CHECK(t.root().cost == doctest::Approx(exhaustive_best(lambda, cost)).epsilon(1e-12));
    CHECK(tree_cost(t, lambda, cost) == doctest::Approx(t.root().cost).epsilon(1e-12));
  }
  // Real driver costs on a textured 16 x 16 block.
  const auto bank4 = build_dct_bank(4), bank8 = build_dct_bank(8), bank16 = build_dct_bank(16);
  std::normal_distribution<double> nd(0, 25);
  Eigen::MatrixXd blk(16, 16);
  for (int r = 0; r < 16; ++r)
    for (int c = 0; c < 16; ++c) blk(r, c) = (r < 8 && c < 8 ? 30 : 120) + (r >= 8 ? nd(rng) : 0);
  for (int qp : {22, 32, 42}) {
    const auto opt = rdot_options(qp);
    const NodeCostFn cost = [&](int r, int c, int s) {
      const auto& b = s == 4 ? bank4 : s == 8 ? bank8 : bank16;
      return rdot_select(blk.block(r, c, s, s), b, opt).cost;
    };
    const auto t = optimize_partition(0, 0, 16, opt.lambda, cost);
    CHECK(t.root().cost == doctest::Approx(exhaustive_best(opt.lambda, cost)).epsilon(1e-12));
  }
}

TEST_CASE("partition examples") {
  const auto driver = driver_banks(SignalDomain::Pixel);
  const Eigen::MatrixXd flat = Eigen::MatrixXd::Constant(64, 64, 77);
  CHECK(optimize_partition(flat, 30, driver).leaves().size() == 1);

  Eigen::MatrixXd quad(64, 64);
  const double level[4] = {40, 90, 160, 220};
  for (int r = 0; r < 64; ++r)
    for (int c = 0; c < 64; ++c) quad(r, c) = level[(r / 32) * 2 + c / 32];
  const auto t = optimize_partition(quad, 30, driver);
  const auto leaves = t.leaves();
  CHECK(leaves.size() == 4);
  for (const auto& l : leaves) CHECK(l.size == 32);

  // Rate-dominated limit.
  std::mt19937 rng(2);
  std::normal_distribution<double> nd(128, 40);
  Eigen::MatrixXd noisy = Eigen::MatrixXd::NullaryExpr(64, 64, [&] { return nd(rng); });
  const auto inf = optimize_partition(0, 0, 64, std::numeric_limits<double>::infinity(),
                                      [&](int, int, int) { return std::numeric_limits<double>::infinity(); });
  CHECK(inf.leaves().size() == 1);
  CHECK(optimize_partition(0, 0, 64, 1e12, [&](int r, int c, int s) {
          return rdot_select(noisy.block(r, c, s, s), driver.at(s), rdot_options(30)).distortion +
                 1e12 * (s < 64 ? 1.0 : 0.0);
        }).leaves().size() == 1);
  CHECK_THROWS_AS(optimize_partition(Eigen::MatrixXd::Zero(32, 32), 30, driver), std::invalid_argument);
}

TEST_CASE("residual dataset examples") {
  const GrayImage flat(128, 128, 90);
  auto ds = generate_residual_dataset({flat}, 30, 2);
  std::size_t leaves = 0;
  const auto driver = driver_banks(SignalDomain::Residual);
  for (int r = 0; r < 128; r += 64)
    for (int c = 0; c < 128; c += 64)
      leaves += partition_macroblock(flat, r, c, 30, SignalDomain::Residual, driver).leaves.size();
  CHECK(ds.size() == leaves);
  for (const auto& r : ds) CHECK(r.qp == 30);
  // Away from the padded border a flat image is predicted exactly and the
  // lowest mode id wins the tie.
  const GrayImage big(192, 192, 90);
  const auto inner = partition_macroblock(big, 64, 64, 30, SignalDomain::Residual, driver);
  REQUIRE(inner.leaves.size() == 1);
  CHECK(inner.leaves[0].pm == kModePlanar);
  CHECK(inner.leaves[0].signal.cwiseAbs().maxCoeff() == 0.0);
  // With the top-right references padded, Planar is off and DC is the
  // lowest exact mode.
  const auto corner = partition_macroblock(flat, 64, 64, 30, SignalDomain::Residual, driver);
  REQUIRE(corner.leaves.size() == 1);
  CHECK(corner.leaves[0].pm == kModeDC);
  CHECK(corner.leaves[0].signal.cwiseAbs().maxCoeff() == 0.0);
  const auto g = synthetic(128, 128, [](int, int c) { return 40 + 25 * (c % 7) + (c % 3) * 10; });
  ds = generate_residual_dataset({g}, 27, 1);
  std::map<int, int> census;
  for (const auto& r : ds) census[r.pm] += r.size * r.size;
  int best = -1, area = 0;
  for (auto [pm, a] : census)
    if (a > area) best = pm, area = a;
  CHECK(best == kModeVertical);
  CHECK_THROWS_AS(generate_residual_dataset({}, 30), std::invalid_argument);

  const auto is = synthetic(64, 70, [](int r, int c) { return (r * 7 + c * 3) % 256; });
  ds = generate_residual_dataset({is}, 35, 1);  // cropped to 64 x 64
  int total = 0;
  for (const auto& r : ds) total += r.size * r.size;
  CHECK(total == 4096);
  const auto bytes = serialize_residuals(ds);
  CHECK(deserialize_residuals(bytes) == ds);
  CHECK(ds[0].block()(0, 1) == ds[0].residual[1]);
  auto bad = bytes;
  bad[0] = 'X';
  CHECK_THROWS_AS(deserialize_residuals(bad), FormatError);
  bad = bytes;
  bad.resize(bytes.size() - 3);
  CHECK_THROWS_AS(deserialize_residuals(bad), FormatError);
}

TEST_CASE("PGM round trip") {
  std::mt19937 rng(4);
  GrayImage img(37, 21);
  for (auto& p : img.pixels) p = static_cast<std::uint8_t>(rng());
  const auto path = (std::filesystem::temp_directory_path() / "sbgft_rt.pgm").string();
  write_pgm(img, path);
  CHECK(read_pgm(path) == img);
  std::filesystem::remove(path);
  std::string withc = "P5\n# comment\n2 1\n# another\n255\n";
  std::vector<std::uint8_t> b(withc.begin(), withc.end());
  b.push_back(9);
  b.push_back(200);
  const auto c = parse_pgm(b);
  CHECK(c.width == 2);
  CHECK(c.at(0, 1) == 200);
  std::string p2 = "P2\n2 1\n255\n1 2\n";
  CHECK_THROWS_AS(parse_pgm({p2.begin(), p2.end()}), FormatError);
  std::string deep = "P5\n2 1\n65535\n";
  std::vector<std::uint8_t> d(deep.begin(), deep.end());
  d.resize(d.size() + 4, 0);
  CHECK_THROWS_AS(parse_pgm(d), FormatError);
  b.pop_back();
  CHECK_THROWS_AS(parse_pgm(b), FormatError);
  const auto cropped = crop_to_multiple(GrayImage(130, 70), 64);
  CHECK(cropped.width == 128);
  CHECK(cropped.height == 64);
  CHECK_THROWS_AS(crop_to_multiple(GrayImage(63, 128), 64), std::invalid_argument);
}

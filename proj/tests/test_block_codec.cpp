#include <cmath>
#include <map>
#include <random>

#include "doctest.h"
#include "sbgft/arith.hpp"
#include "sbgft/binio.hpp"
#include "sbgft/block_codec.hpp"

using namespace sbgft;

namespace {

// Exhaustive oracle using dense operators and an independent entropy count.
struct OracleResult {
  int best;
  double J;
};

OracleResult oracle_select(const Eigen::MatrixXd& block, const TransformBank& bank, int qp,
                           double lambda, int side) {
  const double step = std::pow(2.0, (qp - 4) / 6.0);
  OracleResult r{-1, 0};
  const Eigen::Map<const Eigen::VectorXd> f(block.data(), block.size());
  for (std::size_t t = 0; t < bank.size(); ++t) {
    const Eigen::VectorXd c = bank[t].dense().transpose() * f;
    std::map<long, int> hist;
    double sse = 0;
    for (int i = 0; i < c.size(); ++i) {
      const double a = std::abs(c[i]) / step;
      const long q = static_cast<long>(std::floor(a + 0.5)) * (c[i] < 0 ? -1 : 1);
      sse += (c[i] - q * step) * (c[i] - q * step);
      ++hist[q];
    }
    double bits = 0;
    for (auto& [v, k] : hist) bits += -k * std::log2(static_cast<double>(k) / c.size());
    const double J = sse + lambda * (bits + side);
    if (r.best < 0 || J < r.J - 1e-9 * std::max(1.0, r.J)) r = {static_cast<int>(t), J};
  }
  return r;
}

}  // namespace

TEST_CASE("lambda and quantizer") {
  CHECK(lambda_from_qp(12) == doctest::Approx(0.57));
  CHECK(lambda_from_qp(30) == doctest::Approx(36.48));
  CHECK(lambda_from_qp(25) == doctest::Approx(11.4905).epsilon(1e-4));
  CHECK_THROWS_AS(lambda_from_qp(52), std::out_of_range);
  CHECK_THROWS_AS(lambda_from_qp(-1), std::out_of_range);
  auto q4 = QuantizerSpec::from_qp(4);
  CHECK(q4.step == 1.0);
  std::vector<double> c{2.5, 0.0, -0.5, 0.49};
  auto idx = quantize(c, q4);
  CHECK(idx == std::vector<int>{3, 0, -1, 0});
  CHECK(dequantize(idx, q4)[0] == 3.0);
  auto q10 = QuantizerSpec::from_qp(10);
  CHECK(q10.step == doctest::Approx(2.0));
  std::vector<double> m{-3.0};
  CHECK(quantize(m, q10)[0] == -2);
  CHECK(dequantize(quantize(m, q10), q10)[0] == doctest::Approx(-4.0));
  std::mt19937 rng(1);
  std::uniform_real_distribution<double> u(-100, 100);
  for (int qp : {0, 22, 37, 51}) {
    const auto q = QuantizerSpec::from_qp(qp);
    for (int i = 0; i < 200; ++i) {
      const double x = u(rng);
      CHECK(std::abs(x - quantize_one(x, q.step) * q.step) <= q.step / 2 + 1e-12);
    }
  }
}

TEST_CASE("rate estimate") {
  std::vector<int> zeros(64, 0);
  CHECK(rate_estimate(zeros, 40) == 6.0);
  std::vector<int> half(64, 0);
  for (int i = 0; i < 32; ++i) half[i] = 1;
  CHECK(rate_estimate(half, 1) == doctest::Approx(64.0));
  std::vector<int> mix(64, 0);
  for (int i = 0; i < 8; ++i) mix[i] = 1;
  for (int i = 8; i < 16; ++i) mix[i] = -1;
  // 64 * H0(0.75, 0.125, 0.125) = 67.92, plus 3 side bits.
  CHECK(rate_estimate(mix, 5) == doctest::Approx(70.9218).epsilon(1e-4));
  std::vector<int> wide{5000, -5000, 0, 0};
  CHECK(coefficient_entropy_bits(wide) == doctest::Approx(6.0));
  CHECK(index_bits(1) == 0);
  CHECK(index_bits(5) == 3);
  CHECK(index_bits(41) == 6);
  CHECK(index_bits(40) == 6);
}

TEST_CASE("rdot selection examples") {
  const auto bank = build_bank(8, Config::C);
  const Eigen::MatrixXd flat = Eigen::MatrixXd::Constant(8, 8, 37.3);
  const auto opt = rdot_options(30);
  auto cb = rdot_select(flat, bank, opt);
  CHECK(cb.transform == 0);
  CHECK(cb.evaluations == 41);
  int nz = 0;
  for (int v : cb.indices) nz += v != 0;
  CHECK(nz == 1);
  // Distortion equals the DC quantization error only.
  const double step = QuantizerSpec::from_qp(30).step;
  const double dc = 37.3 * 8;
  CHECK(cb.distortion == doctest::Approx(std::pow(dc - quantize_one(dc, step) * step, 2)).epsilon(1e-9));
  CHECK(cb.cost == doctest::Approx(cb.distortion + opt.lambda * cb.rate_bits));
  CHECK(cb.rate_bits >= index_bits(bank.size()));

  std::mt19937 rng(8);
  std::normal_distribution<double> nd(0, 20);
  Eigen::MatrixXd blk = Eigen::MatrixXd::NullaryExpr(8, 8, [&] { return nd(rng); });
  auto zero_l = rdot_options(30);
  zero_l.lambda = 0.0;
  cb = rdot_select(blk, bank, zero_l);
  for (std::size_t t = 0; t < bank.size(); ++t) {
    auto single = rdot_select_among(blk, bank, std::vector<int>{static_cast<int>(t)}, zero_l);
    CHECK(cb.distortion <= single.distortion);
  }
  CHECK_THROWS_AS(rdot_select_among(blk, bank, std::vector<int>{}, opt), std::invalid_argument);
  CHECK_THROWS_AS(rdot_select(Eigen::MatrixXd::Zero(4, 4), bank, opt), std::invalid_argument);
}

TEST_CASE("rdot matches the exhaustive oracle") {
  const auto bank = build_bank(8, Config::F);
  std::mt19937 rng(21);
  std::normal_distribution<double> nd(0, 15);
  for (int trial = 0; trial < 40; ++trial) {
    Eigen::MatrixXd blk(8, 8);
    // Smooth ramps plus noise so different transforms win.
    const double gx = nd(rng) / 5, gy = nd(rng) / 5;
    for (int x = 0; x < 8; ++x)
      for (int y = 0; y < 8; ++y) blk(x, y) = gx * x + gy * y * (x > y) + nd(rng) / 3;
    const int qp = 22 + (trial % 4) * 6;
    const auto opt = rdot_options(qp);
    const auto cb = rdot_select(blk, bank, opt);
    const auto o = oracle_select(blk, bank, qp, opt.lambda, 6);
    CHECK(cb.transform == o.best);
    CHECK(cb.cost == doctest::Approx(o.J).epsilon(1e-9));
  }
}

TEST_CASE("decode_block") {
  const auto bank = build_bank(8, Config::D);
  CodedBlock z;
  z.n = 8;
  z.transform = 2;
  z.indices.assign(64, 0);
  CHECK(decode_block(z, bank, 30).cwiseAbs().maxCoeff() == 0.0);
  z.transform = 9;
  CHECK_THROWS_AS(decode_block(z, bank, 30), std::out_of_range);

  std::mt19937 rng(3);
  std::normal_distribution<double> nd(0, 30);
  Eigen::MatrixXd blk = Eigen::MatrixXd::NullaryExpr(8, 8, [&] { return nd(rng); });
  const auto cb = rdot_select(blk, bank, rdot_options(27));
  const auto rec = decode_block(cb, bank, 27);
  CHECK((rec - blk).squaredNorm() == doctest::Approx(cb.distortion).epsilon(1e-6));

  // Fine quantization: noise close to step^2 / 12 per sample.
  const auto fine = QuantizerSpec::from_qp(0);
  double mse = 0;
  int count = 0;
  for (int t = 0; t < 50; ++t) {
    Eigen::MatrixXd b = Eigen::MatrixXd::NullaryExpr(8, 8, [&] { return nd(rng); });
    auto c = rdot_select(b, bank, rdot_options(0));
    mse += (decode_block(c, bank, 0) - b).squaredNorm();
    count += 64;
  }
  CHECK(mse / count == doctest::Approx(fine.step * fine.step / 12).epsilon(0.1));
}

TEST_CASE("arithmetic coder round trip and efficiency") {
  std::vector<int> zeros(4096, 0);
  auto bytes = arithmetic_encode(zeros);
  CHECK(bytes.size() <= 64);
  CHECK(arithmetic_decode(bytes, zeros.size()) == zeros);

  std::mt19937 rng(6);
  std::uniform_int_distribution<int> wide(-300, 300);
  std::vector<int> r(5000);
  for (auto& v : r) v = wide(rng);
  r.push_back(1 << 30);
  r.push_back(-(1 << 30));
  r.push_back(2147483647);
  r.push_back(-2147483647);
  CHECK(arithmetic_decode(arithmetic_encode(r), r.size()) == r);

  std::bernoulli_distribution coin(0.5);
  std::vector<int> bits(16384);
  for (auto& b : bits) b = coin(rng);
  const double len = arithmetic_encode(bits).size() * 8.0;
  CHECK(len / bits.size() == doctest::Approx(1.0).epsilon(0.02));

  // Stationary Laplacian-like source: length within 2% of the entropy
  // estimate plus the adaptive model's learning cost.
  std::geometric_distribution<int> geo(0.35);
  std::vector<int> lap(16384);
  for (auto& v : lap) v = coin(rng) ? geo(rng) : -geo(rng);
  const double h = coefficient_entropy_bits(lap);
  const double coded = arithmetic_encode(lap).size() * 8.0;
  CHECK(coded / h == doctest::Approx(1.0).epsilon(0.02));
  CHECK(arithmetic_decode(arithmetic_encode(lap), lap.size()) == lap);
}

TEST_CASE("arithmetic coder primitives") {
  ArithmeticEncoder enc;
  enc.encode_bits(0b1011, 4);
  write_gamma(enc, 1);
  write_gamma(enc, 77);
  enc.encode(3, 7, 10);
  const auto bytes = enc.finish();
  ArithmeticDecoder dec(bytes);
  CHECK(dec.decode_bits(4) == 0b1011);
  CHECK(read_gamma(dec) == 1);
  CHECK(read_gamma(dec) == 77);
  const auto t = dec.target(10);
  CHECK(t >= 3);
  CHECK(t < 7);
  for (int v : {0, 1, -1, 5, -6, 1000}) CHECK(unzigzag(zigzag(v)) == v);
  CHECK_THROWS_AS(enc.encode(5, 5, 10), std::invalid_argument);

  // A stream of zero bytes decodes as a run of gamma zeros and is rejected.
  std::vector<std::uint8_t> junk(16, 0);
  ArithmeticDecoder bad(junk);
  CHECK_THROWS_AS(read_gamma(bad), FormatError);
  // Reading far beyond a short stream is rejected too.
  std::vector<std::uint8_t> tiny(1, 0xAA);
  ArithmeticDecoder over(tiny);
  CHECK_THROWS_AS(over.decode_bits(200), FormatError);
}

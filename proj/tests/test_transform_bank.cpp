#include <cmath>
#include <cstdio>
#include <random>

#include "doctest.h"
#include "sbgft/binio.hpp"
#include "sbgft/transform_bank.hpp"

using namespace sbgft;

namespace {

// Naive closed forms, normalized numerically.
Eigen::MatrixXd normalized_rows(Eigen::MatrixXd K) {
  for (int k = 0; k < K.rows(); ++k) K.row(k) /= K.row(k).norm();
  return K;
}

}  // namespace

TEST_CASE("1-D kernels") {
  const auto d4 = dct2_kernel(4);
  for (int i = 0; i < 4; ++i) CHECK(d4(0, i) == doctest::Approx(0.5));
  for (int n : {4, 8, 16, 32}) {
    for (auto K : {dct2_kernel(n), dst7_kernel(n), dct8_kernel(n)})
      CHECK((K.transpose() * K - Eigen::MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff() < 1e-10);
    Eigen::MatrixXd s(n, n), c(n, n);
    for (int k = 0; k < n; ++k)
      for (int i = 0; i < n; ++i) {
        s(k, i) = std::sin(M_PI * (2 * k + 1) * (i + 1) / (2.0 * n + 1));
        c(k, i) = std::cos(M_PI * (2 * i + 1) * (2 * k + 1) / (4.0 * n + 2));
      }
    CHECK((normalized_rows(s) - dst7_kernel(n)).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((normalized_rows(c) - dct8_kernel(n)).cwiseAbs().maxCoeff() < 1e-12);
  }
  // sin(pi/9) scaled to unit row norm.
  Eigen::VectorXd row(4);
  for (int i = 0; i < 4; ++i) row[i] = std::sin(M_PI * (i + 1) / 9.0);
  CHECK(dst7_kernel(4)(0, 0) == doctest::Approx(std::sin(M_PI / 9) / row.norm()).epsilon(1e-12));
}

TEST_CASE("separable application") {
  std::mt19937 rng(2);
  std::normal_distribution<double> nd;
  const int n = 8;
  Eigen::MatrixXd B = Eigen::MatrixXd::NullaryExpr(n, n, [&] { return nd(rng); });
  const auto I = Eigen::MatrixXd::Identity(n, n);
  CHECK(apply_separable(I, I, B) == B);
  const auto K = dct2_kernel(n);
  const auto C = apply_separable(K, K, Eigen::MatrixXd::Constant(n, n, 2.0));
  CHECK(C(0, 0) == doctest::Approx(16.0));
  CHECK((C.array().abs() > 1e-12).count() == 1);
  const auto h = dst7_kernel(n), v = dct8_kernel(n);
  const auto Y = apply_separable(h, v, B);
  CHECK(std::abs(Y.norm() - B.norm()) < 1e-9);
  CHECK((apply_separable_inverse(h, v, Y) - B).cwiseAbs().maxCoeff() < 1e-9);
  // Columns are transformed by v: a block constant down each column only
  // excites the first row of coefficients under DCT-II verticals.
  Eigen::MatrixXd cols(n, n);
  for (int y = 0; y < n; ++y) cols.col(y).setConstant(y);
  const auto Z = apply_separable(h, K, cols);
  CHECK(Z.bottomRows(n - 1).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("bank cardinalities") {
  CHECK(build_bank(8, Config::F).size() == 40);
  CHECK(build_bank(16, Config::D).size() == 5);
  CHECK(build_bank(8, Config::C).size() == 41);
  CHECK(build_bank(4, Config::C).size() == 9);
  CHECK(build_bank(4, Config::B).size() == 1);
  CHECK(build_bank(8, Config::B).size() == 41);
  CHECK(build_bank(8, Config::E).size() == 40);
  CHECK(build_bank(16, Config::E).size() == 5);
  CHECK(build_bank(64, Config::F).size() == 1);
  CHECK(build_bank(4, Config::A).size() == 1);
  const auto c = build_bank(8, Config::C);
  CHECK(c[0].id().kind == TransformKind::Dct2);
  CHECK(c[1].id().label() == "SBGFT(H:1)");
  for (std::size_t i = 0; i < c.size(); ++i) CHECK(c[i].id().ordinal == static_cast<int>(i));
  const auto d = build_bank(8, Config::D);
  CHECK(d[3].id().label() == "MTS(DST7,DCT8)");
  CHECK_THROWS_AS(build_bank(12, Config::A), std::invalid_argument);
  int cc = 0;
  CHECK(parse_config("F_5", &cc) == Config::F_C);
  CHECK(cc == 5);
  CHECK_THROWS_AS(parse_config("G"), std::invalid_argument);
}

TEST_CASE("every member is orthonormal with Parseval") {
  std::mt19937 rng(4);
  std::normal_distribution<double> nd;
  for (Config cfg : {Config::C, Config::D}) {
    const auto bank = build_bank(8, cfg);
    for (const auto& t : bank.members) {
      const auto U = t.dense();
      CHECK((U.transpose() * U - Eigen::MatrixXd::Identity(64, 64)).cwiseAbs().maxCoeff() < 1e-9);
      Eigen::VectorXd f(64), c(64), back(64);
      for (auto& v : f) v = nd(rng);
      t.forward(f.data(), c.data());
      CHECK(std::abs(c.norm() - f.norm()) < 1e-9);
      CHECK((c - U.transpose() * f).cwiseAbs().maxCoeff() < 1e-10);
      t.inverse(c.data(), back.data());
      CHECK((back - f).cwiseAbs().maxCoeff() < 1e-9);
      Eigen::MatrixXd F = Eigen::MatrixXd::NullaryExpr(64, 3, [&] { return nd(rng); }), C;
      t.forward_batch(F, C);
      CHECK((C - U.transpose() * F).cwiseAbs().maxCoeff() < 1e-10);
    }
  }
}

TEST_CASE("bank serialization round trip and corruption") {
  for (Config cfg : {Config::F, Config::D, Config::C}) {
    const auto bank = build_bank(8, cfg);
    const auto bytes = serialize_bank(bank);
    const auto back = deserialize_bank(bytes);
    REQUIRE(back.size() == bank.size());
    CHECK(back.label == bank.label);
    for (std::size_t i = 0; i < bank.size(); ++i) {
      CHECK(back[i].id().label() == bank[i].id().label());
      CHECK(back[i].dense() == bank[i].dense());
    }
    CHECK(bank_hash(back) == bank_hash(bank));
    CHECK(serialize_bank(back) == bytes);
  }
  const auto bytes = serialize_bank(build_bank(4, Config::F));
  auto bad = bytes;
  bad[4] ^= 0x01;  // version
  try {
    deserialize_bank(bad);
    CHECK(false);
  } catch (const FormatError& e) {
    CHECK(e.kind() == FormatError::Kind::Version);
  }
  bad = bytes;
  bad[0] = 'X';
  CHECK_THROWS_AS(deserialize_bank(bad), FormatError);
  bad = bytes;
  bad.back() ^= 0xff;
  try {
    deserialize_bank(bad);
    CHECK(false);
  } catch (const FormatError& e) {
    CHECK(e.kind() == FormatError::Kind::Checksum);
  }
  bad = bytes;
  bad[100] ^= 0x10;
  try {
    deserialize_bank(bad);
    CHECK(false);
  } catch (const FormatError& e) {
    CHECK(e.kind() == FormatError::Kind::Checksum);
  }
  bad.assign(bytes.begin(), bytes.begin() + 500);
  try {
    deserialize_bank(bad);
    CHECK(false);
  } catch (const FormatError& e) {
    CHECK(e.kind() == FormatError::Kind::Truncated);
  }
  const std::string path = "bank_roundtrip_test.sbgf";
  save_bank(build_bank(4, Config::C), path);
  CHECK(load_bank(path).size() == 9);
  std::remove(path.c_str());
}

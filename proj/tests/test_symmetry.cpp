#include <cmath>
#include <random>

#include "doctest.h"
#include "sbgft/spectral.hpp"
#include "sbgft/symmetry.hpp"

using namespace sbgft;

TEST_CASE("support examples") {
  const auto axes = enumerate_reflection_axes(4);
  auto s = support_of(build_sbg(4, axes[0]), axes[0]);  // x = 2
  CHECK(s.nodes.size() == 8);
  CHECK(s.pairs.size() == 4);
  for (int id : s.nodes) {
    const int x = node_point(4, id).x;
    CHECK((x == 1 || x == 3));
  }
  s = support_of(build_sbg(4, axes[1]), axes[1]);  // x = 2.5
  CHECK(s.nodes.size() == 16);
  CHECK(s.pairs.size() == 8);
  // Border axis of the plain grid: rows 1 and 2 joined by the vertical edges.
  ReflectionAxis border{AxisDirection::H, 0, 4};
  s = support_of(build_2dgg(4), border);
  CHECK(s.pairs.size() == 4);
  for (int id : s.nodes) CHECK(node_point(4, id).x <= 2);
  for (const auto& p : s.pairs) CHECK(p.first < p.second);
  // Diagonal supports exclude on-axis nodes.
  s = support_of(build_sbg(4, axes[6]), axes[6]);
  CHECK(s.nodes.size() == 12);
}

TEST_CASE("mirror and symmetry ratio") {
  const auto axes = enumerate_reflection_axes(8);
  const auto s = support_of(build_sbg(8, axes[4]), axes[4]);
  std::mt19937 rng(5);
  std::normal_distribution<double> nd;
  Eigen::VectorXd fs(s.nodes.size());
  for (auto& v : fs) v = nd(rng);
  CHECK(mirror(mirror(fs, s), s) == fs);
  CHECK(std::abs(mirror(fs, s).norm() - fs.norm()) < 1e-12);
  const double r = symmetry_ratio(fs, s);
  CHECK(r >= -1.0);
  CHECK(r <= 1.0);
  Eigen::VectorXd sym = fs + mirror(fs, s), anti = fs - mirror(fs, s);
  CHECK(mirror(sym, s) == sym);
  CHECK(symmetry_ratio(sym, s) == doctest::Approx(1.0));
  CHECK(symmetry_ratio(anti, s) == doctest::Approx(-1.0));
  CHECK_THROWS_AS(symmetry_ratio(Eigen::VectorXd::Zero(fs.size()), s), std::domain_error);

  // Single-pair support: (1,0) -> 0, (1,-1) mirrors to (-1,1).
  GridGraph tiny(4, {{1, 4}});
  const auto one = support_of(tiny, ReflectionAxis{AxisDirection::H, 2, 4});
  REQUIRE(one.pairs.size() == 1);
  Eigen::Vector2d p(1, 0);
  CHECK(symmetry_ratio(p, one) == 0.0);
  Eigen::Vector2d q(1, -1);
  CHECK(mirror(q, one) == Eigen::Vector2d(-1, 1));
}

TEST_CASE("eigenvector symmetry on main-axis SBGs") {
  const auto rep = eigenvector_symmetry_report(8);
  CHECK(rep.size() == 40);
  for (const auto& r : rep) {
    if (!r.axis.is_main()) continue;
    for (double v : r.ratios) CHECK(std::abs(std::abs(v) - 1.0) < 1e-9);
  }
  // Supports are the specular pairs, so every ratio lies in [-1, 1].
  for (const auto& r : rep)
    for (double v : r.ratios)
      if (!std::isnan(v)) CHECK(std::abs(v) <= 1.0 + 1e-12);
}

TEST_CASE("residual histogram sanity") {
  const int n = 8;
  std::vector<Eigen::MatrixXd> flat(10, Eigen::MatrixXd::Constant(n, n, 3.0));
  auto h = residual_symmetry_histogram(flat, n);
  for (double v : h.per_axis) CHECK(v == 1.0);
  for (double v : h.any_axis) CHECK(v == 1.0);
  std::mt19937 rng(1);
  std::normal_distribution<double> nd;
  std::vector<Eigen::MatrixXd> noise(400, Eigen::MatrixXd(n, n));
  for (auto& b : noise)
    for (int i = 0; i < n * n; ++i) b.data()[i] = nd(rng);
  h = residual_symmetry_histogram(noise, n, 0.7, 2);
  // Main H axis: 32 pairs, S_s concentrates near 0.
  CHECK(h.per_axis[n - 3] < 0.01);
  CHECK_THROWS_AS(residual_symmetry_histogram({}, n), std::invalid_argument);
}

TEST_CASE("lowest non-constant eigenvector is mostly symmetric on its support") {
  for (int n : {4, 8}) {
    const auto rep = eigenvector_symmetry_report(n);
    for (const auto& r : rep) CHECK_MESSAGE(r.ratios[1] > 0.0, r.axis.label());
  }
}

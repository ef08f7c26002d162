#include "doctest.h"

#include <cmath>
#include <numbers>

#include "dirac/disorder.hpp"
#include "dirac/errors.hpp"
#include "dirac/model.hpp"

using namespace dirac;
using doctest::Approx;

TEST_CASE("energy_context at E = 1, m = 0") {
  auto c = energy_context(1.0, 0.0);
  CHECK(c.k == Approx(-2 * std::numbers::pi / 3).epsilon(1e-14));
  CHECK(c.p1 == -1.0);
  CHECK(c.p2 == 1.0);
  CHECK(c.sin2k == Approx(std::sqrt(3.0) / 2).epsilon(1e-14));
  CHECK(c.cosk < 0);
  CHECK(c.sink < 0);
  CHECK_FALSE(c.near_edge);
}

TEST_CASE("energy_context invariants on a grid") {
  for (double m : {0.0, 0.3, 1.0, 2.5}) {
    const double top = std::sqrt(m * m + 4);
    for (int i = 1; i < 100; ++i) {
      const double E = m + (top - m) * i / 100.0;
      auto c = energy_context(E, m);
      CHECK(c.k > -std::numbers::pi);
      CHECK(c.k < -std::numbers::pi / 2);
      CHECK(c.cosk == Approx(-std::sqrt(-c.p1 * c.p2) / 2).epsilon(1e-13));
      CHECK(c.sin2k == Approx(std::sin(2 * c.k)).epsilon(1e-10));
      CHECK(std::abs(std::sqrt(m * m + 4 * std::cos(c.k) * std::cos(c.k)) - E) < 1e-12);
    }
  }
}

TEST_CASE("energy_context errors and edge flag") {
  CHECK_THROWS_AS(energy_context(0.5, 1.0), Error);
  try {
    energy_context(0.5, 1.0);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::energy_out_of_band);
  }
  CHECK_THROWS_AS(energy_context(1.0, 1.0), Error);
  CHECK_THROWS_AS(energy_context(std::sqrt(5.0), 1.0), Error);
  auto c = energy_context(std::sqrt(5.0) - 1e-13, 1.0);
  CHECK(c.near_edge);
  CHECK_THROWS_AS(c.require_analytic(), Error);
  CHECK_FALSE(energy_context(std::sqrt(5.0) - 1e-3, 1.0).near_edge);
}

TEST_CASE("in_band_interior") {
  CHECK(in_band_interior(1.5, 1.0));
  CHECK(in_band_interior(-1.5, 1.0));
  CHECK_FALSE(in_band_interior(1.0, 1.0));
  CHECK_FALSE(in_band_interior(std::sqrt(5.0), 1.0));
  CHECK_FALSE(in_band_interior(0.5, 1.0));
  SpectralWindow w{1.0};
  CHECK(w.outer() == Approx(std::sqrt(5.0)));
  CHECK(w.interior(2.0));
}

TEST_CASE("decay exponent is exact") {
  CHECK(DecayExponent::parse("0.5").compare_half() == 0);
  CHECK(DecayExponent::parse("1/2").compare_half() == 0);
  CHECK(DecayExponent::parse("5e-1").compare_half() == 0);
  CHECK(DecayExponent::parse("0.3").compare_half() < 0);
  CHECK(DecayExponent::parse("0.50000000001").compare_half() > 0);
  CHECK(DecayExponent::from_double(0.5) == DecayExponent(1, 2));
  CHECK(DecayExponent::from_double(0.3) == DecayExponent(3, 10));
  CHECK(DecayExponent::parse("2/4").str() == "1/2");
  CHECK_THROWS_AS(DecayExponent::parse("abc"), Error);
}

TEST_CASE("assemble_operator examples") {
  ModelParams p;
  p.m = 0;
  auto path = zero_path(p, 4);
  auto op = assemble_operator(p, path, {BoxDescriptor::Kind::LambdaPrime, 2});
  CHECK(op.dimension() == 4);
  CHECK(op.diag == Eigen::Vector4d(0, 0, 0, 0));
  CHECK(op.offdiag == Eigen::Vector3d(1, -1, 1));

  p.m = 1;
  auto op2 = assemble_operator(p, path, {BoxDescriptor::Kind::Lambda, 2});
  CHECK(op2.dimension() == 3);
  CHECK(op2.diag == Eigen::Vector3d(-1, 1, -1));
  CHECK(op2.offdiag == Eigen::Vector2d(1, -1));

  CHECK_THROWS_AS(assemble_operator(p, path, {BoxDescriptor::Kind::Lambda, 5}), Error);
}

TEST_CASE("assembled operator matches the site expansion") {
  ModelParams p;
  p.m = 0.7;
  p.lambda = 0.8;
  auto path = sample_path(p, {}, 30, 11);
  for (auto kind : {BoxDescriptor::Kind::Lambda, BoxDescriptor::Kind::LambdaPrime}) {
    BoxDescriptor box{kind, 30};
    auto op = assemble_operator(p, path, box);
    CHECK(static_cast<std::size_t>(op.dimension()) == (kind == BoxDescriptor::Kind::Lambda ? 59u : 60u));
    Eigen::MatrixXd A = op.dense();
    CHECK((A - A.transpose()).cwiseAbs().maxCoeff() == 0.0);
    for (int n = 1; n <= 30; ++n) {
      CHECK(A(BoxDescriptor::index(n, Spin::minus), BoxDescriptor::index(n, Spin::minus)) == -p.m + path.V2(n));
      if (box.contains(n, Spin::plus)) {
        const auto ip = BoxDescriptor::index(n, Spin::plus);
        CHECK(A(ip, ip) == p.m + path.V1(n));
        CHECK(A(ip, BoxDescriptor::index(n, Spin::minus)) == 1.0);
        if (n < 30) CHECK(A(ip, BoxDescriptor::index(n + 1, Spin::minus)) == -1.0);
      }
    }
    for (Eigen::Index i = 0; i < op.offdiag.size(); ++i) CHECK(std::abs(op.offdiag[i]) == 1.0);
    // Gershgorin-style bound
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A);
    const double vmax = std::max(path.v1.head(30).cwiseAbs().maxCoeff(), path.v2.head(30).cwiseAbs().maxCoeff());
    CHECK(es.eigenvalues().cwiseAbs().maxCoeff() <= std::sqrt(p.m * p.m + 4) + vmax + 1e-12);
  }
}

TEST_CASE("free box spectrum inside the band hull") {
  for (double m : {0.0, 1.0}) {
    ModelParams p;
    p.m = m;
    auto path = zero_path(p, 40);
    for (int l : {1, 2, 7, 40}) {
      auto op = assemble_operator(p, path, {BoxDescriptor::Kind::LambdaPrime, l});
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(op.dense());
      CHECK(es.eigenvalues().cwiseAbs().maxCoeff() <= std::sqrt(m * m + 4) + 1e-12);
    }
  }
}

TEST_CASE("box membership") {
  BoxDescriptor b{BoxDescriptor::Kind::Lambda, 3};
  CHECK(b.dimension() == 5);
  CHECK(b.contains(3, Spin::minus));
  CHECK_FALSE(b.contains(3, Spin::plus));
  CHECK_FALSE(b.contains(0, Spin::minus));
  BoxDescriptor bp{BoxDescriptor::Kind::LambdaPrime, 3};
  CHECK(bp.dimension() == 6);
  CHECK(bp.contains(3, Spin::plus));
}

#include "doctest.h"

#include <cmath>
#include <numbers>
#include <utility>

#include "dirac/disorder.hpp"
#include "dirac/errors.hpp"
#include "dirac/prufer.hpp"
#include "dirac/stats.hpp"

using namespace dirac;

TEST_CASE("P_1 at m = 0, E = 1") {
  auto ctx = energy_context(1.0, 0.0);
  auto P = basis_at(ctx, 1).entries;
  Eigen::Matrix2d want;
  want << -std::cos(ctx.k), -std::sin(ctx.k), 1, 0;
  CHECK((P - want).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("basis determinant and free covariance") {
  for (double m : {0.0, 0.5, 1.0}) {
    const double top = std::sqrt(m * m + 4);
    for (double f : {0.1, 0.37, 0.5, 0.8, 0.95}) {
      auto ctx = energy_context(m + f * (top - m), m);
      for (System sys : {System::first, System::second}) {
        const double det_sign = sys == System::first ? -1.0 : 1.0;
        Eigen::Matrix2d T = free_transfer(ctx, sys);
        for (int n = 1; n <= 50; ++n) {
          auto P = basis_at(ctx, n, sys).entries;
          CHECK(std::abs(P.determinant() - det_sign * ctx.sin2k) < 1e-10);
          auto Pn = basis_at(ctx, n + 1, sys).entries;
          CHECK((Pn - T * P).cwiseAbs().maxCoeff() < 1e-12 * (1 + T.norm() * P.norm()));
        }
      }
    }
  }
}

TEST_CASE("zero disorder: multiplier 1 and free phase law") {
  ModelParams p;
  auto ctx = energy_context(1.3, 0.2);
  auto path = zero_path(p, 100);
  PruferState s;
  s.theta = 0.4;
  for (int i = 0; i < 50; ++i) {
    const double tb = s.theta_bar(ctx);
    auto next = prufer_step(s, ctx, path);
    CHECK(next.log_r == s.log_r);
    CHECK(next.theta == s.theta);
    CHECK(next.n == s.n + 1);
    const double d = std::remainder(next.theta_bar(ctx) - tb + 2 * ctx.k, 2 * std::numbers::pi);
    CHECK(std::abs(d) < 1e-12);
    s = next;
  }
  auto tr = run_prufer(ctx, path, 90, 0.1);
  for (double lr : tr.log_r) CHECK(lr == 0.0);
}

TEST_CASE("radius recursion matches the Gamma expansion term by term") {
  ModelParams p;
  p.lambda = 1.5;
  p.alpha = DecayExponent(1, 5);
  for (double E : {0.4, 1.0, 1.7}) {
    auto ctx = energy_context(E, 0.0);
    auto path = sample_path(p, {}, 400, 3);
    PruferState s;
    double worst = 0;
    for (int n = 1; n < 399; ++n) {
      const double tb = s.theta_bar(ctx);
      auto next = prufer_step(s, ctx, path);
      const double lhs = 2 * (next.log_r - s.log_r);
      const double rhs = std::log1p(radius_gamma(ctx, tb, path.V1(n), path.V2(n + 1)));
      worst = std::max(worst, std::abs(lhs - rhs));
      s = next;
    }
    CHECK(worst < 1e-10);
  }
}

TEST_CASE("Prufer step agrees with matrix propagation, both systems") {
  ModelParams p;
  p.lambda = 1.0;
  p.alpha = DecayExponent(3, 10);
  for (double m : {0.0, 0.8}) {
    auto ctx = energy_context(m + 0.6 * (std::sqrt(m * m + 4) - m), m);
    for (System sys : {System::first, System::second}) {
      for (std::uint64_t seed = 0; seed < 20; ++seed) {
        auto path = sample_path(p, {}, 120, seed);
        PruferState s;
        s.system = sys;
        s.theta = 0.3 * seed;
        for (int n = 1; n < 100; ++n) {
          const Eigen::Vector2d phi = basis_at(ctx, n, sys).entries * prufer_psi(s);
          const Eigen::Vector2d want = transfer_at(ctx, path, n, sys).entries * phi;
          s = prufer_step(s, ctx, path);
          const Eigen::Vector2d got = basis_at(ctx, n + 1, sys).entries * prufer_psi(s);
          CHECK((got - want).norm() <= 1e-10 * want.norm());
        }
      }
    }
  }
}

TEST_CASE("equivalence sandwich holds at every site") {
  ModelParams p;
  p.lambda = 0.9;
  p.alpha = DecayExponent(1, 2);
  for (auto [E, m] : {std::pair{0.3, 0.0}, {1.0, 0.0}, {1.8, 0.0}, {0.301, 0.3}, {0.45, 0.3}, {1.2, 0.7}}) {
    p.m = m;
    auto ctx = energy_context(E, m);
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      auto path = sample_path(p, {}, 2001, seed);
      auto tr = run_prufer(ctx, path, 2000, 0.7);
      PruferState s;
      s.theta = 0.7;
      for (std::size_t i = 0; i < tr.log_r.size(); ++i) {
        s.n = static_cast<std::int64_t>(i) + 1;
        s.log_r = tr.log_r[i];
        s.theta = tr.theta[i];
        const double phi2 = prufer_phi(s, ctx).squaredNorm();
        const double R2 = std::exp(2 * s.log_r);
        CHECK(ctx.sin2k * ctx.sin2k / (2 * E) * R2 <= phi2 * (1 + 1e-9));
        CHECK(phi2 <= 2 * E * R2 * (1 + 1e-9));
      }
    }
  }
}

TEST_CASE("theta_bar_n depends only on draws before site n") {
  ModelParams p;
  p.lambda = 1.0;
  auto ctx = energy_context(1.0, 0.0);
  auto full = sample_path(p, {}, 200, 4);
  for (int n : {2, 10, 57}) {
    DisorderPath cut = full;
    cut.v1 = full.v1.head(n);
    cut.v2 = full.v2.head(n);
    auto a = run_prufer(ctx, full, n - 1, 0.2);
    auto b = run_prufer(ctx, cut, n - 1, 0.2);
    CHECK(a.theta_bar.back() == b.theta_bar.back());
  }
}

TEST_CASE("Chebyshev recursion") {
  for (double E : {0.2, 1.0, 1.9}) CHECK(chebyshev_defect(energy_context(E, 0.0).k, 100) < 1e-12);
}

TEST_CASE("super-critical radius stays bounded") {
  ModelParams p;
  p.lambda = 1.0;
  p.alpha = DecayExponent(1, 1);
  auto ctx = energy_context(1.0, 0.0);
  std::vector<double> finals;
  for (std::uint64_t s = 0; s < 20; ++s) {
    auto path = sample_path(p, {}, 1000001, rng::replica_seed(5, s));
    finals.push_back(run_prufer(ctx, path, 1000000, 0.0, System::first, false).final.log_r);
  }
  CHECK(median(finals) < 3.0);
}

TEST_CASE("martingale decomposition is exact up to the third-order remainder") {
  ModelParams p;
  p.lambda = 0.3;
  p.alpha = DecayExponent(1, 2);
  auto ctx = energy_context(1.0, 0.0);
  auto path = sample_path(p, {}, 20001, 12);
  auto r = martingale_diagnostics(ctx, path, 20000, 0.0);
  CHECK(std::abs(r.residual - r.remainder) < 1e-9);
  auto tr = run_prufer(ctx, path, 20000, 0.0, System::first, false);
  CHECK(r.log_r2 == doctest::Approx(2 * tr.final.log_r).epsilon(1e-12));
  CHECK(r.s_N == doctest::Approx(normalizer(0.5, 20000)));
  // drift equals (c1^2/4) sum lambda^2 a_j^2 + (c2^2/4) sum lambda^2 a_{j+1}^2
  double d = 0;
  for (int j = 1; j <= 20000; ++j) d += (0.09 / j + 0.09 / (j + 1)) / (4 * 0.75);
  CHECK(r.drift == doctest::Approx(d).epsilon(1e-10));
}

TEST_CASE("remainder is cubic in the coupling") {
  auto ctx = energy_context(1.0, 0.0);
  ModelParams a, b;
  a.lambda = 0.02;
  b.lambda = 0.01;
  auto pa = sample_path(a, {}, 3001, 21);
  auto pb = sample_path(b, {}, 3001, 21);
  auto ra = martingale_diagnostics(ctx, pa, 3000);
  auto rb = martingale_diagnostics(ctx, pb, 3000);
  const double ratio = ra.abs_remainder / rb.abs_remainder;
  CHECK(ratio > 7.0);
  CHECK(ratio < 9.0);
}

TEST_CASE("excluded quasimomenta are refused") {
  ModelParams p;
  auto path = sample_path(p, {}, 100, 1);
  // k = -3pi/4 at m = 0 means E = sqrt(2)
  auto ctx = energy_context(std::sqrt(2.0), 0.0);
  CHECK(near_excluded_k(ctx.k));
  try {
    martingale_diagnostics(ctx, path, 50);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::excluded_k);
  }
  CHECK_FALSE(near_excluded_k(energy_context(1.0, 0.0).k));
}

TEST_CASE("degenerate multiplier is reported") {
  // V1 chosen to cancel the multiplier: with theta_bar = 0 and V2 = 0 the multiplier is 1 - i c1 V1
  auto ctx = energy_context(1.0, 0.0);
  const double tb = 0.0;
  auto z = prufer_multiplier(ctx, tb, 0.0, 0.0, System::first);
  CHECK(z == std::complex<double>(1, 0));
  ModelParams p;
  DisorderPath path = zero_path(p, 5);
  PruferState s;
  s.n = 5;
  CHECK_THROWS_AS(prufer_step(s, ctx, path), Error);  // needs V2(6)
}

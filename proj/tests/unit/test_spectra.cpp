#include "doctest.h"

#include <cmath>
#include <complex>

#include <Eigen/Eigenvalues>

#include "dirac/errors.hpp"
#include "dirac/spectra.hpp"

using namespace dirac;

namespace {

TridiagonalOperator random_op(double m, double lambda, int L, std::uint64_t seed,
                              BoxDescriptor::Kind kind = BoxDescriptor::Kind::LambdaPrime) {
  ModelParams p;
  p.m = m;
  p.lambda = lambda;
  p.alpha = DecayExponent(3, 10);
  return assemble_operator(p, sample_path(p, {}, L + 1, seed), {kind, L});
}

}  // namespace

TEST_CASE("free spectrum: gap and reflection symmetry on even boxes") {
  ModelParams p;
  p.m = 0.7;
  p.lambda = 0;
  auto op = assemble_operator(p, zero_path(p, 31), {BoxDescriptor::Kind::LambdaPrime, 30});
  auto d = diagonalize(op);
  const auto& ev = d.eigenvalues;
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    CHECK(std::abs(ev[i] + ev[ev.size() - 1 - i]) < 1e-12);
    CHECK(std::abs(ev[i]) > p.m);
    CHECK(std::abs(ev[i]) < std::sqrt(p.m * p.m + 4));
  }
  // odd box keeps the -m mode
  auto odd = diagonalize(assemble_operator(p, zero_path(p, 31), {BoxDescriptor::Kind::Lambda, 30}));
  CHECK((odd.eigenvalues.array() + p.m).abs().minCoeff() < 1e-12);
}

TEST_CASE("two-slot box") {
  ModelParams p;
  p.m = 0.5;
  p.lambda = 0;
  auto d = diagonalize(assemble_operator(p, zero_path(p, 2), {BoxDescriptor::Kind::LambdaPrime, 1}));
  REQUIRE(d.eigenvalues.size() == 2);
  CHECK(d.eigenvalues[0] == doctest::Approx(-std::sqrt(1.25)));
  CHECK(d.eigenvalues[1] == doctest::Approx(std::sqrt(1.25)));
}

TEST_CASE("diagonalisation against the dense oracle, both methods") {
  for (auto method : {EigenMethod::ql, EigenMethod::ql_inverse_iteration}) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      auto op = random_op(0.3, 1.0, 100, seed);
      auto d = diagonalize(op, method);
      Eigen::MatrixXd A = op.dense();
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A, Eigen::EigenvaluesOnly);
      CHECK((d.eigenvalues - es.eigenvalues()).cwiseAbs().maxCoeff() < 1e-11);
      const double res = (A * d.eigenvectors - d.eigenvectors * d.eigenvalues.asDiagonal()).cwiseAbs().maxCoeff();
      CHECK(res < 1e-10);
      const Eigen::MatrixXd I = d.eigenvectors.transpose() * d.eigenvectors;
      CHECK((I - Eigen::MatrixXd::Identity(I.rows(), I.cols())).cwiseAbs().maxCoeff() < 1e-9);
      CHECK(d.eigenvalues.sum() == doctest::Approx(A.trace()).epsilon(1e-10));
    }
  }
  auto op = random_op(0.0, 1.0, 10, 1);
  CHECK_THROWS_AS(diagonalize(op, EigenMethod::automatic, 5), Error);
}

TEST_CASE("windowed eigenpairs are a subset of the full spectrum") {
  auto op = random_op(0.0, 1.0, 200, 3);
  auto full = diagonalize(op);
  auto part = eigenpairs_in(op, 0.8, 1.2);
  int inside = 0;
  for (Eigen::Index i = 0; i < full.eigenvalues.size(); ++i)
    if (full.eigenvalues[i] >= 0.8 && full.eigenvalues[i] < 1.2) ++inside;
  CHECK(part.eigenvalues.size() == inside);
  Eigen::MatrixXd A = op.dense();
  for (Eigen::Index j = 0; j < part.eigenvalues.size(); ++j) {
    CHECK((full.eigenvalues.array() - part.eigenvalues[j]).abs().minCoeff() < 1e-11);
    CHECK((A * part.eigenvectors.col(j) - part.eigenvalues[j] * part.eigenvectors.col(j)).norm() < 1e-9);
  }
}

TEST_CASE("correlator identities") {
  auto op = random_op(0.2, 1.0, 60, 4);
  auto d = diagonalize(op);
  const int u = 3;
  const Eigen::Index src = BoxDescriptor::index(u, Spin::minus);
  auto all = correlator(d, u, Spin::minus, -10, 10, {0.0, 0.5, 1.0});
  CHECK(all.q1[src] == doctest::Approx(1.0).epsilon(1e-12));  // projection onto everything is the identity
  auto t = correlator(d, u, Spin::minus, 0.5, 1.5, {0.0, 0.3, 1.0});
  CHECK(t.blocks > 0);
  // s = 1 agrees with q1; s = 0 is constant in the target slot
  CHECK((t.q[2] - t.q1).cwiseAbs().maxCoeff() < 1e-12);
  for (Eigen::Index i = 0; i < t.q[0].size(); ++i) {
    CHECK(t.q[0][i] == doctest::Approx(t.q[0][src]).epsilon(1e-12));
    CHECK(t.q1[i] >= 0);
    CHECK(t.q1[i] <= 1 + 1e-12);
    // Cauchy-Schwarz: |P(u,n)| <= sqrt(P(u,u) P(n,n)) summed blockwise gives q1 <= 1 above
    CHECK(t.q[1][i] <= 1 + 1e-12);
  }
  // Parseval: sum over n of P_I(u,n)^2 = P_I(u,u)
  Eigen::VectorXd row = Eigen::VectorXd::Zero(d.eigenvalues.size());
  for (Eigen::Index j = 0; j < d.eigenvalues.size(); ++j)
    if (d.eigenvalues[j] >= 0.5 && d.eigenvalues[j] <= 1.5) row += d.eigenvectors(src, j) * d.eigenvectors.col(j);
  CHECK(row.squaredNorm() == doctest::Approx(row[src]).epsilon(1e-10));
  CHECK_THROWS_AS(correlator(d, 500, Spin::minus, 0, 1), Error);
}

TEST_CASE("evolution is unitary and reversible") {
  auto op = random_op(0.0, 1.0, 80, 6);
  auto d = diagonalize(op);
  auto psi0 = delta_state(d.box, 10, Spin::plus);
  auto a = evolve_state(d, psi0, 7.3);
  CHECK(a.norm() == doctest::Approx(1.0).epsilon(1e-12));
  // e^{iHt} from the conjugate evolution
  Eigen::VectorXcd back = evolve_state(d, a.conjugate(), 7.3).conjugate();
  CHECK((back - psi0).norm() < 1e-10);
  std::vector<double> times;
  for (int i = 0; i <= 100; ++i) times.push_back(0.5 * i);
  EvolutionProbes pr;
  pr.moments = {2.0};
  pr.truncated = {{2.0, 20}, {2.0, 40}};
  pr.tails = {30};
  pr.stretched = {0.0, 0.5};
  auto tr = evolve(d, psi0, times, pr);
  for (std::size_t i = 0; i < times.size(); ++i) {
    CHECK(tr.norms[i] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(tr.truncated[0][i] <= tr.truncated[1][i] + 1e-12);
    CHECK(tr.truncated[1][i] <= tr.moments[0][i] + 1e-12);
    CHECK(tr.tails[0][i] >= -1e-15);
    // RAGE-type bound: tail mass times R^2 below the second moment
    CHECK(tr.tails[0][i] * 30 * 30 <= tr.moments[0][i] + 1e-9);
    CHECK(tr.log_stretched[0][i] == doctest::Approx(2.0).epsilon(1e-12));  // kappa = 0: e^2 ||psi||^2
  }
  CHECK(tr.moments[0][0] == doctest::Approx(100.0));
  auto sp = stretched_moment_probe(d, d, psi0, {0.0}, 20.0, 50);
  CHECK(sp[0].verdict == StretchedClass::bounded);
}

TEST_CASE("states and windows") {
  auto op = random_op(0.0, 1.0, 40, 2);
  auto d = diagonalize(op);
  Eigen::VectorXcd big = Eigen::VectorXcd::Zero(200);
  big[150] = 1;
  CHECK_THROWS_AS(embed_state(big, 80), Error);
  Eigen::VectorXcd small = Eigen::VectorXcd::Zero(4);
  small[1] = 1;
  auto e = embed_state(small, 80);
  CHECK(e.size() == 80);
  CHECK(e[1] == std::complex<double>(1, 0));
  auto w = project_window(d, delta_state(d.box, 5, Spin::minus), 0.8, 1.2);
  CHECK(w.norm() == doctest::Approx(1.0));
  CHECK(time_average({0, 1, 2}, {0, 1, 2}) == doctest::Approx(1.0));
}

TEST_CASE("Wronskian of two Prufer solutions") {
  ModelParams p;
  p.lambda = 0.5;
  p.alpha = DecayExponent(1, 2);
  auto ctx = energy_context(1.0, 0.0);
  auto r = rn_ratio_diagnostic(ctx, sample_path(p, {}, 2001, 8), 2000);
  CHECK(r.wronskian_residual < 1e-8);
  p.lambda = 0;
  auto z = rn_ratio_diagnostic(ctx, zero_path(p, 501), 500);
  CHECK(z.tail_oscillation == 0.0);
  CHECK(z.wronskian_residual < 1e-12);
}

TEST_CASE("eigenfunction profile") {
  ModelParams p;
  p.lambda = 0;
  auto r = eigenfunction_profile(p, {}, 0.8, 1.2, 200, {1, 2});
  CHECK(r.used == 0);  // beta = 0: nothing to compare against
  CHECK_FALSE(r.fits.empty());
  p.m = 1.0;
  try {
    eigenfunction_profile(p, {}, 0.1, 0.5, 100, {1});
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::window_empty);
  }
}

TEST_CASE("correlator scan decays in the subcritical regime") {
  ModelParams p;
  p.lambda = 1.0;
  p.alpha = DecayExponent(3, 10);
  auto s = correlator_scan(p, {}, 0.8, 1.2, 1, Spin::minus, Spin::minus, {10, 30, 50, 70, 90}, 150, 30, 3, 100);
  CHECK(s.fit.slope < 0);
  CHECK(s.values.size() == 5);
}

#include "dirac/greens.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>

#include "dirac/errors.hpp"
#include "dirac/transfer.hpp"
#include "dirac/tridiagonal.hpp"

namespace dirac {

namespace {

void require_member(const BoxDescriptor& box, int n, Spin s) {
  if (!box.contains(n, s))
    throw Error(ErrorKind::site_out_of_range, "site (" + std::to_string(n) + (s == Spin::plus ? ",+" : ",-") +
                                                  ") not in box of size " + std::to_string(box.l));
}

tridiag::Ldlt<double> factor(const TridiagonalOperator& op, double E) {
  tridiag::Ldlt<double> f(op.diag, op.offdiag, E, green_pivot_tol);
  if (!f.ok())
    throw Error(ErrorKind::near_singular, "pivot below " + std::to_string(green_pivot_tol) + " at slot " +
                                              std::to_string(f.failed_index()) + ", E = " + std::to_string(E));
  return f;
}

}  // namespace

double green(const GreenQuery& q, const ModelParams& params, const DisorderPath& path) {
  require_member(q.box, q.u, q.sigma);
  require_member(q.box, q.n, q.sigma_p);
  auto op = assemble_operator(params, path, q.box);
  auto f = factor(op, q.E);
  return f.column(BoxDescriptor::index(q.n, q.sigma_p))[BoxDescriptor::index(q.u, q.sigma)];
}

GreenSolver::GreenSolver(const TridiagonalOperator& op, double E) : box_(op.box), f_(factor(op, E)) {}

Eigen::VectorXd GreenSolver::column(int n, Spin s) const {
  require_member(box_, n, s);
  return f_.column(BoxDescriptor::index(n, s));
}

double GreenSolver::entry(int u, Spin su, int n, Spin sn) const {
  require_member(box_, u, su);
  return column(n, sn)[BoxDescriptor::index(u, su)];
}

double ResolventResiduals::max() const { return std::max({first, second, big_to_small, big_to_small_prime}); }

ResolventResiduals verify_resolvent_identities(const ModelParams& params, const DisorderPath& path, double E, int n,
                                               int L) {
  if (n < 2 || L < n) throw Error(ErrorKind::invalid_argument, "need L >= n >= 2");
  if (path.length() < std::max(L, n + 1)) throw Error(ErrorKind::path_too_short, "path shorter than L and n + 1");
  // BC-satisfying solution (phi+_0 = 0): Phi_1 = (p_{1,2}, 1)
  std::vector<double> plus(n + 2), minus(n + 2);
  plus[1] = params.m + E - path.V2(1);
  minus[1] = 1;
  for (int j = 1; j <= n; ++j) {
    Eigen::Matrix2d T = transfer_entries(E, params.m, path.V1(j), path.V2(j + 1), System::first);
    Eigen::Vector2d x = T * Eigen::Vector2d(plus[j], minus[j]);
    plus[j + 1] = x[0];
    minus[j + 1] = x[1];
    const double big = std::max(std::abs(x[0]), std::abs(x[1]));
    if (big > 1e100)
      for (int i = 1; i <= j + 1; ++i) {
        plus[i] /= big;
        minus[i] /= big;
      }
  }
  auto phi = [&](int u, Spin s) { return s == Spin::plus ? plus[u] : minus[u]; };
  auto rel = [](double got, double want) { return std::abs(got - want) / std::max(std::abs(want), 1e-300); };

  ResolventResiduals r;
  const BoxDescriptor bn{BoxDescriptor::Kind::Lambda, n}, bpn{BoxDescriptor::Kind::LambdaPrime, n};
  GreenSolver gn(assemble_operator(params, path, bn), E);
  GreenSolver gpn(assemble_operator(params, path, bpn), E);
  const Eigen::VectorXd col_n = gn.column(n, Spin::minus);
  const Eigen::VectorXd col_pn = gpn.column(n, Spin::plus);
  for (int u = 1; u <= n; ++u)
    for (Spin s : {Spin::minus, Spin::plus}) {
      if (bn.contains(u, s))
        r.first = std::max(r.first, rel(col_n[BoxDescriptor::index(u, s)], -phi(u, s) / plus[n]));
      r.second = std::max(r.second, rel(col_pn[BoxDescriptor::index(u, s)], phi(u, s) / minus[n + 1]));
    }
  if (L > n) {
    const BoxDescriptor bL{BoxDescriptor::Kind::Lambda, L}, bpL{BoxDescriptor::Kind::LambdaPrime, L};
    GreenSolver gL(assemble_operator(params, path, bL), E);
    GreenSolver gpL(assemble_operator(params, path, bpL), E);
    const Eigen::VectorXd cL = gL.column(n, Spin::minus);
    const Eigen::VectorXd cpL = gpL.column(n, Spin::plus);
    const double f1 = 1 - cL[BoxDescriptor::index(n, Spin::plus)];
    const double f2 = 1 + cpL[BoxDescriptor::index(n + 1, Spin::minus)];
    for (int u = 1; u <= n; ++u)
      for (Spin s : {Spin::minus, Spin::plus}) {
        if (bn.contains(u, s))
          r.big_to_small = std::max(r.big_to_small, rel(cL[BoxDescriptor::index(u, s)], f1 * col_n[BoxDescriptor::index(u, s)]));
        r.big_to_small_prime =
            std::max(r.big_to_small_prime, rel(cpL[BoxDescriptor::index(u, s)], f2 * col_pn[BoxDescriptor::index(u, s)]));
      }
  }
  return r;
}

namespace {

struct ScanFit {
  LinearFit fit;
  std::vector<double> mean, se;
};

std::vector<double> regressor(const std::vector<int>& n_grid, double alpha) {
  std::vector<double> x;
  for (int n : n_grid) x.push_back(std::pow(static_cast<double>(n), 1 - 2 * alpha));
  return x;
}

// vals[r][i]; fit log(mean_i) on x_i with delta-method weights
ScanFit fit_scan(const std::vector<std::vector<double>>& vals, const std::vector<std::size_t>& idx,
                 const std::vector<double>& x, const std::vector<double>* weights) {
  const std::size_t ng = x.size();
  ScanFit out;
  out.mean.assign(ng, 0);
  out.se.assign(ng, 0);
  std::vector<double> col(idx.size());
  for (std::size_t i = 0; i < ng; ++i) {
    for (std::size_t r = 0; r < idx.size(); ++r) col[r] = vals[idx[r]][i];
    auto ms = mean_stderr(col);
    out.mean[i] = ms.mean;
    out.se[i] = ms.stderr_;
  }
  std::vector<double> y(ng), w(ng);
  for (std::size_t i = 0; i < ng; ++i) {
    y[i] = std::log(out.mean[i]);
    const double sl = out.se[i] / out.mean[i];
    w[i] = sl > 0 ? 1 / (sl * sl) : 1.0;
  }
  out.fit = fit_line(x, y, weights ? std::span<const double>(*weights) : std::span<const double>(w));
  return out;
}

std::vector<std::size_t> iota(std::size_t n) {
  std::vector<std::size_t> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = i;
  return v;
}

}  // namespace

FmEstimate fractional_moment_scan(const ModelParams& params, const DistributionSpec& spec, double E, int u, double s,
                                  const std::vector<int>& n_grid, int L, std::int64_t M, std::uint64_t seed,
                                  const FmOptions& options) {
  if (!(s > 0 && s < 1)) throw Error(ErrorKind::invalid_argument, "s must lie in (0, 1)");
  if (n_grid.size() < 3) throw Error(ErrorKind::invalid_argument, "n grid needs at least 3 points");
  if (M < 2) throw Error(ErrorKind::invalid_argument, "need M >= 2 replicas");
  const BoxDescriptor box{BoxDescriptor::Kind::Lambda, L};
  require_member(box, u, options.sigma);
  for (int n : n_grid) require_member(box, n, options.sigma_p);
  FmEstimate est;
  est.s = s;
  est.n = n_grid;
  est.M = M;
  est.L = L;
  std::vector<std::vector<double>> vals(M, std::vector<double>(n_grid.size()));
  std::vector<int> redraws(M, 0);
  parallel_for(static_cast<std::size_t>(M), options.threads, [&](std::size_t r) {
    const std::uint64_t base = rng::replica_seed(seed, r);
    for (std::uint64_t attempt = 0;; ++attempt) {
      auto path = sample_path(params, spec, L, attempt == 0 ? base : rng::key(base, 0xa77ULL, attempt));
      auto op = assemble_operator(params, path, box);
      tridiag::Ldlt<double> f(op.diag, op.offdiag, E, green_pivot_tol);
      if (!f.ok()) {
        ++redraws[r];
        if (attempt >= 16) throw Error(ErrorKind::near_singular, "repeated near-singular draws");
        continue;
      }
      // symmetry: G(u; n) = G(n; u), one solve per replica
      const Eigen::VectorXd col = f.column(BoxDescriptor::index(u, options.sigma));
      for (std::size_t i = 0; i < n_grid.size(); ++i)
        vals[r][i] = std::pow(std::abs(col[BoxDescriptor::index(n_grid[i], options.sigma_p)]), s);
      return;
    }
  });
  for (int c : redraws) est.resamples += c;
  const auto x = regressor(n_grid, params.alpha.value());
  auto all = fit_scan(vals, iota(M), x, nullptr);
  est.values = all.mean;
  est.stderr_ = all.se;
  est.fit = all.fit;
  est.c_hat = -all.fit.slope;
  std::vector<double> w(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double sl = all.se[i] / all.mean[i];
    w[i] = sl > 0 ? 1 / (sl * sl) : 1.0;
  }
  est.slope_ci = bootstrap_ci(M, options.bootstrap, rng::key(seed, 0xf00dULL),
                              [&](const std::vector<std::size_t>& idx) { return fit_scan(vals, idx, x, &w).fit.slope; });
  for (std::size_t i = 0; i < n_grid.size(); ++i) {
    const double env =
        std::pow(params.lambda, -s) * (std::pow(params.a(u), -s) + std::pow(params.a(n_grid[i]), -s));
    est.apriori_constant = std::max(est.apriori_constant, est.values[i] / env);
  }
  est.significant = !est.slope_ci.contains(0.0);
  if (options.require_significance && !est.significant) throw InsufficientReplicas(est);
  return est;
}

NegativeMomentReport negative_moment_scan(const ModelParams& params, const DistributionSpec& spec, double E, int u,
                                          double s, const std::vector<int>& n_grid, std::int64_t M, std::uint64_t seed,
                                          const Eigen::Vector2d& phi0, int n0, int bootstrap, int threads) {
  if (n_grid.size() < 3) throw Error(ErrorKind::invalid_argument, "n grid needs at least 3 points");
  for (std::size_t i = 0; i < n_grid.size(); ++i)
    if (n_grid[i] <= u || (i > 0 && n_grid[i] <= n_grid[i - 1]))
      throw Error(ErrorKind::invalid_argument, "n grid must be increasing and beyond u");
  NegativeMomentReport rep;
  rep.s = s;
  rep.n = n_grid;
  rep.M = M;
  rep.n0 = n0;
  const int max_n = n_grid.back();
  const int nblocks = n0 > 0 ? std::max(1, max_n / n0) : 0;
  for (int l = 1; l <= nblocks; ++l) rep.blocks.push_back(l);
  const std::int64_t len = std::max<std::int64_t>(max_n, static_cast<std::int64_t>(nblocks) * n0 + 1);
  const Eigen::Vector2d start = phi0.normalized();
  std::vector<std::vector<double>> vals(M, std::vector<double>(n_grid.size()));
  std::vector<std::vector<double>> bvals(M, std::vector<double>(nblocks));
  parallel_for(static_cast<std::size_t>(M), threads, [&](std::size_t r) {
    auto path = sample_path(params, spec, len, rng::replica_seed(seed, r));
    int prev = u;
    ScaledVector acc{start, 0.0};
    for (std::size_t i = 0; i < n_grid.size(); ++i) {
      auto step = propagate(E, params.m, path, prev, n_grid[i], acc.unit);
      acc.unit = step.unit;
      acc.log_norm += step.log_norm;
      prev = n_grid[i];
      vals[r][i] = std::exp(-s * acc.log_norm);
    }
    for (int l = 1; l <= nblocks; ++l) {
      auto b = propagate(E, params.m, path, static_cast<std::int64_t>(l - 1) * n0 + 1,
                         static_cast<std::int64_t>(l) * n0 + 1, start);
      bvals[r][l - 1] = std::exp(-s * b.log_norm);
    }
  });
  const auto x = regressor(n_grid, params.alpha.value());
  auto all = fit_scan(vals, iota(M), x, nullptr);
  rep.values = all.mean;
  rep.stderr_ = all.se;
  rep.fit = all.fit;
  std::vector<double> w(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double sl = all.se[i] / all.mean[i];
    w[i] = sl > 0 ? 1 / (sl * sl) : 1.0;
  }
  rep.slope_ci = bootstrap_ci(M, bootstrap, rng::key(seed, 0xbeefULL),
                              [&](const std::vector<std::size_t>& idx) { return fit_scan(vals, idx, x, &w).fit.slope; });
  rep.block_c = INFINITY;
  std::vector<double> col(M);
  for (int l = 0; l < nblocks; ++l) {
    for (std::int64_t r = 0; r < M; ++r) col[r] = bvals[r][l];
    const double v = mean_stderr(col).mean;
    rep.block_values.push_back(v);
    rep.block_c = std::min(rep.block_c, (1 - v) * std::pow(l + 1.0, 2 * params.alpha.value()));
  }
  if (nblocks == 0) rep.block_c = 0;
  return rep;
}

void write_fm_csv(std::ostream& os, const FmEstimate& est, const ModelParams& params, double E,
                  const std::string& header) {
  if (!header.empty()) os << header;
  os << "n,mean_abs_G_pow_s,stderr,s,alpha,lambda,E,L,M\n";
  char buf[256];
  for (std::size_t i = 0; i < est.n.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%d,%lld\n", est.n[i], est.values[i],
                  est.stderr_[i], est.s, params.alpha.value(), params.lambda, E, est.L,
                  static_cast<long long>(est.M));
    os << buf;
  }
}

}  // namespace dirac

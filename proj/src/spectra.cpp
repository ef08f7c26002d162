#include "dirac/spectra.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>

#include "dirac/errors.hpp"
#include "dirac/lyapunov.hpp"
#include "dirac/tridiagonal.hpp"

namespace dirac {

SpectralDecomposition diagonalize(const TridiagonalOperator& op, EigenMethod method, Eigen::Index cap) {
  const Eigen::Index d = op.dimension();
  if (d > cap)
    throw Error(ErrorKind::invalid_argument, "dimension " + std::to_string(d) + " above cap " + std::to_string(cap));
  if (method == EigenMethod::automatic) method = d <= 400 ? EigenMethod::ql : EigenMethod::ql_inverse_iteration;
  SpectralDecomposition out;
  out.box = op.box;
  Eigen::VectorXd w = op.diag;
  if (method == EigenMethod::ql) {
    Eigen::MatrixXd z = Eigen::MatrixXd::Identity(d, d);
    tridiag::ql_implicit<double>(w, op.offdiag, &z);
    out.eigenvalues = w;
    out.eigenvectors = std::move(z);
  } else {
    tridiag::ql_implicit<double>(w, op.offdiag, nullptr);
    out.eigenvalues = w;
    out.eigenvectors = tridiag::inverse_iteration<double>(op.diag, op.offdiag, w);
  }
  return out;
}

SpectralDecomposition eigenpairs_in(const TridiagonalOperator& op, double a, double b) {
  SpectralDecomposition out;
  out.box = op.box;
  out.eigenvalues = tridiag::eigenvalues_in<double>(op.diag, op.offdiag, a, b);
  out.eigenvectors = tridiag::inverse_iteration<double>(op.diag, op.offdiag, out.eigenvalues);
  return out;
}

Eigen::VectorXd site_norms(const Eigen::VectorXd& v, int L) {
  Eigen::VectorXd r(L);
  for (int n = 1; n <= L; ++n) {
    const double m = v[2 * (n - 1)];
    const double p = 2 * (n - 1) + 1 < v.size() ? v[2 * (n - 1) + 1] : 0.0;
    r[n - 1] = std::hypot(m, p);
  }
  return r;
}

EigenProfileReport eigenfunction_profile(const ModelParams& params, const DistributionSpec& spec, double E_low,
                                         double E_high, int L, const std::vector<std::uint64_t>& seeds,
                                         const EigenProfileOptions& options) {
  const double alpha = params.alpha.value();
  std::vector<double> s_n(L + 1, 0.0), xs(L + 1, 0.0);
  {
    CompensatedSum acc;
    for (int n = 1; n <= L; ++n) {
      acc.add(std::pow(static_cast<double>(n), -2 * alpha));
      s_n[n] = acc.value();
      xs[n] = std::pow(static_cast<double>(n), 1 - 2 * alpha);
    }
  }
  std::vector<std::vector<EigenfunctionFit>> per_seed(seeds.size());
  parallel_for(seeds.size(), options.threads, [&](std::size_t si) {
    auto path = sample_path(params, spec, L, seeds[si]);
    auto op = assemble_operator(params, path, {BoxDescriptor::Kind::LambdaPrime, L});
    auto dec = eigenpairs_in(op, E_low, E_high);
    for (Eigen::Index j = 0; j < dec.eigenvalues.size(); ++j) {
      EigenfunctionFit f;
      f.seed_index = static_cast<int>(si);
      f.E = dec.eigenvalues[j];
      if (in_band_interior(f.E, params.m)) {
        auto ctx = energy_context(std::abs(f.E), params.m);
        if (!ctx.near_edge) f.beta = beta_closed_form(ctx, params.lambda);
      }
      const Eigen::VectorXd prof = site_norms(dec.eigenvectors.col(j), L);
      Eigen::Index arg;
      const double mx = prof.maxCoeff(&arg);
      f.centre = static_cast<int>(arg) + 1;
      int end = f.centre;
      while (end < L && prof[end] >= options.floor * mx) ++end;  // prof[end] is site end+1
      f.tail_end = end;
      std::vector<double> xs_s, xs_p, xs_l, y;
      for (int n = f.centre; n <= end; ++n) {
        xs_s.push_back(s_n[n]);
        xs_p.push_back(xs[n]);
        xs_l.push_back(std::log(static_cast<double>(n)));
        y.push_back(std::log(std::max(prof[n - 1], 1e-300)));
      }
      if (y.size() >= 3) {
        auto fs = fit_line(xs_s, y);
        f.slope = fs.slope;
        f.r2 = fs.r2;
        f.sule_slope = fit_line(xs_p, y).slope;
        f.kappa = -fit_line(xs_l, y).slope;
      }
      f.ratio = f.beta > 0 ? f.slope / f.beta : std::numeric_limits<double>::quiet_NaN();
      f.used = f.beta > 0 && f.centre <= options.centre_fraction * L && (end - f.centre + 1) >= options.min_tail;
      per_seed[si].push_back(f);
    }
  });
  EigenProfileReport rep;
  for (auto& v : per_seed) rep.fits.insert(rep.fits.end(), v.begin(), v.end());
  if (rep.fits.empty())
    throw Error(ErrorKind::window_empty, "no eigenvalues in [" + std::to_string(E_low) + ", " +
                                             std::to_string(E_high) + ")");
  std::vector<double> ratios, devs;
  for (const auto& f : rep.fits)
    if (f.used) {
      ratios.push_back(f.ratio);
      devs.push_back(std::abs(f.ratio + 1));
    }
  rep.used = ratios.size();
  rep.median_ratio = median(ratios);
  rep.median_abs_dev = median(devs);
  return rep;
}

CorrelatorTable correlator(const SpectralDecomposition& decomp, int u, Spin sigma, double I_low, double I_high,
                           const std::vector<double>& s_values) {
  const Eigen::Index d = decomp.eigenvectors.rows();
  const Eigen::Index src = static_cast<Eigen::Index>(BoxDescriptor::index(u, sigma));
  if (!decomp.box.contains(u, sigma) || src >= d)
    throw Error(ErrorKind::site_out_of_range, "correlator source outside the box");
  CorrelatorTable t;
  t.u = u;
  t.sigma = sigma;
  t.I_low = I_low;
  t.I_high = I_high;
  t.s_values = s_values;
  t.q.assign(s_values.size(), Eigen::VectorXd::Zero(d));
  t.q1 = Eigen::VectorXd::Zero(d);
  const auto& ev = decomp.eigenvalues;
  Eigen::Index j = 0;
  while (j < ev.size()) {
    if (ev[j] < I_low || ev[j] > I_high) {
      ++j;
      continue;
    }
    Eigen::Index end = j + 1;
    while (end < ev.size() && ev[end] <= I_high && ev[end] - ev[end - 1] < degenerate_merge_tol) ++end;
    // row u of the block projection
    Eigen::VectorXd row = Eigen::VectorXd::Zero(d);
    for (Eigen::Index b = j; b < end; ++b) row += decomp.eigenvectors(src, b) * decomp.eigenvectors.col(b);
    const Eigen::VectorXd a = row.cwiseAbs();
    t.q1 += a;
    const double diag = a[src];
    for (std::size_t k = 0; k < s_values.size(); ++k) {
      const double s = s_values[k];
      t.q[k] += std::pow(diag, 1 - s) * a.array().pow(s).matrix();
    }
    ++t.blocks;
    j = end;
  }
  return t;
}

CorrelatorScan correlator_scan(const ModelParams& params, const DistributionSpec& spec, double I_low, double I_high,
                               int u, Spin sigma, Spin sigma_p, const std::vector<int>& n_grid, int L, std::int64_t M,
                               std::uint64_t seed, int bootstrap, int threads) {
  if (n_grid.size() < 3) throw Error(ErrorKind::invalid_argument, "n grid needs at least 3 points");
  const BoxDescriptor box{BoxDescriptor::Kind::LambdaPrime, L};
  std::vector<std::vector<double>> vals(M, std::vector<double>(n_grid.size()));
  parallel_for(static_cast<std::size_t>(M), threads, [&](std::size_t r) {
    auto path = sample_path(params, spec, L, rng::replica_seed(seed, r));
    auto op = assemble_operator(params, path, box);
    auto dec = eigenpairs_in(op, I_low, I_high);
    auto t = correlator(dec, u, sigma, I_low, I_high);
    for (std::size_t i = 0; i < n_grid.size(); ++i) vals[r][i] = t.q1[BoxDescriptor::index(n_grid[i], sigma_p)];
  });
  CorrelatorScan sc;
  sc.n = n_grid;
  sc.M = M;
  std::vector<double> x;
  for (int n : n_grid) x.push_back(std::pow(static_cast<double>(n), 1 - 2 * params.alpha.value()));
  auto summarize = [&](const std::vector<std::size_t>* idx, std::vector<double>* mean, std::vector<double>* se,
                       const std::vector<double>* wfix) {
    const std::size_t cnt = idx ? idx->size() : static_cast<std::size_t>(M);
    std::vector<double> col(cnt), mu(x.size()), sd(x.size()), y(x.size()), w(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
      for (std::size_t r = 0; r < cnt; ++r) col[r] = vals[idx ? (*idx)[r] : r][i];
      auto ms = mean_stderr(col);
      mu[i] = ms.mean;
      sd[i] = ms.stderr_;
      y[i] = std::log(ms.mean);
      const double sl = ms.stderr_ / ms.mean;
      w[i] = sl > 0 ? 1 / (sl * sl) : 1.0;
    }
    if (mean) *mean = mu;
    if (se) *se = sd;
    return fit_line(x, y, wfix ? std::span<const double>(*wfix) : std::span<const double>(w));
  };
  sc.fit = summarize(nullptr, &sc.values, &sc.stderr_, nullptr);
  std::vector<double> w(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double sl = sc.stderr_[i] / sc.values[i];
    w[i] = sl > 0 ? 1 / (sl * sl) : 1.0;
  }
  sc.slope_ci = bootstrap_ci(M, bootstrap, rng::key(seed, 0xc0ULL),
                             [&](const std::vector<std::size_t>& idx) { return summarize(&idx, nullptr, nullptr, &w).slope; });
  return sc;
}

Eigen::VectorXcd evolve_state(const SpectralDecomposition& decomp, const Eigen::VectorXcd& psi0, double t) {
  const auto& V = decomp.eigenvectors;
  Eigen::VectorXd re = V.transpose() * psi0.real(), im = V.transpose() * psi0.imag();
  Eigen::VectorXd a(re.size()), b(re.size());
  for (Eigen::Index j = 0; j < re.size(); ++j) {
    const double c = std::cos(decomp.eigenvalues[j] * t), s = -std::sin(decomp.eigenvalues[j] * t);
    a[j] = re[j] * c - im[j] * s;
    b[j] = re[j] * s + im[j] * c;
  }
  Eigen::VectorXcd out(V.rows());
  out.real() = V * a;
  out.imag() = V * b;
  return out;
}

Eigen::VectorXcd embed_state(const Eigen::VectorXcd& psi, Eigen::Index dimension) {
  Eigen::VectorXcd out = Eigen::VectorXcd::Zero(dimension);
  for (Eigen::Index i = 0; i < psi.size(); ++i) {
    if (i < dimension)
      out[i] = psi[i];
    else if (psi[i] != std::complex<double>(0, 0))
      throw Error(ErrorKind::unsupported_initial_state, "initial state extends beyond the box");
  }
  return out;
}

Eigen::VectorXcd delta_state(const BoxDescriptor& box, int n, Spin s) {
  if (!box.contains(n, s)) throw Error(ErrorKind::unsupported_initial_state, "delta site outside the box");
  Eigen::VectorXcd v = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(box.dimension()));
  v[BoxDescriptor::index(n, s)] = 1.0;
  return v;
}

Eigen::VectorXcd project_window(const SpectralDecomposition& decomp, const Eigen::VectorXcd& psi0, double a,
                                double b) {
  const auto& V = decomp.eigenvectors;
  Eigen::VectorXd re = V.transpose() * psi0.real(), im = V.transpose() * psi0.imag();
  for (Eigen::Index j = 0; j < re.size(); ++j)
    if (decomp.eigenvalues[j] < a || decomp.eigenvalues[j] > b) re[j] = im[j] = 0;
  Eigen::VectorXcd out(V.rows());
  out.real() = V * re;
  out.imag() = V * im;
  const double nrm = out.norm();
  if (nrm == 0) throw Error(ErrorKind::window_empty, "projection of the initial state on the window vanishes");
  return out / nrm;
}

EvolutionTrace evolve(const SpectralDecomposition& decomp, const Eigen::VectorXcd& psi0,
                      const std::vector<double>& times, const EvolutionProbes& probes) {
  const auto& V = decomp.eigenvectors;
  const Eigen::Index d = V.rows();
  const Eigen::VectorXcd psi = embed_state(psi0, d);
  EvolutionTrace tr;
  tr.times = times;
  tr.probes = probes;
  tr.moments.assign(probes.moments.size(), {});
  tr.truncated.assign(probes.truncated.size(), {});
  tr.tails.assign(probes.tails.size(), {});
  tr.log_stretched.assign(probes.stretched.size(), {});
  const Eigen::VectorXd re = V.transpose() * psi.real(), im = V.transpose() * psi.imag();
  const Eigen::Index k = re.size();
  std::vector<double> site(d);
  for (Eigen::Index i = 0; i < d; ++i) site[i] = static_cast<double>(BoxDescriptor::site_of(i));
  // precomputed stretched weights 2 n^kappa
  std::vector<std::vector<double>> sw(probes.stretched.size(), std::vector<double>(d));
  for (std::size_t q = 0; q < probes.stretched.size(); ++q)
    for (Eigen::Index i = 0; i < d; ++i) sw[q][i] = 2 * std::pow(site[i], probes.stretched[q]);
  const std::size_t chunk = 64;
  for (std::size_t t0 = 0; t0 < times.size(); t0 += chunk) {
    const std::size_t nt = std::min(chunk, times.size() - t0);
    Eigen::MatrixXd A(k, nt), B(k, nt);
    for (std::size_t c = 0; c < nt; ++c) {
      const double t = times[t0 + c];
      for (Eigen::Index j = 0; j < k; ++j) {
        const double cs = std::cos(decomp.eigenvalues[j] * t), sn = -std::sin(decomp.eigenvalues[j] * t);
        A(j, c) = re[j] * cs - im[j] * sn;
        B(j, c) = re[j] * sn + im[j] * cs;
      }
    }
    const Eigen::MatrixXd PR = V * A, PI = V * B;
    for (std::size_t c = 0; c < nt; ++c) {
      Eigen::VectorXd prob = PR.col(c).cwiseAbs2() + PI.col(c).cwiseAbs2();
      CompensatedSum norm2;
      for (Eigen::Index i = 0; i < d; ++i) norm2.add(prob[i]);
      tr.norms.push_back(std::sqrt(norm2.value()));
      for (std::size_t q = 0; q < probes.moments.size(); ++q) {
        CompensatedSum s;
        for (Eigen::Index i = 0; i < d; ++i) s.add(prob[i] * std::pow(site[i], probes.moments[q]));
        tr.moments[q].push_back(s.value());
      }
      for (std::size_t q = 0; q < probes.truncated.size(); ++q) {
        CompensatedSum s;
        const double p = probes.truncated[q].first, N = probes.truncated[q].second;
        for (Eigen::Index i = 0; i < d; ++i) s.add(prob[i] * std::pow(std::min(site[i], N), p));
        tr.truncated[q].push_back(s.value());
      }
      for (std::size_t q = 0; q < probes.tails.size(); ++q) {
        CompensatedSum s;
        for (Eigen::Index i = 0; i < d; ++i)
          if (site[i] > probes.tails[q]) s.add(prob[i]);
        tr.tails[q].push_back(s.value());
      }
      for (std::size_t q = 0; q < probes.stretched.size(); ++q) {
        double mx = -INFINITY;
        for (Eigen::Index i = 0; i < d; ++i)
          if (prob[i] > 0) mx = std::max(mx, sw[q][i] + std::log(prob[i]));
        CompensatedSum s;
        for (Eigen::Index i = 0; i < d; ++i)
          if (prob[i] > 0) s.add(std::exp(sw[q][i] + std::log(prob[i]) - mx));
        tr.log_stretched[q].push_back(mx + std::log(s.value()));
      }
    }
  }
  return tr;
}

double time_average(const std::vector<double>& t, const std::vector<double>& v) {
  if (t.size() < 2) return v.empty() ? 0.0 : v[0];
  CompensatedSum s;
  for (std::size_t i = 1; i < t.size(); ++i) s.add(0.5 * (v[i] + v[i - 1]) * (t[i] - t[i - 1]));
  return s.value() / (t.back() - t.front());
}

const char* to_string(StretchedClass c) {
  switch (c) {
    case StretchedClass::bounded: return "bounded";
    case StretchedClass::growing: return "growing";
    case StretchedClass::box_limited: return "box_limited";
  }
  return "?";
}

std::vector<StretchedPoint> stretched_moment_probe(const SpectralDecomposition& small, const SpectralDecomposition& big,
                                                   const Eigen::VectorXcd& psi0, const std::vector<double>& kappa_grid,
                                                   double horizon, int steps, double tol) {
  EvolutionProbes pr;
  pr.stretched = kappa_grid;
  std::vector<double> t_small, t_big;
  for (int i = 0; i <= steps; ++i) t_small.push_back(horizon * i / steps);
  for (int i = 0; i <= 2 * steps; ++i) t_big.push_back(horizon * i / steps);
  auto a = evolve(small, embed_state(psi0, small.eigenvectors.rows()), t_small, pr);
  auto b = evolve(big, embed_state(psi0, big.eigenvectors.rows()), t_big, pr);
  std::vector<StretchedPoint> out;
  for (std::size_t q = 0; q < kappa_grid.size(); ++q) {
    StretchedPoint p;
    p.kappa = kappa_grid[q];
    const auto& la = a.log_stretched[q];
    const auto& lb = b.log_stretched[q];
    p.log_sup_T = *std::max_element(la.begin(), la.end());
    p.log_sup_T_big = *std::max_element(lb.begin(), lb.begin() + steps + 1);
    p.log_sup_2T = *std::max_element(lb.begin(), lb.end());
    p.horizon_log_ratio = p.log_sup_2T - p.log_sup_T_big;
    p.box_log_ratio = p.log_sup_T_big - p.log_sup_T;
    p.verdict = p.box_log_ratio > tol       ? StretchedClass::box_limited
                : p.horizon_log_ratio > tol ? StretchedClass::growing
                                            : StretchedClass::bounded;
    out.push_back(p);
  }
  return out;
}

RnReport rn_ratio_diagnostic(const EnergyContext& ctx, const DisorderPath& path, std::int64_t N) {
  ctx.require_analytic();
  if (near_excluded_k(ctx.k))
    throw Error(ErrorKind::excluded_k, "k = " + std::to_string(ctx.k) + " within guard of the excluded set");
  auto s1 = prufer_from_phi(Eigen::Vector2d(1, 0), 1, ctx);
  auto s2 = prufer_from_phi(Eigen::Vector2d(0, 1), 1, ctx);
  auto t1 = run_prufer(ctx, path, N, s1);
  auto t2 = run_prufer(ctx, path, N, s2);
  RnReport rep;
  rep.log_r.resize(t1.log_r.size());
  for (std::size_t i = 0; i < t1.log_r.size(); ++i) {
    rep.log_r[i] = t1.log_r[i] - t2.log_r[i];
    const double w = std::exp(t1.log_r[i] + t2.log_r[i]) * ctx.sin2k * std::sin(t1.theta[i] - t2.theta[i]);
    rep.wronskian_residual = std::max(rep.wronskian_residual, std::abs(std::abs(w) - 1));
  }
  const std::size_t a = static_cast<std::size_t>(N / 2), b = static_cast<std::size_t>(N);
  double lo = INFINITY, hi = -INFINITY;
  for (std::size_t i = a; i <= b && i < rep.log_r.size(); ++i) {
    lo = std::min(lo, rep.log_r[i]);
    hi = std::max(hi, rep.log_r[i]);
  }
  rep.tail_oscillation = hi - lo;
  return rep;
}

void write_spectrum_csv(std::ostream& os, const SpectralDecomposition& d, const std::string& header) {
  if (!header.empty()) os << header;
  os << "index,eigenvalue\n";
  char buf[64];
  for (Eigen::Index i = 0; i < d.eigenvalues.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%lld,%.17g\n", static_cast<long long>(i), d.eigenvalues[i]);
    os << buf;
  }
}

}  // namespace dirac

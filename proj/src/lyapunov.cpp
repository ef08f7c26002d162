#include "dirac/lyapunov.hpp"

#include <cmath>

#include "dirac/errors.hpp"
#include "dirac/prufer.hpp"
#include "dirac/transfer.hpp"

namespace dirac {

double beta_closed_form(const EnergyContext& ctx, double lambda) {
  ctx.require_analytic();
  return lambda * lambda * (ctx.p1 * ctx.p1 + ctx.p2 * ctx.p2) / (8 * ctx.sin2k * ctx.sin2k);
}

namespace {

struct ReplicaBeta {
  double log_r2 = 0;       // log R_{N+1}^2
  double control = 0;      // M3 + M4 + M5 + M6
  double log_norm = 0;     // log ||T_N ... T_1||
};

ReplicaBeta run_replica(const EnergyContext& ctx, const DisorderPath& path, std::int64_t N, double theta0,
                        bool with_product) {
  const double c1 = ctx.p2 / ctx.sin2k, c2 = ctx.p1 / ctx.sin2k, sk = ctx.sink, ck = ctx.cosk;
  CompensatedSum control;
  PruferState s;
  s.theta = theta0;
  for (std::int64_t j = 1; j <= N; ++j) {
    const double tb = s.theta_bar(ctx);
    const double v1 = path.V1(j), v2 = path.V2(j + 1);
    const double ct = std::cos(tb), st = std::sin(tb);
    const double cm = ct * ck + st * sk, sm = st * ck - ct * sk;
    const double s2t = 2 * st * ct, s2m = 2 * sm * cm;
    control.add(-c1 * s2t * v1 + c2 * s2m * v2 + (2 / sk) * ct * sm * v1 * v2 +
                (-2 * c1 * c2 * ck * ct * cm + c1 * c2 * s2t * s2m) * v1 * v2);
    s = prufer_step(s, ctx, path);
  }
  ReplicaBeta r;
  r.log_r2 = 2 * s.log_r;
  r.control = control.value();
  if (with_product) r.log_norm = product(ctx, path, 1, N + 1).log_norm();
  return r;
}

}  // namespace

LyapunovEstimate estimate_beta(const EnergyContext& ctx, const ModelParams& params, const DistributionSpec& spec,
                               std::int64_t N, std::int64_t M, std::uint64_t seed, const LyapunovOptions& options) {
  ctx.require_analytic();
  if (params.alpha.compare_half() > 0)
    throw Error(ErrorKind::subcritical_only, "alpha = " + params.alpha.str() + " > 1/2: s_N stays bounded");
  if (near_excluded_k(ctx.k))
    throw Error(ErrorKind::excluded_k, "k = " + std::to_string(ctx.k) + " within guard of the excluded set");
  if (N < 1 || M < 1) throw Error(ErrorKind::invalid_argument, "estimate_beta needs N >= 1 and M >= 1");
  LyapunovEstimate est;
  est.N = N;
  est.M = M;
  est.s_N = normalizer(params.alpha.value(), N);
  std::vector<ReplicaBeta> reps(M);
  parallel_for(static_cast<std::size_t>(M), options.threads, [&](std::size_t r) {
    const std::uint64_t base = rng::replica_seed(seed, r);
    for (std::uint64_t attempt = 0;; ++attempt) {
      try {
        auto path = sample_path(params, spec, N + 1, attempt == 0 ? base : rng::key(base, 0xa77ULL, attempt));
        reps[r] = run_replica(ctx, path, N, options.theta0, options.with_product);
        return;
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::degenerate_multiplier || attempt >= 8) throw;
      }
    }
  });
  std::vector<double> head(M), plain(M), prod(M);
  for (std::int64_t r = 0; r < M; ++r) {
    head[r] = 0.5 * (reps[r].log_r2 - reps[r].control) / est.s_N;
    plain[r] = 0.5 * reps[r].log_r2 / est.s_N;
    prod[r] = reps[r].log_norm / est.s_N;
  }
  auto h = mean_stderr(head), p = mean_stderr(plain), q = mean_stderr(prod);
  est.beta_hat = h.mean;
  est.stderr_ = h.stderr_;
  est.beta_prufer = p.mean;
  est.stderr_prufer = p.stderr_;
  if (options.with_product) {
    est.beta_product = q.mean;
    est.stderr_product = q.stderr_;
  } else {
    est.beta_product = est.stderr_product = std::nan("");
  }
  est.beta_median_of_means = median_of_means(head, options.mom_groups);
  est.per_replica = std::move(head);
  return est;
}

double phase_function(double E, double m) {
  const double e2 = E * E, m2 = m * m;
  if (e2 + m2 == 0) return 2.0;  // m = 0 limit at the band centre
  return 0.5 * (e2 - m2) * (m2 + 4 - e2) / (m2 + e2);
}

CriticalCoupling lambda_critical(double m) {
  if (!(m >= 0)) throw Error(ErrorKind::invalid_argument, "mass m must be >= 0");
  CriticalCoupling c;
  if (m == 0) {
    c.lambda_star = std::sqrt(2.0);
    c.E_star = 0;
    c.attained = false;
    return c;
  }
  const double m2 = m * m;
  const double root = std::sqrt(m2 + 2);
  const double w = 2 * m * root;  // optimal E^2 + m^2
  c.E_star = std::sqrt(w - m2);
  // 2 (m^2 + 1 - m sqrt(m^2 + 2)) = 2 / (m^2 + 1 + m sqrt(m^2 + 2))
  c.lambda_star = std::sqrt(2 / (m2 + 1 + m * root));
  return c;
}

std::optional<CriticalEnergies> critical_energies(double lambda, double m) {
  if (!(m >= 0)) throw Error(ErrorKind::invalid_argument, "mass m must be >= 0");
  const double m2 = m * m, l2 = lambda * lambda;
  // w^2 - B w + C = 0 with w = E^2 + m^2
  const double B = 4 * m2 + 4 - 2 * l2;
  const double C = 4 * m2 * (m2 + 2);
  // B^2 - 4C factored: (B - 2 sqrt C)(B + 2 sqrt C)
  const double sc = 2 * std::sqrt(C);
  // tangency (lambda = lambda*) counts as no interval; rounding would otherwise leave a sliver
  if (B <= 0 || B - sc <= 1e-12 * B) return std::nullopt;
  const double D = (B - sc) * (B + sc);
  const double wp = 0.5 * (B + std::sqrt(D));
  const double wm = C > 0 ? C / wp : 0.0;
  CriticalEnergies r;
  r.E_minus = std::sqrt(std::max(0.0, wm - m2));
  r.E_plus = std::sqrt(std::max(0.0, wp - m2));
  return r;
}

const char* to_string(AlphaClass c) {
  switch (c) {
    case AlphaClass::supercritical: return "supercritical";
    case AlphaClass::critical: return "critical";
    case AlphaClass::subcritical: return "subcritical";
  }
  return "?";
}

const char* to_string(SpectralType t) {
  switch (t) {
    case SpectralType::ac: return "ac";
    case SpectralType::pp: return "pp";
    case SpectralType::sc: return "sc";
    case SpectralType::outside_band: return "outside_band";
  }
  return "?";
}

RegimeReport classify(const ModelParams& params, double E) {
  RegimeReport r;
  const int c = params.alpha.compare_half();
  r.alpha_class = c > 0 ? AlphaClass::supercritical : c < 0 ? AlphaClass::subcritical : AlphaClass::critical;
  r.lambda_star = lambda_critical(params.m);
  if (c == 0) r.thresholds = critical_energies(params.lambda, params.m);
  if (!in_band_interior(E, params.m)) {
    r.spectral_type = SpectralType::outside_band;
    return r;
  }
  if (c > 0) {
    r.spectral_type = SpectralType::ac;
  } else if (c < 0) {
    r.spectral_type = SpectralType::pp;
  } else {
    const double a = std::abs(E);
    r.spectral_type = (r.thresholds && a > r.thresholds->E_minus && a < r.thresholds->E_plus) ? SpectralType::sc
                                                                                               : SpectralType::pp;
  }
  return r;
}

bool beta_exceeds_half(double E, double lambda, double m) { return lambda * lambda > phase_function(E, m); }

R4Report r4_boundedness_probe(const std::vector<double>& energies, const ModelParams& params,
                              const DistributionSpec& spec, std::int64_t N, std::int64_t M, std::uint64_t seed,
                              int threads, double plateau_tol) {
  if (N < 1 || M < 2) throw Error(ErrorKind::invalid_argument, "r4 probe needs N >= 1 and M >= 2");
  R4Report rep;
  rep.supercritical = params.alpha.compare_half() > 0;
  std::vector<EnergyContext> ctxs;
  for (double E : energies) {
    ctxs.push_back(energy_context(E, params.m));
    ctxs.back().require_analytic();
  }
  const std::size_t ne = energies.size();
  // log R^4 at N+1 and 2N+1, [energy][replica]; paths shared across energies
  std::vector<std::vector<double>> a(ne, std::vector<double>(M)), b(ne, std::vector<double>(M));
  parallel_for(static_cast<std::size_t>(M), threads, [&](std::size_t r) {
    auto path = sample_path(params, spec, 2 * N + 1, rng::replica_seed(seed, r));
    for (std::size_t e = 0; e < ne; ++e) {
      PruferState s;
      for (std::int64_t j = 1; j <= 2 * N; ++j) {
        s = prufer_step(s, ctxs[e], path);
        if (j == N) a[e][r] = 4 * s.log_r;
      }
      b[e][r] = 4 * s.log_r;
    }
  });
  rep.sup_log_mean_r4 = -INFINITY;
  for (std::size_t e = 0; e < ne; ++e) {
    R4Point p;
    p.E = energies[e];
    p.log_mean_r4_N = log_mean_exp(a[e]);
    p.log_mean_r4_2N = log_mean_exp(b[e]);
    p.ratio = std::exp(p.log_mean_r4_2N - p.log_mean_r4_N);
    const auto& xa = a[e];
    const auto& xb = b[e];
    p.ratio_ci = bootstrap_ci(M, 200, rng::key(seed, 0x44ULL, e), [&](const std::vector<std::size_t>& idx) {
      std::vector<double> sa, sb;
      for (auto i : idx) {
        sa.push_back(xa[i]);
        sb.push_back(xb[i]);
      }
      return std::exp(log_mean_exp(sb) - log_mean_exp(sa));
    });
    rep.sup_log_mean_r4 = std::max({rep.sup_log_mean_r4, p.log_mean_r4_N, p.log_mean_r4_2N});
    rep.max_ratio = std::max(rep.max_ratio, p.ratio);
    rep.points.push_back(p);
  }
  // smallest c' with sum_{j<=2N} log(1 + c' j^{-2 alpha}) >= sup log E R^4
  const double alpha = params.alpha.value();
  auto log_env = [&](double c) {
    CompensatedSum s;
    for (std::int64_t j = 2 * N; j >= 1; --j) s.add(std::log1p(c * std::pow(static_cast<double>(j), -2 * alpha)));
    return s.value();
  };
  if (rep.sup_log_mean_r4 > 0) {
    double lo = 0, hi = 1;
    while (log_env(hi) < rep.sup_log_mean_r4 && hi < 1e12) hi *= 2;
    for (int it = 0; it < 100; ++it) {
      double mid = 0.5 * (lo + hi);
      (log_env(mid) < rep.sup_log_mean_r4 ? lo : hi) = mid;
    }
    rep.envelope_constant = hi;
  }
  rep.plateau = rep.max_ratio <= 1 + plateau_tol;
  return rep;
}

}  // namespace dirac

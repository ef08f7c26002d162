#include "dirac/prufer.hpp"

#include <cmath>
#include <numbers>
#include <ostream>

#include "dirac/errors.hpp"
#include "dirac/stats.hpp"

namespace dirac {

namespace {

constexpr long double two_pi_l = 6.283185307179586476925286766559L;

// j * k reduced to (-pi, pi]
double phase(std::int64_t j, double k) {
  long double x = std::fmod(static_cast<long double>(j) * static_cast<long double>(k), two_pi_l);
  if (x > two_pi_l / 2) x -= two_pi_l;
  if (x <= -two_pi_l / 2) x += two_pi_l;
  return static_cast<double>(x);
}

double wrap(double x) { return std::remainder(x, 2 * std::numbers::pi); }

void require_positive_band(const EnergyContext& ctx) {
  ctx.require_analytic();
  if (!(ctx.p1 < 0 && ctx.p2 > 0))
    throw Error(ErrorKind::energy_out_of_band, "Prufer analytics need E in the positive band");
}

}  // namespace

double theta_bar(double theta, std::int64_t n, double k) { return wrap(wrap(theta) - phase(2 * n - 1, k)); }

double PruferState::theta_bar(const EnergyContext& ctx) const { return dirac::theta_bar(theta, n, ctx.k); }

BasisMatrix basis_at(const EnergyContext& ctx, std::int64_t n, System system) {
  require_positive_band(ctx);
  const double a = phase(2 * n - 1, ctx.k), b = phase(2 * n - 2, ctx.k);
  const double sgn = (n - 1) % 2 == 0 ? 1.0 : -1.0;
  const double r2 = std::sqrt(ctx.p2), r1 = std::sqrt(-ctx.p1);
  BasisMatrix B;
  B.n = n;
  B.system = system;
  if (system == System::first)
    B.entries << -r2 * std::cos(a), -r2 * std::sin(a), r1 * std::cos(b), r1 * std::sin(b);
  else
    B.entries << r1 * std::cos(a), r1 * std::sin(a), r2 * std::cos(b), r2 * std::sin(b);
  B.entries *= sgn;
  return B;
}

std::complex<double> prufer_multiplier(const EnergyContext& ctx, double tb, double v1, double v2, System system) {
  using namespace std::complex_literals;
  const double c1 = ctx.p2 / ctx.sin2k, c2 = ctx.p1 / ctx.sin2k, c3 = 1.0 / ctx.sink;
  const double ct = std::cos(tb), st = std::sin(tb);
  // theta_bar - k via angle subtraction
  const double ck = ct * ctx.cosk + st * ctx.sink, sk = st * ctx.cosk - ct * ctx.sink;
  const std::complex<double> e0(ct, -st), e1(ck, -sk);
  if (system == System::first)
    return 1.0 - 1i * c1 * v1 * ct * e0 + 1i * c2 * v2 * ck * e1 + 1i * c3 * v1 * v2 * ct * e1;
  return 1.0 - 1i * c1 * v1 * ck * e1 + 1i * c2 * v2 * ct * e0 + 1i * c3 * v1 * v2 * ct * e1;
}

double radius_gamma(const EnergyContext& ctx, double tb, double v1, double v2) {
  const double c1 = ctx.p2 / ctx.sin2k, c2 = ctx.p1 / ctx.sin2k, sk = ctx.sink, ck = ctx.cosk;
  const double ct = std::cos(tb), st = std::sin(tb);
  const double cm = ct * ck + st * sk, sm = st * ck - ct * sk;  // cos, sin of (theta_bar - k)
  const double s2 = 2 * st * ct, s2m = 2 * sm * cm;
  return -c1 * s2 * v1 + c2 * s2m * v2 + (2 / sk) * ct * sm * v1 * v2 + c1 * c1 * ct * ct * v1 * v1 +
         c2 * c2 * cm * cm * v2 * v2 + ct * ct * v1 * v1 * v2 * v2 / (sk * sk) -
         2 * c1 * c2 * ck * ct * cm * v1 * v2 - 2 * ctx.p2 / (sk * ctx.sin2k) * ck * ct * ct * v1 * v1 * v2 +
         2 * ctx.p1 / (sk * ctx.sin2k) * ct * cm * v1 * v2 * v2;
}

PruferState prufer_step(const PruferState& s, const EnergyContext& ctx, const DisorderPath& path) {
  const std::int64_t n = s.n;
  const bool first = s.system == System::first;
  if (n < 1 || (first ? n + 1 : n) > path.length())
    throw Error(ErrorKind::site_out_of_range, "Prufer step at site " + std::to_string(n));
  // theta_bar is fixed before V1(n), V2(n+1) are read
  const double tb = s.theta_bar(ctx);
  const double v1 = path.V1(n), v2 = first ? path.V2(n + 1) : path.V2(n);
  const auto mult = prufer_multiplier(ctx, tb, v1, v2, s.system);
  const double mag = std::abs(mult);
  if (mag < degenerate_multiplier_tol)
    throw Error(ErrorKind::degenerate_multiplier, "|multiplier| = " + std::to_string(mag) + " at site " +
                                                      std::to_string(n));
  PruferState out = s;
  out.log_r += std::log(mag);
  out.theta += std::arg(mult);
  out.n = n + 1;
  return out;
}

Eigen::Vector2d prufer_psi(const PruferState& s) {
  const double r = std::exp(s.log_r);
  return {r * std::cos(s.theta), r * std::sin(s.theta)};
}

Eigen::Vector2d prufer_phi(const PruferState& s, const EnergyContext& ctx) {
  return basis_at(ctx, s.n, s.system).entries * prufer_psi(s);
}

PruferState prufer_from_phi(const Eigen::Vector2d& phi, std::int64_t n, const EnergyContext& ctx, System system) {
  const Eigen::Vector2d psi = basis_at(ctx, n, system).entries.inverse() * phi;
  PruferState s;
  s.n = n;
  s.system = system;
  s.log_r = std::log(psi.norm());
  s.theta = std::atan2(psi[1], psi[0]);
  return s;
}

PruferTrajectory run_prufer(const EnergyContext& ctx, const DisorderPath& path, std::int64_t N,
                            const PruferState& start, bool record) {
  require_positive_band(ctx);
  const std::int64_t last = start.system == System::first ? start.n + N : start.n + N - 1;
  if (N < 0 || last > path.length())
    throw Error(ErrorKind::site_out_of_range, "run_prufer: " + std::to_string(N) + " steps exceed path length");
  PruferTrajectory t;
  PruferState s = start;
  auto push = [&] {
    if (!record) return;
    t.log_r.push_back(s.log_r);
    t.theta.push_back(s.theta);
    t.theta_bar.push_back(s.theta_bar(ctx));
  };
  if (record) {
    t.log_r.reserve(N + 1);
    t.theta.reserve(N + 1);
    t.theta_bar.reserve(N + 1);
  }
  push();
  for (std::int64_t i = 0; i < N; ++i) {
    s = prufer_step(s, ctx, path);
    push();
  }
  t.final = s;
  return t;
}

PruferTrajectory run_prufer(const EnergyContext& ctx, const DisorderPath& path, std::int64_t N, double theta0,
                            System system, bool record) {
  PruferState s;
  s.theta = theta0;
  s.system = system;
  return run_prufer(ctx, path, N, s, record);
}

void write_trajectory_csv(std::ostream& os, const PruferTrajectory& t, const std::string& header) {
  if (!header.empty()) os << header;
  os << "n,log_r,theta,theta_bar\n";
  char buf[128];
  for (std::size_t i = 0; i < t.log_r.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.17g\n", i + 1, t.log_r[i], t.theta[i], t.theta_bar[i]);
    os << buf;
  }
}

bool near_excluded_k(double k, double guard) {
  constexpr double pi = std::numbers::pi;
  for (double e : {-5 * pi / 8, -3 * pi / 4, -7 * pi / 8})
    if (std::abs(k - e) < guard) return true;
  return false;
}

MartingaleReport martingale_diagnostics(const EnergyContext& ctx, const DisorderPath& path, std::int64_t N,
                                        double theta0) {
  require_positive_band(ctx);
  if (near_excluded_k(ctx.k))
    throw Error(ErrorKind::excluded_k, "k = " + std::to_string(ctx.k) + " within guard of the excluded set");
  if (N + 1 > path.length()) throw Error(ErrorKind::site_out_of_range, "martingale_diagnostics: path too short");
  const double c1 = ctx.p2 / ctx.sin2k, c2 = ctx.p1 / ctx.sin2k, sk = ctx.sink, ck = ctx.cosk;
  const ModelParams& P = path.params;
  CompensatedSum drift, M[6], Q[2], K, absK, logr2;
  PruferState s;
  s.theta = theta0;
  for (std::int64_t j = 1; j <= N; ++j) {
    const double tb = s.theta_bar(ctx);
    const double v1 = path.V1(j), v2 = path.V2(j + 1);
    const double ev1 = P.sd(j) * P.sd(j), ev2 = P.sd(j + 1) * P.sd(j + 1);
    const double ct = std::cos(tb), st = std::sin(tb);
    const double cm = ct * ck + st * sk, sm = st * ck - ct * sk;
    const double c2t = ct * ct - st * st, s2t = 2 * st * ct;
    const double c2m = cm * cm - sm * sm, s2m = 2 * sm * cm;
    const double c4t = c2t * c2t - s2t * s2t, c4m = c2m * c2m - s2m * s2m;
    // cos^2 x - 1/2 sin^2 2x = 1/4 + 1/2 cos 2x + 1/4 cos 4x
    const double w1 = 0.25 + 0.5 * c2t + 0.25 * c4t, w2 = 0.25 + 0.5 * c2m + 0.25 * c4m;
    drift.add(c1 * c1 / 4 * ev1 + c2 * c2 / 4 * ev2);
    const double m1 = c1 * c1 * w1 * (v1 * v1 - ev1);
    const double m2 = c2 * c2 * w2 * (v2 * v2 - ev2);
    const double m3 = -c1 * s2t * v1;
    const double m4 = c2 * s2m * v2;
    const double m5 = (2 / sk) * ct * sm * v1 * v2;
    const double m6 = (-2 * c1 * c2 * ck * ct * cm + c1 * c2 * s2t * s2m) * v1 * v2;
    const double q1 = c1 * c1 * (0.5 * c2t + 0.25 * c4t) * ev1;
    const double q2 = c2 * c2 * (0.5 * c2m + 0.25 * c4m) * ev2;
    M[0].add(m1);
    M[1].add(m2);
    M[2].add(m3);
    M[3].add(m4);
    M[4].add(m5);
    M[5].add(m6);
    Q[0].add(q1);
    Q[1].add(q2);
    const double second_order = c1 * c1 / 4 * ev1 + c2 * c2 / 4 * ev2 + m1 + m2 + m3 + m4 + m5 + m6 + q1 + q2;
    const double before = s.log_r;
    s = prufer_step(s, ctx, path);
    const double inc = 2 * (s.log_r - before);
    logr2.add(inc);
    K.add(inc - second_order);
    absK.add(std::abs(inc - second_order));
  }
  MartingaleReport r;
  r.N = N;
  r.log_r2 = logr2.value();
  r.drift = drift.value();
  double parts = r.drift;
  for (int i = 0; i < 6; ++i) {
    r.M[i] = M[i].value();
    parts += r.M[i];
  }
  for (int i = 0; i < 2; ++i) {
    r.Q[i] = Q[i].value();
    parts += r.Q[i];
  }
  r.remainder = K.value();
  r.abs_remainder = absK.value();
  r.residual = r.log_r2 - parts;
  r.s_N = normalizer(P.alpha.value(), N);
  return r;
}

double chebyshev_defect(double k, int count) {
  double worst = 0;
  const double c = 2 * std::cos(k);
  for (int m = 2; m <= count; ++m) {
    const double v = std::cos(phase(m, k)), v1 = std::cos(phase(m - 1, k)), v2 = std::cos(phase(m - 2, k));
    const double u = std::sin(phase(m + 1, k)) / std::sin(k), u1 = std::sin(phase(m, k)) / std::sin(k),
                 u2 = std::sin(phase(m - 1, k)) / std::sin(k);
    worst = std::max({worst, std::abs(v - c * v1 + v2), std::abs(u - c * u1 + u2)});
  }
  return worst;
}

}  // namespace dirac

#include "dirac/transfer.hpp"

#include <cmath>

#include "dirac/errors.hpp"
#include "dirac/stats.hpp"

namespace dirac {

namespace {

constexpr double rescale_low = 1e-8;
constexpr double rescale_high = 1e8;

void check_range(const DisorderPath& path, std::int64_t u, std::int64_t n, System system) {
  // first system at site j reads V2(j+1)
  std::int64_t need = system == System::first ? n : n - 1;
  if (u < 1 || n < u || need > path.length())
    throw Error(ErrorKind::site_out_of_range, "range [" + std::to_string(u) + ", " + std::to_string(n) +
                                                  "] outside path of length " + std::to_string(path.length()));
}

}  // namespace

Eigen::Matrix2d transfer_entries(double E, double m, double v1, double v2, System system) {
  const double a = m - E + v1;  // p_{n,1}
  const double b = m + E - v2;  // p_{n+1,2} (first) or p_{n,2} (second)
  Eigen::Matrix2d T;
  if (system == System::first)
    T << a * b + 1, b, a, 1;
  else
    T << a * b + 1, a, b, 1;
  return T;
}

Eigen::Matrix2d free_transfer(const EnergyContext& ctx, System system) {
  return transfer_entries(ctx.E, ctx.m, 0, 0, system);
}

TransferMatrix transfer_at(const EnergyContext& ctx, const DisorderPath& path, std::int64_t n, System system) {
  check_range(path, n, n + 1, system);
  const double v2 = system == System::first ? path.V2(n + 1) : path.V2(n);
  return {transfer_entries(ctx.E, ctx.m, path.V1(n), v2, system), system, n};
}

Decomposition decomposition(const EnergyContext& ctx, System system) {
  Decomposition d;
  if (system == System::first) {
    d.A1 << ctx.p2, 0, 1, 0;
    d.A2 << -ctx.p1, -1, 0, 0;
  } else {
    d.A1 << ctx.p2, 1, 0, 0;
    d.A2 << -ctx.p1, 0, -1, 0;
  }
  d.A3 << -1, 0, 0, 0;
  return d;
}

double spectral_norm(const Eigen::Matrix2d& A) {
  const double a = A(0, 0), b = A(0, 1), c = A(1, 0), d = A(1, 1);
  return 0.5 * (std::hypot(a + d, b - c) + std::hypot(a - d, b + c));
}

double ScaledProduct::log_norm() const { return log_scale + std::log(spectral_norm(unit)); }

ScaledProduct product_at_energy(double E, double m, const DisorderPath& path, std::int64_t u, std::int64_t n,
                                System system) {
  check_range(path, u, n, system);
  ScaledProduct P;
  P.u = u;
  P.n = n;
  CompensatedSum scale;
  Eigen::Matrix2d acc = Eigen::Matrix2d::Identity();
  for (std::int64_t j = u; j < n; ++j) {
    const double v2 = system == System::first ? path.V2(j + 1) : path.V2(j);
    acc = transfer_entries(E, m, path.V1(j), v2, system) * acc;
    const double nrm = spectral_norm(acc);
    if (nrm > rescale_high || nrm < rescale_low) {
      acc /= nrm;
      scale.add(std::log(nrm));
    }
  }
  const double nrm = spectral_norm(acc);
  acc /= nrm;
  scale.add(std::log(nrm));
  P.unit = acc;
  P.log_scale = scale.value();
  return P;
}

ScaledProduct product(const EnergyContext& ctx, const DisorderPath& path, std::int64_t u, std::int64_t n,
                      System system) {
  return product_at_energy(ctx.E, ctx.m, path, u, n, system);
}

ScaledVector propagate(double E, double m, const DisorderPath& path, std::int64_t u, std::int64_t n,
                       const Eigen::Vector2d& phi0, System system) {
  check_range(path, u, n, system);
  ScaledVector r;
  CompensatedSum scale;
  Eigen::Vector2d x = phi0;
  for (std::int64_t j = u; j < n; ++j) {
    const double v2 = system == System::first ? path.V2(j + 1) : path.V2(j);
    const double a = m - E + path.V1(j);
    const double b = m + E - v2;
    if (system == System::first) {
      // (phi+, phi-) -> phi-' = phi- + a phi+, phi+' = phi+ + b phi-'
      double minus = x[1] + a * x[0];
      x = Eigen::Vector2d(x[0] + b * minus, minus);
    } else {
      // (phi-_j, phi+_{j-1}) -> phi+_j = phi+_{j-1} + b phi-_j, phi-_{j+1} = phi-_j + a phi+_j
      double plus = x[1] + b * x[0];
      x = Eigen::Vector2d(x[0] + a * plus, plus);
    }
    const double nrm = std::abs(x[0]) + std::abs(x[1]);
    if (nrm > rescale_high || nrm < rescale_low) {
      x /= nrm;
      scale.add(std::log(nrm));
    }
  }
  const double nrm = x.norm();
  r.unit = x / nrm;
  scale.add(std::log(nrm));
  r.log_norm = scale.value();
  return r;
}

NormBracket norm_from_two_angles(const Eigen::Matrix2d& A, double t1, double t2) {
  const double n1 = (A * Eigen::Vector2d(std::cos(t1), std::sin(t1))).norm();
  const double n2 = (A * Eigen::Vector2d(std::cos(t2), std::sin(t2))).norm();
  NormBracket b;
  b.log_lower = std::log(std::max(n1, n2));
  b.log_upper = b.log_lower - std::log(std::sin(std::abs(t1 - t2) / 2));
  return b;
}

NormBracket norm_from_two_angles(const ScaledProduct& P, double t1, double t2) {
  NormBracket b = norm_from_two_angles(P.unit, t1, t2);
  b.log_lower += P.log_scale;
  b.log_upper += P.log_scale;
  return b;
}

NormBracket norm_from_two_angles(const EnergyContext& ctx, const DisorderPath& path, std::int64_t u, std::int64_t n,
                                 double t1, double t2) {
  auto a = propagate(ctx.E, ctx.m, path, u, n, Eigen::Vector2d(std::cos(t1), std::sin(t1)));
  auto b = propagate(ctx.E, ctx.m, path, u, n, Eigen::Vector2d(std::cos(t2), std::sin(t2)));
  NormBracket r;
  r.log_lower = std::max(a.log_norm, b.log_norm);
  r.log_upper = r.log_lower - std::log(std::sin(std::abs(t1 - t2) / 2));
  return r;
}

}  // namespace dirac

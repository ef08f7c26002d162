#include "dirac/model.hpp"

#include <charconv>
#include <cmath>
#include <numbers>
#include <numeric>

#include "dirac/disorder.hpp"
#include "dirac/errors.hpp"

namespace dirac {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::energy_out_of_band: return "EnergyOutOfBand";
    case ErrorKind::near_band_edge: return "NearBandEdge";
    case ErrorKind::path_too_short: return "PathTooShort";
    case ErrorKind::site_out_of_range: return "SiteOutOfRange";
    case ErrorKind::degenerate_multiplier: return "DegenerateMultiplier";
    case ErrorKind::excluded_k: return "ExcludedK";
    case ErrorKind::subcritical_only: return "SubcriticalOnly";
    case ErrorKind::near_singular: return "NearSingular";
    case ErrorKind::convergence_failure: return "ConvergenceFailure";
    case ErrorKind::window_empty: return "WindowEmpty";
    case ErrorKind::unsupported_initial_state: return "UnsupportedInitialState";
    case ErrorKind::insufficient_replicas: return "InsufficientReplicas";
    case ErrorKind::invalid_argument: return "InvalidArgument";
  }
  return "Error";
}

DecayExponent::DecayExponent(std::int64_t num, std::int64_t den) {
  if (den == 0) throw Error(ErrorKind::invalid_argument, "zero denominator in exponent");
  if (den < 0) {
    num = -num;
    den = -den;
  }
  std::int64_t g = std::gcd(num, den);
  if (g == 0) g = 1;
  num_ = num / g;
  den_ = den / g;
}

DecayExponent DecayExponent::parse(std::string_view text) {
  auto bad = [&] { return Error(ErrorKind::invalid_argument, "cannot parse exponent '" + std::string(text) + "'"); };
  if (auto slash = text.find('/'); slash != std::string_view::npos) {
    std::int64_t p = 0, q = 0;
    auto a = text.substr(0, slash), b = text.substr(slash + 1);
    if (std::from_chars(a.data(), a.data() + a.size(), p).ec != std::errc{} ||
        std::from_chars(b.data(), b.data() + b.size(), q).ec != std::errc{})
      throw bad();
    return DecayExponent(p, q);
  }
  // decimal with optional exponent
  std::string_view mant = text;
  int exp10 = 0;
  if (auto epos = text.find_first_of("eE"); epos != std::string_view::npos) {
    mant = text.substr(0, epos);
    auto es = text.substr(epos + 1);
    if (!es.empty() && es[0] == '+') es.remove_prefix(1);
    if (std::from_chars(es.data(), es.data() + es.size(), exp10).ec != std::errc{}) throw bad();
  }
  bool neg = false;
  if (!mant.empty() && (mant[0] == '-' || mant[0] == '+')) {
    neg = mant[0] == '-';
    mant.remove_prefix(1);
  }
  std::int64_t num = 0;
  int frac_digits = 0;
  bool seen_dot = false, any = false;
  for (char c : mant) {
    if (c == '.') {
      if (seen_dot) throw bad();
      seen_dot = true;
      continue;
    }
    if (c < '0' || c > '9') throw bad();
    if (num > (INT64_MAX - 9) / 10) throw bad();
    num = num * 10 + (c - '0');
    any = true;
    if (seen_dot) ++frac_digits;
  }
  if (!any) throw bad();
  int scale = exp10 - frac_digits;
  std::int64_t den = 1;
  for (; scale > 0; --scale) num *= 10;
  for (; scale < 0; ++scale) {
    if (den > INT64_MAX / 10) throw bad();
    den *= 10;
  }
  return DecayExponent(neg ? -num : num, den);
}

DecayExponent DecayExponent::from_double(double x) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, x);
  return parse(std::string_view(buf, res.ptr - buf));
}

int DecayExponent::compare_half() const {
  // den_ > 0
  __int128 lhs = static_cast<__int128>(2) * num_;
  if (lhs < den_) return -1;
  if (lhs > den_) return 1;
  return 0;
}

std::string DecayExponent::str() const {
  if (den_ == 1) return std::to_string(num_);
  return std::to_string(num_) + "/" + std::to_string(den_);
}

double Envelope::at(double alpha, std::int64_t n) const {
  switch (kind) {
    case Kind::power: return std::pow(static_cast<double>(n), -alpha);
    case Kind::shifted_power: return std::pow(static_cast<double>(n) + shift, -alpha);
    case Kind::constant: return 1.0;
  }
  return 1.0;
}

void ModelParams::validate() const {
  if (!(m >= 0)) throw Error(ErrorKind::invalid_argument, "mass m must be >= 0");
  if (!(lambda >= 0)) throw Error(ErrorKind::invalid_argument, "coupling lambda must be >= 0");
  if (alpha.num() <= 0) throw Error(ErrorKind::invalid_argument, "alpha must be > 0");
  if (envelope.kind == Envelope::Kind::shifted_power && !(envelope.shift > -1))
    throw Error(ErrorKind::invalid_argument, "envelope shift must be > -1");
}

void EnergyContext::require_analytic() const {
  if (near_edge)
    throw Error(ErrorKind::near_band_edge, "sin(2k) = " + std::to_string(sin2k) + " below guard at E = " +
                                               std::to_string(E));
}

double SpectralWindow::outer() const { return std::sqrt(m * m + 4); }

bool in_band_interior(double E, double m) {
  double a = std::abs(E);
  return a > m && a < std::sqrt(m * m + 4);
}

EnergyContext energy_context(double E, double m) {
  if (!(m >= 0)) throw Error(ErrorKind::invalid_argument, "mass m must be >= 0");
  if (!(E > m && E < std::sqrt(m * m + 4)))
    throw Error(ErrorKind::energy_out_of_band,
                "E = " + std::to_string(E) + " outside (m, sqrt(m^2+4)) for m = " + std::to_string(m));
  EnergyContext c;
  c.E = E;
  c.m = m;
  c.p1 = m - E;
  c.p2 = m + E;
  double half = std::sqrt(-c.p1 * c.p2) / 2;  // = -cos k
  c.k = -std::numbers::pi + std::acos(half);
  c.cosk = -half;
  c.sink = -std::sqrt((1 - half) * (1 + half));
  c.sin2k = 0.5 * std::sqrt((E * E - m * m) * (m * m + 4 - E * E));
  c.near_edge = c.sin2k < band_edge_guard;
  return c;
}

bool BoxDescriptor::contains(int n, Spin s) const {
  if (n < 1 || n > l) return false;
  if (kind == Kind::Lambda && n == l && s == Spin::plus) return false;
  return true;
}

Eigen::MatrixXd TridiagonalOperator::dense() const {
  const Eigen::Index d = diag.size();
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(d, d);
  A.diagonal() = diag;
  for (Eigen::Index i = 0; i + 1 < d; ++i) A(i, i + 1) = A(i + 1, i) = offdiag[i];
  return A;
}

double TridiagonalOperator::norm_bound() const {
  double r = 0;
  const Eigen::Index d = diag.size();
  for (Eigen::Index i = 0; i < d; ++i) {
    double s = std::abs(diag[i]);
    if (i > 0) s += std::abs(offdiag[i - 1]);
    if (i + 1 < d) s += std::abs(offdiag[i]);
    r = std::max(r, s);
  }
  return r;
}

TridiagonalOperator assemble_operator(const ModelParams& params, const DisorderPath& path, const BoxDescriptor& box) {
  if (box.l < 1) throw Error(ErrorKind::invalid_argument, "box index l must be >= 1");
  if (path.length() < box.l)
    throw Error(ErrorKind::path_too_short, "path length " + std::to_string(path.length()) + " < box size " +
                                               std::to_string(box.l));
  const auto d = static_cast<Eigen::Index>(box.dimension());
  TridiagonalOperator op;
  op.box = box;
  op.diag.resize(d);
  op.offdiag.resize(d - 1);
  for (Eigen::Index i = 0; i < d; ++i) {
    const int n = BoxDescriptor::site_of(i);
    op.diag[i] = BoxDescriptor::spin_of(i) == Spin::minus ? -params.m + path.V2(n) : params.m + path.V1(n);
    if (i + 1 < d) op.offdiag[i] = (i % 2 == 0) ? 1.0 : -1.0;
  }
  return op;
}

}  // namespace dirac

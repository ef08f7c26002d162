#include "dirac/disorder.hpp"

#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

#include "dirac/errors.hpp"
#include "dirac/stats.hpp"

namespace dirac {

const char* to_string(Family f) {
  switch (f) {
    case Family::gaussian: return "gaussian";
    case Family::uniform: return "uniform";
    case Family::rademacher: return "rademacher";
    case Family::student_like: return "student_like";
  }
  return "?";
}

Family family_from_string(const std::string& name) {
  for (Family f : {Family::gaussian, Family::uniform, Family::rademacher, Family::student_like})
    if (name == to_string(f)) return f;
  throw Error(ErrorKind::invalid_argument, "unknown distribution family '" + name + "'");
}

double DistributionSpec::abs_moment(int p) const {
  switch (family) {
    case Family::gaussian:
      return std::pow(2.0, p / 2.0) * std::tgamma((p + 1) / 2.0) / std::sqrt(M_PI);
    case Family::uniform:
      return std::pow(std::sqrt(3.0), p) / (p + 1);
    case Family::rademacher:
      return 1.0;
    case Family::student_like: {
      double nu = student_dof;
      if (p >= nu) return INFINITY;
      double raw = std::pow(nu, p / 2.0) * std::tgamma((p + 1) / 2.0) * std::tgamma((nu - p) / 2.0) /
                   (std::sqrt(M_PI) * std::tgamma(nu / 2.0));
      return raw * std::pow((nu - 2) / nu, p / 2.0);
    }
  }
  return NAN;
}

double rng::Stream::normal() {
  // Marsaglia polar method
  for (;;) {
    double x = 2 * uniform() - 1;
    double y = 2 * uniform() - 1;
    double s = x * x + y * y;
    if (s > 0 && s < 1) return x * std::sqrt(-2 * std::log(s) / s);
  }
}

double draw_omega(const DistributionSpec& spec, std::uint64_t seed, std::int64_t n, int i) {
  rng::Stream st(rng::key(seed, static_cast<std::uint64_t>(n), static_cast<std::uint64_t>(i)));
  switch (spec.family) {
    case Family::gaussian: return st.normal();
    case Family::uniform: return std::sqrt(3.0) * (2 * st.uniform() - 1);
    case Family::rademacher: return (st.next_u64() >> 63) ? 1.0 : -1.0;
    case Family::student_like: {
      const int nu = static_cast<int>(spec.student_dof);
      double z = st.normal();
      double chi2 = 0;
      for (int j = 0; j < nu; ++j) {
        double g = st.normal();
        chi2 += g * g;
      }
      return z / std::sqrt(chi2 / nu) * std::sqrt((nu - 2.0) / nu);
    }
  }
  return 0;
}

DisorderPath sample_path(const ModelParams& params, const DistributionSpec& spec, std::int64_t N, std::uint64_t seed) {
  if (N < 1) throw Error(ErrorKind::invalid_argument, "path length must be >= 1");
  if (spec.family == Family::student_like && (spec.student_dof < 5 || spec.student_dof != std::floor(spec.student_dof)))
    throw Error(ErrorKind::invalid_argument, "student_like needs an integer dof >= 5");
  DisorderPath p;
  p.seed = seed;
  p.spec = spec;
  p.params = params;
  p.v1.resize(N);
  p.v2.resize(N);
  for (std::int64_t n = 1; n <= N; ++n) {
    double sd = params.sd(n);
    if (sd == 0) {
      p.v1[n - 1] = p.v2[n - 1] = 0;
      continue;
    }
    p.v1[n - 1] = sd * draw_omega(spec, seed, n, 1);
    p.v2[n - 1] = sd * draw_omega(spec, seed, n, 2);
  }
  return p;
}

DisorderPath zero_path(const ModelParams& params, std::int64_t N) {
  DisorderPath p;
  p.params = params;
  p.params.lambda = 0;
  p.v1 = Eigen::VectorXd::Zero(N);
  p.v2 = Eigen::VectorXd::Zero(N);
  return p;
}

namespace {

MomentEstimate estimate(const std::vector<double>& x) {
  auto ms = mean_stderr(x);
  return {ms.mean, ms.mean - 1.96 * ms.stderr_, ms.mean + 1.96 * ms.stderr_};
}

}  // namespace

AssumptionReport validate_assumptions(const DistributionSpec& spec, const ModelParams& params, std::int64_t M,
                                      std::uint64_t seed, int decades) {
  if (M < 10000) throw Error(ErrorKind::invalid_argument, "validate_assumptions needs M >= 1e4 resamples");
  AssumptionReport rep;
  rep.M = M;
  rep.has_density = spec.has_density();
  const double z = 4.0;
  std::vector<double> logn, log3;
  double first_ratio = 0;
  for (int d = 0; d <= decades; ++d) {
    std::int64_t n = 1;
    for (int j = 0; j < d; ++j) n *= 10;
    SiteCheck sc;
    sc.n = n;
    sc.sd_target = params.sd(n);
    std::vector<double> v1(M), v2(M), sq(M), a3(M), a4(M);
    for (std::int64_t r = 0; r < M; ++r) {
      std::uint64_t s = rng::replica_seed(seed, static_cast<std::uint64_t>(r));
      v1[r] = sc.sd_target * draw_omega(spec, s, n, 1);
      v2[r] = sc.sd_target * draw_omega(spec, s, n, 2);
      double a = std::abs(v1[r]);
      sq[r] = a * a;
      a3[r] = a * a * a;
      a4[r] = sq[r] * sq[r];
    }
    sc.mean = estimate(v1);
    sc.variance = estimate(sq);
    sc.abs3 = estimate(a3);
    sc.abs4 = estimate(a4);
    auto ms = mean_stderr(v1);
    sc.mean_ok = std::abs(ms.mean) <= z * std::max(ms.stderr_, 1e-300);
    auto vs = mean_stderr(sq);
    double target = sc.sd_target * sc.sd_target;
    sc.sd_ok = std::abs(vs.mean - target) <= z * vs.stderr_ + 1e-15 * target;
    // correlation between V1(n) and V2(n)
    auto m2 = mean_stderr(v2);
    double c = 0, s1 = 0, s2 = 0;
    for (std::int64_t r = 0; r < M; ++r) {
      double a = v1[r] - ms.mean, b = v2[r] - m2.mean;
      c += a * b;
      s1 += a * a;
      s2 += b * b;
    }
    sc.corr_v1_v2 = (s1 > 0 && s2 > 0) ? c / std::sqrt(s1 * s2) : 0.0;
    sc.independence_ok = std::abs(sc.corr_v1_v2) <= 4.0 / std::sqrt(static_cast<double>(M));
    rep.independent = rep.independent && sc.independence_ok;
    rep.zero_mean = rep.zero_mean && sc.mean_ok;
    rep.sd_matches = rep.sd_matches && sc.sd_ok;
    double an = params.a(n);
    double ratio = sc.abs4.value / (an * an);
    if (d == 0) first_ratio = ratio;
    rep.fourth_constant = std::max(rep.fourth_constant, ratio);
    // E V^4 <= C a_n^2 with C fixed: the ratio must not grow along the decades
    if (ratio > 1.5 * first_ratio + 1e-300) rep.fourth_bounded = false;
    if (sc.abs3.value > 0) {
      logn.push_back(std::log(static_cast<double>(n)));
      log3.push_back(std::log(sc.abs3.value));
    }
    rep.sites.push_back(sc);
  }
  if (logn.size() >= 2) {
    rep.third_exponent = fit_line(logn, log3).slope;
    rep.third_decays = rep.third_exponent < -2 * params.alpha.value();
  }
  return rep;
}

namespace {

std::string fmt(double x) {
  char buf[40];
  auto r = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, r.ptr);
}

const char* envelope_name(Envelope::Kind k) {
  switch (k) {
    case Envelope::Kind::power: return "power";
    case Envelope::Kind::shifted_power: return "shifted_power";
    case Envelope::Kind::constant: return "constant";
  }
  return "power";
}

}  // namespace

void write_path_csv(std::ostream& os, const DisorderPath& p, const std::string& header) {
  if (!header.empty()) os << header;
  os << "# path seed=" << p.seed << " family=" << to_string(p.spec.family) << " dof=" << fmt(p.spec.student_dof)
     << " m=" << fmt(p.params.m) << " lambda=" << fmt(p.params.lambda) << " alpha=" << p.params.alpha.str()
     << " envelope=" << envelope_name(p.params.envelope.kind) << " shift=" << fmt(p.params.envelope.shift) << "\n";
  os << "n,v1,v2\n";
  for (std::int64_t n = 1; n <= p.length(); ++n) os << n << "," << fmt(p.V1(n)) << "," << fmt(p.V2(n)) << "\n";
}

DisorderPath read_path_csv(std::istream& is) {
  DisorderPath p;
  std::vector<double> a, b;
  std::string line;
  auto num = [](const std::string& s) {
    double v = 0;
    auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec != std::errc{}) throw Error(ErrorKind::invalid_argument, "bad number '" + s + "' in path CSV");
    return v;
  };
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      if (line.rfind("# path ", 0) != 0) continue;
      std::istringstream ss(line.substr(7));
      std::string kv;
      while (ss >> kv) {
        auto eq = kv.find('=');
        if (eq == std::string::npos) continue;
        std::string k = kv.substr(0, eq), v = kv.substr(eq + 1);
        if (k == "seed") p.seed = std::stoull(v);
        else if (k == "family") p.spec.family = family_from_string(v);
        else if (k == "dof") p.spec.student_dof = num(v);
        else if (k == "m") p.params.m = num(v);
        else if (k == "lambda") p.params.lambda = num(v);
        else if (k == "alpha") p.params.alpha = DecayExponent::parse(v);
        else if (k == "envelope")
          p.params.envelope.kind = v == "shifted_power" ? Envelope::Kind::shifted_power
                                   : v == "constant"    ? Envelope::Kind::constant
                                                        : Envelope::Kind::power;
        else if (k == "shift") p.params.envelope.shift = num(v);
      }
      continue;
    }
    if (line.rfind("n,", 0) == 0) continue;
    auto c1 = line.find(','), c2 = line.find(',', c1 + 1);
    if (c1 == std::string::npos || c2 == std::string::npos)
      throw Error(ErrorKind::invalid_argument, "malformed path CSV row '" + line + "'");
    a.push_back(num(line.substr(c1 + 1, c2 - c1 - 1)));
    b.push_back(num(line.substr(c2 + 1)));
  }
  p.v1 = Eigen::Map<Eigen::VectorXd>(a.data(), a.size());
  p.v2 = Eigen::Map<Eigen::VectorXd>(b.data(), b.size());
  return p;
}

}  // namespace dirac

#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "dirac/disorder.hpp"
#include "dirac/model.hpp"
#include "dirac/stats.hpp"

namespace dirac {

double beta_closed_form(const EnergyContext& ctx, double lambda);

struct LyapunovOptions {
  int threads = 1;
  double theta0 = 0.0;
  bool with_product = true;
  int mom_groups = 10;
};

struct LyapunovEstimate {
  double beta_hat = 0;  // Prufer estimator with zero-mean martingale terms removed
  double stderr_ = 0;
  double beta_prufer = 0;  // 1/2 log R_{N+1}^2 / s_N
  double stderr_prufer = 0;
  double beta_product = 0;  // log ||T_{omega,N}|| / s_N
  double stderr_product = 0;
  double beta_median_of_means = 0;  // median-of-means of the headline per-replica values
  std::int64_t N = 0;
  std::int64_t M = 0;
  double s_N = 0;
  std::vector<double> per_replica;  // headline values
};

LyapunovEstimate estimate_beta(const EnergyContext& ctx, const ModelParams& params, const DistributionSpec& spec,
                               std::int64_t N, std::int64_t M, std::uint64_t seed,
                               const LyapunovOptions& options = {});

// F(E) = 1/2 (E^2 - m^2)(m^2 + 4 - E^2) / (m^2 + E^2); lambda_m(E) = sqrt(F).
double phase_function(double E, double m);

struct CriticalCoupling {
  double lambda_star = 0;
  double E_star = 0;
  bool attained = true;  // false for m = 0 (supremum at the band edge E = 0)
};
CriticalCoupling lambda_critical(double m);

struct CriticalEnergies {
  double E_minus = 0;
  double E_plus = 0;
};
std::optional<CriticalEnergies> critical_energies(double lambda, double m);

enum class AlphaClass { supercritical, critical, subcritical };
enum class SpectralType { ac, pp, sc, outside_band };
const char* to_string(AlphaClass c);
const char* to_string(SpectralType t);

struct RegimeReport {
  AlphaClass alpha_class = AlphaClass::critical;
  SpectralType spectral_type = SpectralType::outside_band;
  CriticalCoupling lambda_star{};
  std::optional<CriticalEnergies> thresholds;  // alpha = 1/2 only
};

RegimeReport classify(const ModelParams& params, double E);

// beta > 1/2 decided through lambda^2 > F(E) (alpha = 1/2 criterion).
bool beta_exceeds_half(double E, double lambda, double m);

struct R4Point {
  double E = 0;
  double log_mean_r4_N = 0;
  double log_mean_r4_2N = 0;
  double ratio = 0;  // E[R^4(2N)] / E[R^4(N)]
  Interval ratio_ci{};
};

struct R4Report {
  std::vector<R4Point> points;
  double sup_log_mean_r4 = 0;
  double envelope_constant = 0;  // c' with sup E R^4 <= prod (1 + c' j^{-2 alpha})
  double max_ratio = 0;
  bool plateau = false;
  bool supercritical = true;
};

R4Report r4_boundedness_probe(const std::vector<double>& energies, const ModelParams& params,
                              const DistributionSpec& spec, std::int64_t N, std::int64_t M, std::uint64_t seed,
                              int threads = 1, double plateau_tol = 0.05);

}  // namespace dirac

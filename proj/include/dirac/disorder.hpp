#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dirac/model.hpp"

namespace dirac {

enum class Family { gaussian, uniform, rademacher, student_like };

const char* to_string(Family f);
Family family_from_string(const std::string& name);

// Unit-variance, zero-mean law of the unscaled omega.
struct DistributionSpec {
  Family family = Family::gaussian;
  double student_dof = 5.0;  // student_like only; rescaled to unit variance

  double abs_moment(int p) const;  // E|omega|^p for p in {1,2,3,4}
  bool has_density() const { return family != Family::rademacher; }
};

namespace rng {

inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t key(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) {
  return mix64(mix64(mix64(seed) ^ a) ^ (b * 0xd1b54a32d192ed03ULL));
}

// Deterministic stream of draws attached to one key.
class Stream {
 public:
  explicit Stream(std::uint64_t key) : key_(key) {}
  std::uint64_t next_u64() { return mix64(key_ ^ (0x632be59bd9b4e019ULL * ++ctr_)); }
  // uniform in (0, 1)
  double uniform() { return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53; }
  double normal();

 private:
  std::uint64_t key_;
  std::uint64_t ctr_ = 0;
};

inline std::uint64_t replica_seed(std::uint64_t base, std::uint64_t replica) {
  return key(base, 0x5eedULL, replica + 1);
}

}  // namespace rng

// Draw of omega_{n,i} for (seed, n, i); pure function.
double draw_omega(const DistributionSpec& spec, std::uint64_t seed, std::int64_t n, int i);

struct DisorderPath {
  Eigen::VectorXd v1;  // v1[n-1] = V1(n)
  Eigen::VectorXd v2;
  std::uint64_t seed = 0;
  DistributionSpec spec{};
  ModelParams params{};

  std::int64_t length() const { return v1.size(); }
  double V1(std::int64_t n) const { return v1[n - 1]; }
  double V2(std::int64_t n) const { return v2[n - 1]; }
};

DisorderPath sample_path(const ModelParams& params, const DistributionSpec& spec, std::int64_t N,
                         std::uint64_t seed);
// Deterministic potential (e.g. V = 0) with the same container.
DisorderPath zero_path(const ModelParams& params, std::int64_t N);

struct MomentEstimate {
  double value = 0;
  double ci_low = 0;
  double ci_high = 0;
};

struct SiteCheck {
  std::int64_t n = 0;
  double sd_target = 0;  // lambda a_n
  MomentEstimate mean, variance, abs3, abs4;
  double corr_v1_v2 = 0;
  bool mean_ok = true;   // mean zero
  bool sd_ok = true;  // sd matches lambda a_n
  bool independence_ok = true;
};

struct AssumptionReport {
  std::vector<SiteCheck> sites;
  bool independent = true, zero_mean = true, sd_matches = true, fourth_bounded = true, third_decays = true,
       has_density = true;
  double fourth_constant = 0;   // max E V^4 / a_n^2
  double third_exponent = 0;    // fitted slope of log E|V|^3 vs log n
  std::int64_t M = 0;
};

// One representative site per decade (1, 10, ..., 10^decades), M resamples each.
AssumptionReport validate_assumptions(const DistributionSpec& spec, const ModelParams& params,
                                      std::int64_t M, std::uint64_t seed = 1, int decades = 4);

void write_path_csv(std::ostream& os, const DisorderPath& path, const std::string& header = {});
DisorderPath read_path_csv(std::istream& is);

}  // namespace dirac

#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dirac/disorder.hpp"
#include "dirac/model.hpp"
#include "dirac/stats.hpp"
#include "dirac/tridiagonal.hpp"

namespace dirac {

struct GreenQuery {
  BoxDescriptor box;
  int u = 1;
  Spin sigma = Spin::minus;
  int n = 1;
  Spin sigma_p = Spin::minus;
  double E = 0;
};

inline constexpr double green_pivot_tol = 1e-13;

// G(u, sigma; n, sigma_p; E) = <delta^sigma_u, (D_box - E)^{-1} delta^{sigma_p}_n>.
double green(const GreenQuery& q, const ModelParams& params, const DisorderPath& path);

// One factorization per (operator, E); columns serve many (u, n) queries.
class GreenSolver {
 public:
  GreenSolver(const TridiagonalOperator& op, double E);
  // (D - E)^{-1} delta^{s}_{n} as a vector over box slots.
  Eigen::VectorXd column(int n, Spin s) const;
  double entry(int u, Spin su, int n, Spin sn) const;
  const BoxDescriptor& box() const { return box_; }

 private:
  BoxDescriptor box_;
  tridiag::Ldlt<double> f_;
};

struct ResolventResiduals {
  double first = 0;          // G_n(u,+-;n,-) vs -phi^+-_u / phi^+_n
  double second = 0;         // G'_n(u,+-;n,+) vs phi^+-_u / phi^-_{n+1}
  double big_to_small = 0;   // Lambda boxes
  double big_to_small_prime = 0;  // Lambda' boxes
  double max() const;
};

ResolventResiduals verify_resolvent_identities(const ModelParams& params, const DisorderPath& path, double E, int n,
                                               int L);

struct FmOptions {
  Spin sigma = Spin::minus;    // source spin
  Spin sigma_p = Spin::minus;  // target spin
  int bootstrap = 200;
  int threads = 1;
  bool require_significance = true;
};

struct FmEstimate {
  double s = 0;
  std::vector<int> n;
  std::vector<double> values;  // E|G|^s
  std::vector<double> stderr_;
  LinearFit fit{};             // log values vs n^{1 - 2 alpha}
  Interval slope_ci{};
  double c_hat = 0;            // -slope
  double apriori_constant = 0; // max_n value / (lambda^{-s}(a_u^{-s} + a_n^{-s}))
  std::int64_t M = 0;
  int L = 0;
  std::int64_t resamples = 0;  // NearSingular redraws
  bool significant = false;
};

class InsufficientReplicas : public Error {
 public:
  InsufficientReplicas(FmEstimate est)
      : Error(ErrorKind::insufficient_replicas, "bootstrap CI of the fitted slope includes 0"),
        estimate(std::move(est)) {}
  FmEstimate estimate;
};

FmEstimate fractional_moment_scan(const ModelParams& params, const DistributionSpec& spec, double E, int u, double s,
                                  const std::vector<int>& n_grid, int L, std::int64_t M, std::uint64_t seed,
                                  const FmOptions& options = {});

struct NegativeMomentReport {
  double s = 0;
  std::vector<int> n;
  std::vector<double> values;  // E ||T_{[u,n]} phi0||^{-s}
  std::vector<double> stderr_;
  LinearFit fit{};
  Interval slope_ci{};
  // block bound E||T_{l n0} ... T_{(l-1) n0 + 1} phi0||^{-s} <= 1 - c / l^{2 alpha}
  int n0 = 0;
  std::vector<int> blocks;
  std::vector<double> block_values;
  double block_c = 0;  // min over l of (1 - value_l) l^{2 alpha}
  std::int64_t M = 0;
};

NegativeMomentReport negative_moment_scan(const ModelParams& params, const DistributionSpec& spec, double E, int u,
                                          double s, const std::vector<int>& n_grid, std::int64_t M,
                                          std::uint64_t seed, const Eigen::Vector2d& phi0 = Eigen::Vector2d(1, 0),
                                          int n0 = 50, int bootstrap = 200, int threads = 1);

void write_fm_csv(std::ostream& os, const FmEstimate& est, const ModelParams& params, double E,
                  const std::string& header = {});

}  // namespace dirac

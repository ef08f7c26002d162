#pragma once

#include <complex>
#include <cstdint>
#include <string>
#include <iosfwd>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "dirac/transfer.hpp"

namespace dirac {

struct PruferState {
  double log_r = 0;
  double theta = 0;  // unwrapped
  std::int64_t n = 1;
  System system = System::first;

  double theta_bar(const EnergyContext& ctx) const;
};

// theta - (2n - 1) k, reduced to (-pi, pi].
double theta_bar(double theta, std::int64_t n, double k);

struct BasisMatrix {
  Eigen::Matrix2d entries;
  std::int64_t n = 1;
  System system = System::first;
};

BasisMatrix basis_at(const EnergyContext& ctx, std::int64_t n, System system = System::first);

// Complex multiplier zeta_{n+1} / zeta_n. v2 is V2(n+1) (first) or V2(n) (second).
std::complex<double> prufer_multiplier(const EnergyContext& ctx, double theta_bar, double v1, double v2,
                                       System system);

// Explicit polynomial expansion of Gamma with |multiplier|^2 = 1 + Gamma (first system).
double radius_gamma(const EnergyContext& ctx, double theta_bar, double v1, double v2);

inline constexpr double degenerate_multiplier_tol = 1e-14;

PruferState prufer_step(const PruferState& state, const EnergyContext& ctx, const DisorderPath& path);

// Psi_n and Phi_n = P_n Psi_n from a state.
Eigen::Vector2d prufer_psi(const PruferState& s);
Eigen::Vector2d prufer_phi(const PruferState& s, const EnergyContext& ctx);
// State with Phi_n = phi (inverse of prufer_phi).
PruferState prufer_from_phi(const Eigen::Vector2d& phi, std::int64_t n, const EnergyContext& ctx,
                            System system = System::first);

struct PruferTrajectory {
  std::vector<double> log_r, theta, theta_bar;  // index i <-> site n = i + 1 (recorded mode)
  PruferState final{};
};

// N steps from Psi_1 = e^{i theta0}; record = false keeps O(1) memory.
PruferTrajectory run_prufer(const EnergyContext& ctx, const DisorderPath& path, std::int64_t N, double theta0,
                            System system = System::first, bool record = true);
PruferTrajectory run_prufer(const EnergyContext& ctx, const DisorderPath& path, std::int64_t N,
                            const PruferState& start, bool record = true);

void write_trajectory_csv(std::ostream& os, const PruferTrajectory& t, const std::string& header = {});

inline constexpr double excluded_k_guard = 1e-3;
// True if k lies within the guard of -5pi/8, -3pi/4, -7pi/8.
bool near_excluded_k(double k, double guard = excluded_k_guard);

struct MartingaleReport {
  std::int64_t N = 0;
  double log_r2 = 0;
  double drift = 0;
  double M[6] = {0, 0, 0, 0, 0, 0};
  double Q[2] = {0, 0};
  double remainder = 0;      // sum of K_j
  double abs_remainder = 0;  // sum of |K_j|
  double residual = 0;       // log R^2 - (drift + M + Q), equals remainder up to rounding
  double s_N = 0;
};

// Splits log R_{N+1}^2 (first system, R_1 = 1) into drift, six martingales, two phase sums and
// the third-order remainder.
MartingaleReport martingale_diagnostics(const EnergyContext& ctx, const DisorderPath& path, std::int64_t N,
                                        double theta0 = 0.0);

// v_m = sin(m k) / sin k style sequences obey v_m = 2 cos k v_{m-1} - v_{m-2}; max defect over m <= count.
double chebyshev_defect(double k, int count = 100);

}  // namespace dirac

#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dirac/disorder.hpp"
#include "dirac/model.hpp"
#include "dirac/prufer.hpp"
#include "dirac/stats.hpp"

namespace dirac {

struct SpectralDecomposition {
  Eigen::VectorXd eigenvalues;   // ascending
  Eigen::MatrixXd eigenvectors;  // columns
  BoxDescriptor box;
};

enum class EigenMethod { automatic, ql, ql_inverse_iteration };

inline constexpr Eigen::Index default_dimension_cap = 6000;

SpectralDecomposition diagonalize(const TridiagonalOperator& op, EigenMethod method = EigenMethod::automatic,
                                  Eigen::Index dimension_cap = default_dimension_cap);
// Only eigenpairs with eigenvalue in [a, b) (bisection + inverse iteration).
SpectralDecomposition eigenpairs_in(const TridiagonalOperator& op, double a, double b);

struct EigenfunctionFit {
  int seed_index = 0;
  double E = 0;
  double beta = 0;       // closed form at E
  int centre = 0;        // site of max ||Phi_n||
  int tail_end = 0;      // last fitted site
  double slope = 0;      // d log||Phi_n|| / d s_n on the tail
  double ratio = 0;      // slope / beta
  double r2 = 0;
  double sule_slope = 0; // d log||Phi_n|| / d n^{1-2 alpha}
  double kappa = 0;      // -d log||Phi_n|| / d log n
  bool used = false;     // passes the centre / tail filter
};

struct EigenProfileOptions {
  double centre_fraction = 0.1;  // centre must lie in the first fraction of the box
  int min_tail = 50;
  double floor = 1e-13;          // tail ends where ||Phi_n|| < floor * max
  int threads = 1;
};

struct EigenProfileReport {
  std::vector<EigenfunctionFit> fits;
  double median_ratio = 0;      // over used fits
  double median_abs_dev = 0;    // median |ratio + 1| over used fits
  std::size_t used = 0;
};

// ||Phi_n|| = sqrt(phi^+_n^2 + phi^-_n^2) on a Lambda' box.
Eigen::VectorXd site_norms(const Eigen::VectorXd& v, int L);

EigenProfileReport eigenfunction_profile(const ModelParams& params, const DistributionSpec& spec, double E_low,
                                         double E_high, int L, const std::vector<std::uint64_t>& seeds,
                                         const EigenProfileOptions& options = {});

struct CorrelatorTable {
  int u = 1;
  Spin sigma = Spin::minus;
  double I_low = 0, I_high = 0;
  std::vector<double> s_values;
  // q[k][slot]: s-correlator for s_values[k], slot over the box ordering
  std::vector<Eigen::VectorXd> q;
  Eigen::VectorXd q1;  // s = 1 (sum of |P_B(u, n)|)
  int blocks = 0;
};

inline constexpr double degenerate_merge_tol = 1e-10;

CorrelatorTable correlator(const SpectralDecomposition& decomp, int u, Spin sigma, double I_low, double I_high,
                           const std::vector<double>& s_values = {});

struct CorrelatorScan {
  std::vector<int> n;
  std::vector<double> values;  // mean Q(u, sigma; n, sigma_p; I)
  std::vector<double> stderr_;
  LinearFit fit{};
  Interval slope_ci{};
  std::int64_t M = 0;
};

CorrelatorScan correlator_scan(const ModelParams& params, const DistributionSpec& spec, double I_low, double I_high,
                               int u, Spin sigma, Spin sigma_p, const std::vector<int>& n_grid, int L, std::int64_t M,
                               std::uint64_t seed, int bootstrap = 200, int threads = 1);

struct EvolutionProbes {
  std::vector<double> moments;                      // p for <|X|^p>
  std::vector<std::pair<double, int>> truncated;    // (p, N) for <|X_N|^p>, |X_N| = min(|X|, N)
  std::vector<int> tails;                           // R for ||(1 - chi_R) psi||^2
  std::vector<double> stretched;                    // kappa for log <e^{2|X|^kappa}>
};

struct EvolutionTrace {
  std::vector<double> times;
  std::vector<double> norms;
  std::vector<std::vector<double>> moments;    // [probe][t]
  std::vector<std::vector<double>> truncated;
  std::vector<std::vector<double>> tails;
  std::vector<std::vector<double>> log_stretched;
  EvolutionProbes probes;
};

// State at time t: V diag(e^{-i E t}) V^T psi0.
Eigen::VectorXcd evolve_state(const SpectralDecomposition& decomp, const Eigen::VectorXcd& psi0, double t);
EvolutionTrace evolve(const SpectralDecomposition& decomp, const Eigen::VectorXcd& psi0,
                      const std::vector<double>& times, const EvolutionProbes& probes);
// Embeds a state given on box slots into a larger box; throws UnsupportedInitialState if it does not fit.
Eigen::VectorXcd embed_state(const Eigen::VectorXcd& psi, Eigen::Index dimension);
Eigen::VectorXcd delta_state(const BoxDescriptor& box, int n, Spin s);
// P_I psi0 through the decomposition, renormalised.
Eigen::VectorXcd project_window(const SpectralDecomposition& decomp, const Eigen::VectorXcd& psi0, double a, double b);

double time_average(const std::vector<double>& times, const std::vector<double>& values);

enum class StretchedClass { bounded, growing, box_limited };
const char* to_string(StretchedClass c);

struct StretchedPoint {
  double kappa = 0;
  double log_sup_T = 0;       // box L, horizon T
  double log_sup_2T = 0;      // box 2L, horizon 2T
  double log_sup_T_big = 0;   // box 2L, horizon T
  double horizon_log_ratio = 0;
  double box_log_ratio = 0;
  StretchedClass verdict = StretchedClass::bounded;
};

std::vector<StretchedPoint> stretched_moment_probe(const SpectralDecomposition& small, const SpectralDecomposition& big,
                                                   const Eigen::VectorXcd& psi0, const std::vector<double>& kappa_grid,
                                                   double horizon, int steps = 200, double tol = std::log(1.1));

struct RnReport {
  std::vector<double> log_r;          // log R^(1)_n / R^(2)_n, n = 1..N+1
  double wronskian_residual = 0;      // max | |R1 R2 sin2k sin(th1 - th2)| - 1 |
  double tail_oscillation = 0;        // max - min of log r_n over [N/2, N]
};

RnReport rn_ratio_diagnostic(const EnergyContext& ctx, const DisorderPath& path, std::int64_t N);

void write_spectrum_csv(std::ostream& os, const SpectralDecomposition& d, const std::string& header = {});

}  // namespace dirac

#pragma once

#include <cstdint>

#include <Eigen/Dense>

#include "dirac/disorder.hpp"
#include "dirac/model.hpp"

namespace dirac {

enum class System { first, second };

struct TransferMatrix {
  Eigen::Matrix2d entries;
  System system = System::first;
  std::int64_t site = 0;
};

// Free transfer matrix (V = 0); identical for both systems.
Eigen::Matrix2d free_transfer(const EnergyContext& ctx, System system = System::first);

// first:  [[p_{n,1} p_{n+1,2} + 1, p_{n+1,2}], [p_{n,1}, 1]], p_{n,1} = p1 + V1(n), p_{n+1,2} = p2 - V2(n+1)
// second: [[p_{n,1} p_{n,2} + 1, p_{n,1}], [p_{n,2}, 1]], maps (phi^-_n, phi^+_{n-1}) to (phi^-_{n+1}, phi^+_n)
TransferMatrix transfer_at(const EnergyContext& ctx, const DisorderPath& path, std::int64_t n,
                           System system = System::first);
Eigen::Matrix2d transfer_entries(double E, double m, double v1, double v2, System system);

struct Decomposition {
  Eigen::Matrix2d A1, A2, A3;
};
// T_n = T + V1 A1 + V2' A2 + V1 V2' A3 with V2' = V2(n+1) (first) or V2(n) (second).
Decomposition decomposition(const EnergyContext& ctx, System system = System::first);

// Largest singular value of a 2x2 matrix, closed form.
double spectral_norm(const Eigen::Matrix2d& A);

struct ScaledProduct {
  Eigen::Matrix2d unit = Eigen::Matrix2d::Identity();
  double log_scale = 0;
  std::int64_t u = 1, n = 1;  // represents T_{n-1} ... T_u

  double log_norm() const;
  Eigen::Matrix2d matrix() const { return std::exp(log_scale) * unit; }
};

// T_{n-1} ... T_u, renormalised whenever the running norm leaves [1e-8, 1e8].
ScaledProduct product(const EnergyContext& ctx, const DisorderPath& path, std::int64_t u, std::int64_t n,
                      System system = System::first);
// Same for an arbitrary real energy (matrix-based; either band).
ScaledProduct product_at_energy(double E, double m, const DisorderPath& path, std::int64_t u, std::int64_t n,
                                System system = System::first);

// Propagates a vector, tracking log-norm; returns log||T_{[u,n]} phi0|| and the unit direction.
struct ScaledVector {
  Eigen::Vector2d unit;
  double log_norm = 0;
};
ScaledVector propagate(double E, double m, const DisorderPath& path, std::int64_t u, std::int64_t n,
                       const Eigen::Vector2d& phi0, System system = System::first);

struct NormBracket {
  double log_lower = 0;  // log max ||A e_i||
  double log_upper = 0;  // log_lower - log sin(|t1 - t2| / 2)
  bool contains_log(double log_norm, double slack = 1e-12) const {
    return log_norm >= log_lower - slack && log_norm <= log_upper + slack;
  }
};

NormBracket norm_from_two_angles(const Eigen::Matrix2d& A, double theta1 = 0.0, double theta2 = 0.7853981633974483);
NormBracket norm_from_two_angles(const ScaledProduct& P, double theta1 = 0.0, double theta2 = 0.7853981633974483);
NormBracket norm_from_two_angles(const EnergyContext& ctx, const DisorderPath& path, std::int64_t u, std::int64_t n,
                                 double theta1 = 0.0, double theta2 = 0.7853981633974483);

}  // namespace dirac

#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include <Eigen/Dense>

namespace dirac {

struct DisorderPath;

// Exact rational exponent, so alpha == 1/2 is decided without floating comparison.
class DecayExponent {
 public:
  DecayExponent() = default;
  DecayExponent(std::int64_t num, std::int64_t den);

  // Accepts "p/q" or a decimal literal ("0.3", "1e-1"); decimals convert exactly.
  static DecayExponent parse(std::string_view text);
  // Shortest round-trip decimal of x, converted exactly.
  static DecayExponent from_double(double x);

  double value() const { return static_cast<double>(num_) / static_cast<double>(den_); }
  std::int64_t num() const { return num_; }
  std::int64_t den() const { return den_; }
  // sign of (alpha - 1/2)
  int compare_half() const;
  std::string str() const;

  friend bool operator==(const DecayExponent&, const DecayExponent&) = default;

 private:
  std::int64_t num_ = 1;
  std::int64_t den_ = 2;
};

struct Envelope {
  enum class Kind { power, shifted_power, constant };
  Kind kind = Kind::power;
  double shift = 0.0;  // shifted_power: a_n = (n + shift)^{-alpha}

  double at(double alpha, std::int64_t n) const;
};

struct ModelParams {
  double m = 0.0;
  double lambda = 1.0;
  DecayExponent alpha{1, 2};
  Envelope envelope{};

  void validate() const;
  double a(std::int64_t n) const { return envelope.at(alpha.value(), n); }
  double sd(std::int64_t n) const { return lambda * a(n); }
};

inline constexpr double band_edge_guard = 1e-6;

// Band chart for E in the positive band (m, sqrt(m^2+4)).
struct EnergyContext {
  double E = 0;
  double m = 0;
  double k = 0;  // in (-pi, -pi/2)
  double p1 = 0;  // m - E
  double p2 = 0;  // m + E
  double sin2k = 0;
  double cosk = 0;
  double sink = 0;
  bool near_edge = false;  // sin2k < band_edge_guard

  // Throws NearBandEdge when the 1/sin2k formulas are unusable.
  void require_analytic() const;
};

EnergyContext energy_context(double E, double m);

bool in_band_interior(double E, double m);

struct SpectralWindow {
  double m = 0;

  double inner() const { return m; }
  double outer() const;
  bool interior(double E) const { return in_band_interior(E, m); }
};

enum class Spin { minus, plus };

struct BoxDescriptor {
  enum class Kind { Lambda, LambdaPrime };
  Kind kind = Kind::LambdaPrime;
  int l = 1;

  std::size_t dimension() const {
    return kind == Kind::Lambda ? 2 * static_cast<std::size_t>(l) - 1 : 2 * static_cast<std::size_t>(l);
  }
  bool contains(int n, Spin s) const;
  // 0-based slot of delta^s_n; delta^-_n -> 2(n-1), delta^+_n -> 2(n-1)+1
  static std::size_t index(int n, Spin s) { return 2 * static_cast<std::size_t>(n - 1) + (s == Spin::plus ? 1 : 0); }
  static int site_of(std::size_t idx) { return static_cast<int>(idx / 2) + 1; }
  static Spin spin_of(std::size_t idx) { return idx % 2 ? Spin::plus : Spin::minus; }
};

struct TridiagonalOperator {
  Eigen::VectorXd diag;
  Eigen::VectorXd offdiag;
  BoxDescriptor box;

  Eigen::Index dimension() const { return diag.size(); }
  Eigen::MatrixXd dense() const;
  // Gershgorin bound on the spectrum radius.
  double norm_bound() const;
};

TridiagonalOperator assemble_operator(const ModelParams& params, const DisorderPath& path,
                                      const BoxDescriptor& box);

}  // namespace dirac

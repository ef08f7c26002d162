#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "dirac/disorder.hpp"
#include "dirac/model.hpp"

namespace dirac::cli {

// Validation failure; line is 1-based, 0 when no position applies.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& what, int line = 0, int column = 0);
  int line() const { return line_; }
  int column() const { return column_; }

 private:
  int line_, column_;
};

enum class Format { csv, svg, both };
const char* to_string(Format f);

struct EnergyGrid {
  std::vector<double> values;  // explicit list wins over the range
  double min = 0, max = 0;
  int count = 0;

  std::vector<double> expand() const;
};

struct LyapunovProbe {
  bool product = true;
  double theta0 = 0;
};

struct PhaseProbe {
  double lambda_min = 0.05, lambda_max = 2.0;
  int lambda_count = 40;
  int energy_count = 81;  // over (-sqrt(m^2+4), sqrt(m^2+4))
  std::vector<double> masses = {0.0, 0.25, 0.5, 0.75, 1.0, 1.5, 2.0, 3.0};
};

struct GreenProbe {
  double E = 1.0;
  double s = 0.1;
  int u = 1;
  std::string sigma = "minus", sigma_p = "minus";
  std::vector<int> n_grid;  // empty: 10 evenly spaced sites up to L
  bool negative_moments = true;
  double s_negative = 0.05;
  bool correlator = false;
  double window_low = 0.8, window_high = 1.2;
  int bootstrap = 200;
};

struct DynamicsProbe {
  int replicas = 4;
  int site = 1;
  std::string spin = "minus";
  double t_max = 0;  // 0: L / 4
  int steps = 200;
  std::vector<double> moments = {2.0};
  double truncated_p = 4;
  std::vector<int> truncated_N;
  std::vector<double> kappa = {0.0, 0.25, 0.5};
  bool box_doubling = false;
};

struct EigenProbe {
  double E_low = 0.8, E_high = 1.2;
  int seeds = 3;
  double centre_fraction = 0.1;
  int min_tail = 50;
};

struct DiagnosticsProbe {
  bool martingale = true;
  bool rn_ratio = true;
  bool r4 = false;
};

struct ValidateProbe {
  std::int64_t samples = 10000;
  int decades = 4;
  std::int64_t path_length = 1000;
};

struct ExperimentConfig {
  ModelParams model{0.0, 0.3, DecayExponent(1, 2), {}};
  DistributionSpec distribution{};
  EnergyGrid energies{};
  std::int64_t N = 100000;
  int L = 400;
  std::int64_t M = 32;
  std::uint64_t seed = 1;
  LyapunovProbe lyapunov{};
  PhaseProbe phase{};
  GreenProbe green{};
  DynamicsProbe dynamics{};
  EigenProbe eigen{};
  DiagnosticsProbe diagnostics{};
  ValidateProbe validate{};
  std::string out_dir = "out";
  Format format = Format::csv;

  // JSON pointer -> (line, column) of each member in the source text; not serialized
  std::map<std::string, std::pair<int, int>> positions;

  static ExperimentConfig defaults();

  // Error located at the member (or its nearest present ancestor).
  ConfigError error_at(const std::string& pointer, const std::string& message) const;
};

// Parses JSON text; members not given keep their defaults. Throws ConfigError.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);
// Canonical JSON: parse_config(to_json_text(c)) reproduces c exactly.
std::string to_json_text(const ExperimentConfig& c);
// FNV-1a 64 over the canonical text minus the output section, as 16 hex digits.
std::string config_hash(const ExperimentConfig& c);

}  // namespace dirac::cli

#pragma once

#include <stdexcept>
#include <string>

namespace dirac {

enum class ErrorKind {
  energy_out_of_band,
  near_band_edge,
  path_too_short,
  site_out_of_range,
  degenerate_multiplier,
  excluded_k,
  subcritical_only,
  near_singular,
  convergence_failure,
  window_empty,
  unsupported_initial_state,
  insufficient_replicas,
  invalid_argument,
};

const char* to_string(ErrorKind kind);

// Numerical/domain failure raised by the library. The CLI maps these to exit code 3.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace dirac

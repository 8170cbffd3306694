#pragma once

#include <stdexcept>
#include <string>

namespace dpd {

// Invalid or inconsistent run configuration. CLI maps this to exit code 2.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Overflow or loss of exactness in lattice arithmetic. Fatal.
struct ArithmeticError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// An API called with arguments that violate its contract.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Filesystem failure while writing outputs. CLI maps this to exit code 3.
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Numerical integration failure (step size too large for the tolerance).
struct IntegrationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Process exit codes shared by the CLI and its tests.
inline constexpr int kExitOk = 0;              // run completed, verdict pass
inline constexpr int kExitVerdictFailure = 1;  // run completed, experiment verdict fail
inline constexpr int kExitConfigError = 2;     // configuration rejected
inline constexpr int kExitIoError = 3;         // output could not be written

}  // namespace dpd

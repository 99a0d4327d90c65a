#ifndef KAL_ERRORS_HPP
#define KAL_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace kal {

/// Process exit codes used by the command-line driver.
enum class ExitCode : int {
  ok = 0,
  config_error = 1,
  verification_failure = 2,
  io_error = 3,
};

/// Invalid or inconsistent run configuration (bad key, odd N0, ...).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Filesystem or serialization failure.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Mathematically ill-posed input (e.g. angular density at zero relative velocity).
class DomainError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operation applied to a state that cannot support it (absorbing configuration, zero rate).
class StateError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An internal consistency check failed; the run must abort and report.
class InvariantViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace kal

#endif

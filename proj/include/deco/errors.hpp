// errors.hpp — error taxonomy shared by the library and the CLI exit-code mapping
#pragma once

#include <stdexcept>
#include <string>

namespace deco {

enum class ErrorKind {
  invalid_input,            // precondition violation, bad parameters, malformed files
  numerical_failure,        // quadrature/ODE did not converge to the requested tolerance
  undefined_filter,         // filter requested where the fluence vanishes
  unsupported_decomposition,// harmonic decomposition asked of an aperiodic waveform
  unsupported_regime,       // operation valid only at zero temperature (or similar)
  no_solution,              // design search proved infeasible
  refusal,                  // request outside the validity domain (oracle horizon/size)
};

// Single exception type; `kind` drives the CLI exit code (2/3/4), `what()` carries
// a human-readable message, already pointered for config errors ("/bath/gamma: ...").
class Error : public std::runtime_error {
public:
  Error(ErrorKind k, const std::string& msg) : std::runtime_error(msg), kind(k) {}
  ErrorKind kind;
};

[[noreturn]] inline void fail(ErrorKind k, const std::string& msg) { throw Error(k, msg); }

inline void require(bool ok, ErrorKind k, const std::string& msg) {
  if (!ok) fail(k, msg);
}

} // namespace deco

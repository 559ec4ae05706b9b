#pragma once

#include <stdexcept>
#include <string>

namespace dyadlab {

enum class errc {
  resolution_too_coarse,
  invalid_exponent,
  invalid_weight,
  non_integrable_weight,
  shape_mismatch,
  degenerate_body,
  no_convergence,
  invalid_backend,
  singular_multiplier,
  invalid_input,
  lambda_too_small,
  nonlinear_operator,
  index_out_of_range,
  unknown_family,
  config_version,
  io_error,
};

inline const char* errc_name(errc c) {
  switch (c) {
    case errc::resolution_too_coarse: return "resolution-too-coarse";
    case errc::invalid_exponent: return "invalid-exponent";
    case errc::invalid_weight: return "invalid-weight";
    case errc::non_integrable_weight: return "non-integrable-weight";
    case errc::shape_mismatch: return "shape-mismatch";
    case errc::degenerate_body: return "degenerate-body";
    case errc::no_convergence: return "no-convergence";
    case errc::invalid_backend: return "invalid-backend";
    case errc::singular_multiplier: return "singular-multiplier";
    case errc::invalid_input: return "invalid-input";
    case errc::lambda_too_small: return "lambda-too-small";
    case errc::nonlinear_operator: return "nonlinear-operator";
    case errc::index_out_of_range: return "index-out-of-range";
    case errc::unknown_family: return "unknown-family";
    case errc::config_version: return "config-version";
    case errc::io_error: return "io-error";
  }
  return "unknown";
}

/// Toolkit exception: a machine-readable code plus a human message.
class Error : public std::runtime_error {
 public:
  Error(errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

  errc code() const noexcept { return code_; }

 private:
  errc code_;
};

[[noreturn]] inline void fail(errc code, const std::string& what) { throw Error(code, what); }

}  // namespace dyadlab

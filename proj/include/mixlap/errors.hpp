#pragma once

#include <stdexcept>
#include <string>

namespace mixlap {

// Every failure mode raised by the library. CLI maps these onto exit codes.
enum class Errc {
  invalid_spec,
  empty_mask,
  zero_field,
  grid_mismatch,
  padding_too_small,
  invalid_order,
  too_large,
  not_symmetric,
  not_nested,
  degenerate_probe,
  collapsed_path,
  not_sign_changing,
  not_two_component,
  kernel_not_decreasing,
  constraint_violated,
  negative_input,
  non_positive_u,
  measure_mismatch,
  overlap,
  not_converged,
  inequality_violated,
  config_error,
  internal,
};

inline const char* errc_name(Errc c) {
  switch (c) {
    case Errc::invalid_spec: return "invalid_spec";
    case Errc::empty_mask: return "empty_mask";
    case Errc::zero_field: return "zero_field";
    case Errc::grid_mismatch: return "grid_mismatch";
    case Errc::padding_too_small: return "padding_too_small";
    case Errc::invalid_order: return "invalid_order";
    case Errc::too_large: return "too_large";
    case Errc::not_symmetric: return "not_symmetric";
    case Errc::not_nested: return "not_nested";
    case Errc::degenerate_probe: return "degenerate_probe";
    case Errc::collapsed_path: return "collapsed_path";
    case Errc::not_sign_changing: return "not_sign_changing";
    case Errc::not_two_component: return "not_two_component";
    case Errc::kernel_not_decreasing: return "kernel_not_decreasing";
    case Errc::constraint_violated: return "constraint_violated";
    case Errc::negative_input: return "negative_input";
    case Errc::non_positive_u: return "non_positive_u";
    case Errc::measure_mismatch: return "measure_mismatch";
    case Errc::overlap: return "overlap";
    case Errc::not_converged: return "not_converged";
    case Errc::inequality_violated: return "inequality_violated";
    case Errc::config_error: return "config_error";
    case Errc::internal: return "internal";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(Errc c, const std::string& msg)
      : std::runtime_error(std::string(errc_name(c)) + ": " + msg), code_(c) {}
  Errc code() const { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void raise(Errc c, const std::string& msg) { throw Error(c, msg); }

inline void require(bool cond, Errc c, const std::string& msg) {
  if (!cond) raise(c, msg);
}

}  // namespace mixlap

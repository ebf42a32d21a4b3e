#pragma once

#include <stdexcept>

// Special functions on the positive real axis. Strategy: shift the argument
// upward by the recurrence until the Bernoulli asymptotic series holds full
// double accuracy, then evaluate the series. Guaranteed absolute error is
// <= 1e-12 for x >= 1 (in practice ~1e-15) and <= 1e-10 on (0, 1).
namespace ucat::specfn {

struct SpecFnConfig {
  double target_abs_tol = 1e-12;  // accuracy bound for arguments >= 1

  SpecFnConfig() = default;
  explicit SpecFnConfig(double tol) : target_abs_tol(tol) {
    if (!(tol > 0.0)) throw std::invalid_argument("SpecFnConfig: target_abs_tol must be positive");
  }
};

// All functions throw std::domain_error for non-finite or non-positive input.
double lgamma(double x);
double digamma(double x);
double trigamma(double x);

// lgamma(x) - lgamma(y) and digamma(x) - digamma(y) without the catastrophic
// cancellation the naive difference suffers for large nearby arguments
// (|lgamma(1e12)|*eps ~ 3e-3 would otherwise swamp small differences).
double lgamma_diff(double x, double y);
double digamma_diff(double x, double y);

}  // namespace ucat::specfn

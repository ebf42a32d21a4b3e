#pragma once

// Test-side reference implementations. These deliberately avoid the library
// code paths they are used to check: log-densities go through std::lgamma,
// AUROC is the O(n^2) pairwise count, derivatives come from central
// differences, l_inf maxima from corner enumeration.

#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

namespace oracle {

inline double central_diff(const std::function<double(double)>& f, double x, double h) {
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

struct MeanStderr {
  double mean = 0.0;
  double stderr_ = 0.0;
};

inline MeanStderr mean_stderr(std::span<const double> xs) {
  if (xs.size() < 2) throw std::invalid_argument("mean_stderr: need at least two samples");
  double m = 0.0;
  for (double x : xs) m += x;
  m /= static_cast<double>(xs.size());
  double s2 = 0.0;
  for (double x : xs) s2 += (x - m) * (x - m);
  s2 /= static_cast<double>(xs.size() - 1);
  return {m, std::sqrt(s2 / static_cast<double>(xs.size()))};
}

inline double dirichlet_log_pdf(std::span<const double> x, std::span<const double> alpha) {
  double a0 = 0.0, lp = 0.0, lgsum = 0.0;
  for (std::size_t k = 0; k < alpha.size(); ++k) {
    a0 += alpha[k];
    lgsum += std::lgamma(alpha[k]);
    lp += (alpha[k] - 1.0) * std::log(x[k]);
  }
  return std::lgamma(a0) - lgsum + lp;
}

inline double categorical_entropy(std::span<const double> p) {
  double h = 0.0;
  for (double q : p) {
    if (q > 0.0) h -= q * std::log(q);
  }
  return h;
}

inline double pairwise_auroc(std::span<const double> scores, std::span<const int> positives) {
  double num = 0.0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!positives[i]) continue;
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (positives[j]) continue;
      ++pairs;
      if (scores[i] > scores[j]) num += 1.0;
      else if (scores[i] == scores[j]) num += 0.5;
    }
  }
  if (pairs == 0) throw std::invalid_argument("pairwise_auroc: needs both classes");
  return num / static_cast<double>(pairs);
}

// Max of f over all 2^m corners x0 +/- eps (clipped to [0,1]).
inline double corner_max(const std::function<double(std::span<const double>)>& f,
                         std::span<const double> x0, double eps) {
  const std::size_t m = x0.size();
  if (m > 20) throw std::invalid_argument("corner_max: too many dimensions");
  std::vector<double> x(m);
  double best = -1e300;
  for (std::size_t mask = 0; mask < (std::size_t{1} << m); ++mask) {
    for (std::size_t i = 0; i < m; ++i) {
      const double v = x0[i] + ((mask >> i) & 1 ? eps : -eps);
      x[i] = v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v);
    }
    best = std::max(best, f(x));
  }
  return best;
}

inline double rel_err(double got, double want) {
  const double denom = std::max(std::abs(want), 1e-12);
  return std::abs(got - want) / denom;
}

}  // namespace oracle

#pragma once

#include <cstdint>
#include <vector>

namespace ucat {

// Dirichlet concentration parameters; alpha0 is the cached sum.
struct DirichletParams {
  std::vector<double> alpha;
  double alpha0 = 0.0;

  DirichletParams() = default;
  // Validates every component finite and > 0, throws std::invalid_argument.
  explicit DirichletParams(std::vector<double> a);

  std::size_t size() const { return alpha.size(); }
};

struct UncertaintyTriple {
  double au;  // expected entropy of categorical draws, nats
  double eu;  // C / (alpha0 + C)
  double pu;  // entropy of the mean prediction alpha/alpha0, nats
};

// AU = -sum_k (alpha_k/alpha0) (psi(alpha_k + 1) - psi(alpha0 + 1)), in [0, ln C].
double aleatoric_uncertainty(const DirichletParams& p);

// EU = C / (alpha0 + C), in (0, 1).
double epistemic_uncertainty(const DirichletParams& p);

// Shannon entropy of alpha/alpha0 with 0*ln(0) = 0. Upper-bounds AU (Jensen).
double predictive_entropy(const DirichletParams& p);

UncertaintyTriple uncertainty_triple(const DirichletParams& p);

// KL(Dir(a) || Dir(b)), closed form. Tiny negative round-off in (-1e-12, 0) is
// clamped to 0; anything below -1e-12 throws (signals a special-function bug).
double kl_dirichlet(const DirichletParams& a, const DirichletParams& b);

// dKL/da_k = (a_k - b_k) psi1(a_k) - (a0 - b0) psi1(a0).
std::vector<double> kl_gradient_wrt_a(const DirichletParams& a, const DirichletParams& b);

// n simplex draws via normalized Gamma(alpha_k) variates; deterministic per seed.
std::vector<std::vector<double>> sample(const DirichletParams& p, std::size_t n, std::uint64_t seed);

}  // namespace ucat

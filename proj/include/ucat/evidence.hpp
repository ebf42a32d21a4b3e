#pragma once

#include <span>
#include <vector>

#include "ucat/dirichlet.hpp"

namespace ucat {

// Temperature-scaled similarity logits. When built from unit-normalized
// embeddings the raw cosines are kept alongside values = cos/tau: the evidence
// map then works on the cosines directly, which keeps the [1, exp(2/tau')]
// bounds exact at the endpoints instead of drifting by the tau*(cos/tau)
// round-trip error.
struct LogitVector {
  std::vector<double> values;
  double tau = 0.07;
  bool cosine_origin = false;
  std::vector<double> cosines;  // populated iff cosine_origin

  // Validates |cos| <= 1 (callers clamp dot-product round-off first).
  static LogitVector from_cosines(std::vector<double> cos, double tau);
  // Externally ingested logits; no cosine-range guarantee.
  static LogitVector external(std::vector<double> values, double tau);

  std::size_t size() const { return values.size(); }
};

enum class Stabilization {
  Linear,           // alpha = exp(h)
  SoftplusWrapped,  // alpha = exp(softplus(h)); raw softplus(h) behind softplus_raw
};

struct EvidenceProfile {
  double tau = 0.07;        // source temperature of the logits
  double tau_prime = 0.07;  // calibration divisor of the map
  Stabilization stabilization = Stabilization::Linear;
  bool softplus_raw = false;  // SoftplusWrapped only: alpha = softplus(h) itself

  double scale() const { return tau / tau_prime; }  // s = tau/tau'
  void validate() const;
};

// alpha_k = exp((tau*l_k + 1)/tau') in Linear mode (cosine path uses
// (cos_k + 1)/tau'). Throws std::range_error once h exceeds half the
// representable log range; silent saturation would fake Lemma-1 monotonicity.
DirichletParams evidence_map(const LogitVector& logits, const EvidenceProfile& profile);

// d alpha_k / d l_k for the configured stabilization.
std::vector<double> evidence_map_dalpha_dlogit(const LogitVector& logits,
                                               const EvidenceProfile& profile);

// Mean prediction alpha/alpha0.
std::vector<double> dirichlet_expectation(const DirichletParams& p);

// Numerically stable softmax / log-softmax / entropy helpers.
std::vector<double> softmax(std::span<const double> logits);
std::vector<double> log_softmax(std::span<const double> logits);
double shannon_entropy(std::span<const double> probs);  // nats, 0*ln0 = 0

struct EquivalenceCheck {
  double max_abs_dev;   // max_k |alpha_k/alpha0 - softmax(s*l)_k|
  bool argmax_match;
  bool tied;            // exact tie among the max logits; argmax check skipped
};

// Dirichlet mean vs softmax at scale s = tau/tau'; Linear stabilization only.
EquivalenceCheck check_lemma2_equivalence(const LogitVector& logits,
                                          const EvidenceProfile& profile);

struct SweepPoint {
  double scale;
  std::size_t argmax;
  double entropy;
  bool tied;
};

// softmax(s*l) across scales: argmax is invariant, entropy non-increasing in s.
std::vector<SweepPoint> scale_sweep_entropy(const LogitVector& logits,
                                            std::span<const double> scales);

// Dot product clamped into [-1, 1]; for unit vectors the excursion is round-off.
double unit_cosine(std::span<const double> u, std::span<const double> v);

}  // namespace ucat

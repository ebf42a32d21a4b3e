#pragma once

#include <span>
#include <vector>

#include "ucat/evidence.hpp"

namespace ucat {

enum class LossVariant { CeOnly, CePlusProbKl, CePlusDirichletKl };

// Regularizer weight normalization: lambda defaults to 1e5 / scale with
// scale = 2/exp(tau'). lambda is stored post-division; the scale goes into
// run metadata so sweeps can report lambda*scale grid points.
double kl_weight_scale(double tau_prime);
double default_kl_weight(double tau_prime);

struct LossConfig {
  LossVariant variant = LossVariant::CePlusDirichletKl;
  double lambda = default_kl_weight(0.07);
  EvidenceProfile profile;

  void validate() const;
};

// Cross-entropy on labels, -log softmax(l)_y, and its gradient wrt logits.
double loss_ce(const LogitVector& logits, int label);
std::vector<double> loss_ce_grad(const LogitVector& logits, int label);

// KL(softmax(adv) || softmax(clean)); invariant under a uniform logit shift.
double loss_prob_kl(const LogitVector& adv, const LogitVector& clean);
std::vector<double> loss_prob_kl_grad(const LogitVector& adv, const LogitVector& clean);

// KL(Dir(alpha_adv) || Dir(alpha_clean)); sensitive to uniform shifts because
// the evidence magnitudes scale with them. Clean side is treated as constant.
double loss_ucr(const LogitVector& adv, const LogitVector& clean, const EvidenceProfile& profile);
std::vector<double> loss_ucr_grad(const LogitVector& adv, const LogitVector& clean,
                                  const EvidenceProfile& profile);

struct BatchLoss {
  double total = 0.0;  // mean ce + lambda * mean reg
  double ce = 0.0;     // mean cross-entropy
  double reg = 0.0;    // mean regularizer, unweighted
  std::vector<std::vector<double>> grad_logits;  // d total / d adv logits, per sample
};

// Batch reduction in index order (deterministic). clean may be empty for CeOnly.
BatchLoss total_loss(std::span<const LogitVector> adv, std::span<const LogitVector> clean,
                     std::span<const int> labels, const LossConfig& config);

}  // namespace ucat

#include "ucat/losses.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "ucat/dirichlet.hpp"

namespace ucat {
namespace {

void check_label(const LogitVector& logits, int label, const char* fn) {
  if (label < 0 || static_cast<std::size_t>(label) >= logits.size())
    throw std::invalid_argument(std::string(fn) + ": label out of range");
}

void check_pair(const LogitVector& adv, const LogitVector& clean, const char* fn) {
  if (adv.size() != clean.size())
    throw std::invalid_argument(std::string(fn) + ": logit dimension mismatch");
  if (adv.tau != clean.tau)
    throw std::invalid_argument(std::string(fn) + ": temperature mismatch");
}

}  // namespace

double kl_weight_scale(double tau_prime) {
  if (!(tau_prime > 0.0) || !std::isfinite(tau_prime))
    throw std::invalid_argument("kl_weight_scale: tau_prime must be positive and finite");
  return 2.0 / std::exp(tau_prime);
}

double default_kl_weight(double tau_prime) { return 1e5 / kl_weight_scale(tau_prime); }

void LossConfig::validate() const {
  profile.validate();
  if (!(lambda >= 0.0) || !std::isfinite(lambda))
    throw std::invalid_argument("LossConfig: lambda must be non-negative and finite");
}

double loss_ce(const LogitVector& logits, int label) {
  check_label(logits, label, "loss_ce");
  return -log_softmax(logits.values)[static_cast<std::size_t>(label)];
}

std::vector<double> loss_ce_grad(const LogitVector& logits, int label) {
  check_label(logits, label, "loss_ce_grad");
  std::vector<double> g = softmax(logits.values);
  g[static_cast<std::size_t>(label)] -= 1.0;
  return g;
}

double loss_prob_kl(const LogitVector& adv, const LogitVector& clean) {
  check_pair(adv, clean, "loss_prob_kl");
  const std::vector<double> pa = softmax(adv.values);
  const std::vector<double> la = log_softmax(adv.values);
  const std::vector<double> lc = log_softmax(clean.values);
  double kl = 0.0;
  for (std::size_t k = 0; k < pa.size(); ++k) kl += pa[k] * (la[k] - lc[k]);
  return kl < 0.0 ? 0.0 : kl;
}

std::vector<double> loss_prob_kl_grad(const LogitVector& adv, const LogitVector& clean) {
  check_pair(adv, clean, "loss_prob_kl_grad");
  const std::vector<double> pa = softmax(adv.values);
  const std::vector<double> la = log_softmax(adv.values);
  const std::vector<double> lc = log_softmax(clean.values);
  double kl = 0.0;
  for (std::size_t k = 0; k < pa.size(); ++k) kl += pa[k] * (la[k] - lc[k]);
  std::vector<double> g(pa.size());
  for (std::size_t k = 0; k < pa.size(); ++k) g[k] = pa[k] * (la[k] - lc[k] - kl);
  return g;
}

double loss_ucr(const LogitVector& adv, const LogitVector& clean, const EvidenceProfile& profile) {
  check_pair(adv, clean, "loss_ucr");
  return kl_dirichlet(evidence_map(adv, profile), evidence_map(clean, profile));
}

std::vector<double> loss_ucr_grad(const LogitVector& adv, const LogitVector& clean,
                                  const EvidenceProfile& profile) {
  check_pair(adv, clean, "loss_ucr_grad");
  const DirichletParams a = evidence_map(adv, profile);
  const DirichletParams b = evidence_map(clean, profile);
  const std::vector<double> dkl = kl_gradient_wrt_a(a, b);
  const std::vector<double> da = evidence_map_dalpha_dlogit(adv, profile);
  std::vector<double> g(dkl.size());
  for (std::size_t k = 0; k < g.size(); ++k) g[k] = dkl[k] * da[k];
  return g;
}

BatchLoss total_loss(std::span<const LogitVector> adv, std::span<const LogitVector> clean,
                     std::span<const int> labels, const LossConfig& config) {
  config.validate();
  if (adv.empty()) throw std::invalid_argument("total_loss: empty batch");
  if (labels.size() != adv.size())
    throw std::invalid_argument("total_loss: label count mismatch");
  const bool needs_clean = config.variant != LossVariant::CeOnly;
  if (needs_clean && clean.size() != adv.size())
    throw std::invalid_argument("total_loss: clean logits required for this variant");

  const double inv_b = 1.0 / static_cast<double>(adv.size());
  BatchLoss out;
  out.grad_logits.resize(adv.size());
  for (std::size_t i = 0; i < adv.size(); ++i) {
    out.ce += loss_ce(adv[i], labels[i]);
    std::vector<double> g = loss_ce_grad(adv[i], labels[i]);
    if (needs_clean) {
      double reg = 0.0;
      std::vector<double> rg;
      if (config.variant == LossVariant::CePlusProbKl) {
        reg = loss_prob_kl(adv[i], clean[i]);
        rg = loss_prob_kl_grad(adv[i], clean[i]);
      } else {
        reg = loss_ucr(adv[i], clean[i], config.profile);
        rg = loss_ucr_grad(adv[i], clean[i], config.profile);
      }
      out.reg += reg;
      for (std::size_t k = 0; k < g.size(); ++k) g[k] += config.lambda * rg[k];
    }
    for (double& v : g) v *= inv_b;
    out.grad_logits[i] = std::move(g);
  }
  out.ce *= inv_b;
  out.reg *= inv_b;
  out.total = out.ce + (needs_clean ? config.lambda * out.reg : 0.0);
  return out;
}

}  // namespace ucat

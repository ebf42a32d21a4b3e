#include "ucat/evidence.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace ucat {
namespace {

// Half the representable log range; exp(2h) must stay finite for downstream
// products like alpha_k * alpha_j.
const double kMaxH = 0.5 * std::log(std::numeric_limits<double>::max());

double softplus(double h) {
  return h > 0.0 ? h + std::log1p(std::exp(-h)) : std::log1p(std::exp(h));
}

double logistic(double h) {
  return h > 0.0 ? 1.0 / (1.0 + std::exp(-h)) : std::exp(h) / (1.0 + std::exp(h));
}

void check_values(const std::vector<double>& v, const char* fn) {
  if (v.empty()) throw std::invalid_argument(std::string(fn) + ": empty logit vector");
  for (double x : v) {
    if (!std::isfinite(x)) throw std::invalid_argument(std::string(fn) + ": non-finite entry");
  }
}

// h_k = (tau*l_k + 1)/tau', taken from the cached cosines when available.
std::vector<double> map_exponents(const LogitVector& logits, const EvidenceProfile& profile) {
  profile.validate();
  if (logits.size() == 0) throw std::invalid_argument("evidence_map: empty logit vector");
  if (logits.tau != profile.tau)
    throw std::invalid_argument("evidence_map: profile tau does not match logit tau");
  std::vector<double> h(logits.size());
  for (std::size_t k = 0; k < h.size(); ++k) {
    const double c = logits.cosine_origin ? logits.cosines[k] : logits.tau * logits.values[k];
    h[k] = (c + 1.0) / profile.tau_prime;
    if (h[k] > kMaxH)
      throw std::range_error("evidence_map: exponent exceeds representable range");
  }
  return h;
}

}  // namespace

LogitVector LogitVector::from_cosines(std::vector<double> cos, double tau) {
  check_values(cos, "LogitVector::from_cosines");
  if (!(tau > 0.0) || !std::isfinite(tau))
    throw std::invalid_argument("LogitVector: tau must be positive and finite");
  for (double c : cos) {
    if (c < -1.0 || c > 1.0)
      throw std::invalid_argument("LogitVector::from_cosines: cosine outside [-1, 1]");
  }
  LogitVector lv;
  lv.tau = tau;
  lv.cosine_origin = true;
  lv.values.resize(cos.size());
  for (std::size_t k = 0; k < cos.size(); ++k) lv.values[k] = cos[k] / tau;
  lv.cosines = std::move(cos);
  return lv;
}

LogitVector LogitVector::external(std::vector<double> values, double tau) {
  check_values(values, "LogitVector::external");
  if (!(tau > 0.0) || !std::isfinite(tau))
    throw std::invalid_argument("LogitVector: tau must be positive and finite");
  LogitVector lv;
  lv.tau = tau;
  lv.cosine_origin = false;
  lv.values = std::move(values);
  return lv;
}

void EvidenceProfile::validate() const {
  if (!(tau > 0.0) || !std::isfinite(tau))
    throw std::invalid_argument("EvidenceProfile: tau must be positive and finite");
  if (!(tau_prime > 0.0) || !std::isfinite(tau_prime))
    throw std::invalid_argument("EvidenceProfile: tau_prime must be positive and finite");
}

DirichletParams evidence_map(const LogitVector& logits, const EvidenceProfile& profile) {
  std::vector<double> h = map_exponents(logits, profile);
  std::vector<double> alpha(h.size());
  for (std::size_t k = 0; k < h.size(); ++k) {
    switch (profile.stabilization) {
      case Stabilization::Linear:
        alpha[k] = std::exp(h[k]);
        break;
      case Stabilization::SoftplusWrapped:
        alpha[k] = profile.softplus_raw ? softplus(h[k]) : std::exp(softplus(h[k]));
        break;
    }
  }
  return DirichletParams(std::move(alpha));
}

std::vector<double> evidence_map_dalpha_dlogit(const LogitVector& logits,
                                               const EvidenceProfile& profile) {
  std::vector<double> h = map_exponents(logits, profile);
  const double s = profile.scale();
  std::vector<double> d(h.size());
  for (std::size_t k = 0; k < h.size(); ++k) {
    switch (profile.stabilization) {
      case Stabilization::Linear:
        d[k] = s * std::exp(h[k]);
        break;
      case Stabilization::SoftplusWrapped:
        d[k] = profile.softplus_raw
                   ? s * logistic(h[k])
                   : s * logistic(h[k]) * std::exp(softplus(h[k]));
        break;
    }
  }
  return d;
}

std::vector<double> dirichlet_expectation(const DirichletParams& p) {
  std::vector<double> mean(p.size());
  for (std::size_t k = 0; k < p.size(); ++k) mean[k] = p.alpha[k] / p.alpha0;
  return mean;
}

std::vector<double> softmax(std::span<const double> logits) {
  if (logits.empty()) throw std::invalid_argument("softmax: empty input");
  const double m = *std::max_element(logits.begin(), logits.end());
  std::vector<double> p(logits.size());
  double z = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    p[k] = std::exp(logits[k] - m);
    z += p[k];
  }
  for (double& v : p) v /= z;
  return p;
}

std::vector<double> log_softmax(std::span<const double> logits) {
  if (logits.empty()) throw std::invalid_argument("log_softmax: empty input");
  const double m = *std::max_element(logits.begin(), logits.end());
  double z = 0.0;
  for (double l : logits) z += std::exp(l - m);
  const double lse = m + std::log(z);
  std::vector<double> lp(logits.size());
  for (std::size_t k = 0; k < lp.size(); ++k) lp[k] = logits[k] - lse;
  return lp;
}

double shannon_entropy(std::span<const double> probs) {
  double h = 0.0;
  for (double q : probs) {
    if (q > 0.0) h -= q * std::log(q);
  }
  return h < 0.0 ? 0.0 : h;
}

EquivalenceCheck check_lemma2_equivalence(const LogitVector& logits,
                                          const EvidenceProfile& profile) {
  if (profile.stabilization != Stabilization::Linear)
    throw std::invalid_argument("check_lemma2_equivalence: Linear stabilization only");
  const DirichletParams alpha = evidence_map(logits, profile);
  const std::vector<double> dir_mean = dirichlet_expectation(alpha);

  const double s = profile.scale();
  std::vector<double> scaled(logits.size());
  for (std::size_t k = 0; k < scaled.size(); ++k) scaled[k] = s * logits.values[k];
  const std::vector<double> sm = softmax(scaled);

  EquivalenceCheck out{0.0, true, false};
  for (std::size_t k = 0; k < sm.size(); ++k) {
    out.max_abs_dev = std::max(out.max_abs_dev, std::abs(dir_mean[k] - sm[k]));
  }
  const auto arg = [](const std::vector<double>& v) {
    return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
  };
  const double lmax = *std::max_element(logits.values.begin(), logits.values.end());
  out.tied = std::count(logits.values.begin(), logits.values.end(), lmax) > 1;
  if (!out.tied) out.argmax_match = arg(dir_mean) == arg(sm);
  return out;
}

std::vector<SweepPoint> scale_sweep_entropy(const LogitVector& logits,
                                            std::span<const double> scales) {
  if (logits.size() == 0) throw std::invalid_argument("scale_sweep_entropy: empty logits");
  std::vector<SweepPoint> out;
  out.reserve(scales.size());
  const double lmax = *std::max_element(logits.values.begin(), logits.values.end());
  const bool tied = std::count(logits.values.begin(), logits.values.end(), lmax) > 1;
  for (double s : scales) {
    if (!(s > 0.0)) throw std::invalid_argument("scale_sweep_entropy: scales must be positive");
    std::vector<double> scaled(logits.size());
    for (std::size_t k = 0; k < scaled.size(); ++k) scaled[k] = s * logits.values[k];
    const std::vector<double> p = softmax(scaled);
    const std::size_t am =
        static_cast<std::size_t>(std::max_element(p.begin(), p.end()) - p.begin());
    out.push_back({s, am, shannon_entropy(p), tied});
  }
  return out;
}

double unit_cosine(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size()) throw std::invalid_argument("unit_cosine: dimension mismatch");
  double dot = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) dot += u[i] * v[i];
  return std::clamp(dot, -1.0, 1.0);
}

}  // namespace ucat

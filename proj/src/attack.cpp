#include "ucat/attack.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "ucat/losses.hpp"
#include "ucat/rng.hpp"

namespace ucat {
namespace {

double sign_step(double g) { return g > 0.0 ? 1.0 : (g < 0.0 ? -1.0 : 0.0); }

class CrossEntropyObjective final : public Objective {
public:
  CrossEntropyObjective(const ContrastiveModel& model, int label)
      : model_(model), label_(label) {}

  double value(std::span<const double> x) const override {
    return loss_ce(model_.forward(x).logits, label_);
  }

  std::vector<double> grad(std::span<const double> x) const override {
    const auto fw = model_.forward(x);
    return model_.grad_input(fw, x, loss_ce_grad(fw.logits, label_));
  }

private:
  const ContrastiveModel& model_;
  int label_;
};

class MarginObjective final : public Objective {
public:
  MarginObjective(const ContrastiveModel& model, int label, double kappa)
      : model_(model), label_(label), kappa_(kappa) {}

  double value(std::span<const double> x) const override {
    return margin_loss(model_.forward(x).logits, label_, kappa_);
  }

  std::vector<double> grad(std::span<const double> x) const override {
    const auto fw = model_.forward(x);
    const auto& l = fw.logits.values;
    std::vector<double> up(l.size(), 0.0);
    std::size_t best = label_ == 0 ? 1 : 0;
    for (std::size_t j = 0; j < l.size(); ++j) {
      if (j != static_cast<std::size_t>(label_) && l[j] > l[best]) best = j;
    }
    // Flat below the -kappa floor: zero gradient there.
    if (l[best] - l[static_cast<std::size_t>(label_)] > -kappa_) {
      up[best] = 1.0;
      up[static_cast<std::size_t>(label_)] = -1.0;
    }
    return model_.grad_input(fw, x, up);
  }

private:
  const ContrastiveModel& model_;
  int label_;
  double kappa_;
};

class UcatObjective final : public Objective {
public:
  UcatObjective(const ContrastiveModel& model, const Sample& sample, double lambda,
                EvidenceProfile profile)
      : model_(model), label_(sample.label), lambda_(lambda), profile_(profile),
        clean_logits_(model.forward(sample.x).logits) {}

  double value(std::span<const double> x) const override {
    const auto fw = model_.forward(x);
    return loss_ce(fw.logits, label_) + lambda_ * loss_ucr(fw.logits, clean_logits_, profile_);
  }

  std::vector<double> grad(std::span<const double> x) const override {
    const auto fw = model_.forward(x);
    std::vector<double> up = loss_ce_grad(fw.logits, label_);
    const std::vector<double> rg = loss_ucr_grad(fw.logits, clean_logits_, profile_);
    for (std::size_t k = 0; k < up.size(); ++k) up[k] += lambda_ * rg[k];
    return model_.grad_input(fw, x, up);
  }

private:
  const ContrastiveModel& model_;
  int label_;
  double lambda_;
  EvidenceProfile profile_;
  LogitVector clean_logits_;
};

}  // namespace

void AttackConfig::validate() const {
  if (!(epsilon >= 0.0) || !std::isfinite(epsilon))
    throw std::invalid_argument("AttackConfig: epsilon must be non-negative and finite");
  if (!(step_size >= 0.0) || !std::isfinite(step_size))
    throw std::invalid_argument("AttackConfig: step_size must be non-negative and finite");
  if (steps < 0) throw std::invalid_argument("AttackConfig: steps must be non-negative");
  if (!(kappa >= 0.0) || !std::isfinite(kappa))
    throw std::invalid_argument("AttackConfig: kappa must be non-negative and finite");
  if (objective == AttackObjectiveKind::UcatCombined) {
    if (!(lambda >= 0.0) || !std::isfinite(lambda))
      throw std::invalid_argument("AttackConfig: lambda must be non-negative and finite");
    profile.validate();
  }
}

double margin_loss(const LogitVector& logits, int label, double kappa) {
  if (logits.size() < 2) throw std::invalid_argument("margin_loss: needs at least two classes");
  if (label < 0 || static_cast<std::size_t>(label) >= logits.size())
    throw std::invalid_argument("margin_loss: label out of range");
  if (!(kappa >= 0.0) || !std::isfinite(kappa))
    throw std::invalid_argument("margin_loss: kappa must be non-negative and finite");
  const auto& l = logits.values;
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < l.size(); ++j) {
    if (j != static_cast<std::size_t>(label)) best = std::max(best, l[j]);
  }
  return std::max(best - l[static_cast<std::size_t>(label)], -kappa);
}

AdversarialExample pgd(std::span<const double> x0, const AttackConfig& config,
                       const Objective& objective) {
  config.validate();
  if (x0.empty()) throw std::invalid_argument("pgd: empty input");
  for (double v : x0) {
    if (!(v >= 0.0 && v <= 1.0))
      throw std::invalid_argument("pgd: input outside [0, 1]");
  }

  std::vector<double> lo(x0.size()), hi(x0.size());
  for (std::size_t i = 0; i < x0.size(); ++i) {
    lo[i] = std::max(0.0, x0[i] - config.epsilon);
    hi[i] = std::min(1.0, x0[i] + config.epsilon);
  }

  AdversarialExample out;
  out.x_adv.assign(x0.begin(), x0.end());
  if (config.random_start && config.epsilon > 0.0) {
    Rng rng(config.seed);
    for (std::size_t i = 0; i < out.x_adv.size(); ++i) {
      out.x_adv[i] = std::clamp(out.x_adv[i] + rng.uniform(-config.epsilon, config.epsilon),
                                lo[i], hi[i]);
    }
  }

  const auto record = [&](double v) { out.loss_trace.push_back(v); };
  try {
    record(objective.value(out.x_adv));
    for (int t = 0; t < config.steps; ++t) {
      const std::vector<double> g = objective.grad(out.x_adv);
      for (std::size_t i = 0; i < out.x_adv.size(); ++i) {
        out.x_adv[i] = std::clamp(out.x_adv[i] + config.step_size * sign_step(g[i]), lo[i], hi[i]);
      }
      record(objective.value(out.x_adv));
    }
  } catch (const DegenerateEmbeddingError&) {
    out.valid = false;
  }

  out.delta_linf = 0.0;
  for (std::size_t i = 0; i < out.x_adv.size(); ++i) {
    const double d = std::abs(out.x_adv[i] - x0[i]);
    out.delta_linf = std::max(out.delta_linf, d);
    // 1e-12 slack absorbs the fl(x0 - eps) rounding of the box edges.
    if (d > config.epsilon + 1e-12 || out.x_adv[i] < 0.0 || out.x_adv[i] > 1.0)
      throw std::logic_error("pgd: projection invariant violated");
  }
  return out;
}

std::unique_ptr<Objective> make_objective(const ContrastiveModel& model, const Sample& sample,
                                          const AttackConfig& config) {
  switch (config.objective) {
    case AttackObjectiveKind::CrossEntropy:
      return std::make_unique<CrossEntropyObjective>(model, sample.label);
    case AttackObjectiveKind::Margin:
      return std::make_unique<MarginObjective>(model, sample.label, config.kappa);
    case AttackObjectiveKind::UcatCombined: {
      EvidenceProfile p = config.profile;
      p.tau = model.tau;
      return std::make_unique<UcatObjective>(model, sample, config.lambda, p);
    }
  }
  throw std::logic_error("make_objective: unknown objective kind");
}

AdversarialExample pgd(const ContrastiveModel& model, const Sample& sample,
                       const AttackConfig& config) {
  const auto obj = make_objective(model, sample, config);
  return pgd(sample.x, config, *obj);
}

}  // namespace ucat

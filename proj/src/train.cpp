#include "ucat/train.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "ucat/evaluate.hpp"
#include "ucat/rng.hpp"

namespace ucat {
namespace {

bool attack_enabled(const AttackConfig& a) {
  return a.epsilon > 0.0 && (a.steps > 0 || a.random_start);
}

void clip_to(std::vector<double>& g, double cap) {
  if (cap <= 0.0) return;
  double norm2 = 0.0;
  for (double v : g) norm2 += v * v;
  const double norm = std::sqrt(norm2);
  if (norm > cap) {
    const double scale = cap / norm;
    for (double& v : g) v *= scale;
  }
}

}  // namespace

void TrainConfig::validate() const {
  if (epochs < 0) throw std::invalid_argument("TrainConfig: epochs must be non-negative");
  if (batch_size < 1) throw std::invalid_argument("TrainConfig: batch_size must be positive");
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate))
    throw std::invalid_argument("TrainConfig: learning_rate must be non-negative and finite");
  if (!(momentum >= 0.0) || momentum >= 1.0)
    throw std::invalid_argument("TrainConfig: momentum must be in [0, 1)");
  if (!(grad_clip_norm >= 0.0) || !std::isfinite(grad_clip_norm))
    throw std::invalid_argument("TrainConfig: grad_clip_norm must be non-negative and finite");
  if (!(reg_clip_ratio >= 0.0) || !std::isfinite(reg_clip_ratio))
    throw std::invalid_argument("TrainConfig: reg_clip_ratio must be non-negative and finite");
  loss.validate();
  attack.validate();
}

TrainLog finetune(ContrastiveModel& model, const Dataset& train_split, const Dataset& eval_split,
                  const TrainConfig& config) {
  config.validate();
  model.validate();
  train_split.validate();
  eval_split.validate();
  if (train_split.spec.classes != model.num_classes ||
      train_split.spec.input_dim != model.input_dim)
    throw std::invalid_argument("finetune: dataset does not match model shape");

  TrainLog log;
  log.config = config;
  log.data_seed = train_split.spec.seed;
  log.model_seed = model.init_seed;
  log.kl_scale = kl_weight_scale(config.loss.profile.tau_prime);

  EvidenceProfile profile = config.loss.profile;
  profile.tau = model.tau;
  LossConfig loss_cfg = config.loss;
  loss_cfg.profile = profile;
  LossConfig ce_cfg = loss_cfg;
  ce_cfg.variant = LossVariant::CeOnly;
  const bool per_term_clip =
      config.loss.variant != LossVariant::CeOnly && config.grad_clip_norm > 0.0;

  const std::size_t n = train_split.samples.size();
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;

  std::vector<double> velocity(model.weights.size(), 0.0);
  const bool attacking = attack_enabled(config.attack);

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const double lr =
        config.cosine_decay
            ? config.learning_rate * 0.5 *
                  (1.0 + std::cos(std::numbers::pi * epoch / config.epochs))
            : config.learning_rate;

    Rng shuffle_rng(mix_seed(config.shuffle_seed, static_cast<std::uint64_t>(epoch)));
    shuffle_rng.shuffle(order);

    EpochStats stats;
    stats.epoch = epoch;
    stats.lr = lr;
    double loss_weight = 0.0;

    for (std::size_t start = 0; start < n; start += config.batch_size) {
      const std::size_t stop = std::min(n, start + config.batch_size);
      const std::size_t bs = stop - start;

      std::vector<LogitVector> clean_logits(bs), adv_logits(bs);
      std::vector<ContrastiveModel::Forward> adv_fw(bs);
      std::vector<std::vector<double>> adv_x(bs);
      std::vector<int> labels(bs);

      for (std::size_t b = 0; b < bs; ++b) {
        const Sample& s = train_split.samples[order[start + b]];
        labels[b] = s.label;
        clean_logits[b] = model.forward(s.x).logits;
        if (attacking) {
          AttackConfig atk = config.attack;
          atk.seed = mix_seed(mix_seed(config.attack.seed, static_cast<std::uint64_t>(epoch)),
                              order[start + b]);
          AdversarialExample adv = pgd(model, s, atk);
          if (!adv.valid) ++stats.degenerate_attacks;
          adv_x[b] = std::move(adv.x_adv);
        } else {
          adv_x[b] = s.x;
        }
        adv_fw[b] = model.forward(adv_x[b]);
        adv_logits[b] = adv_fw[b].logits;
      }

      const BatchLoss batch = total_loss(adv_logits, clean_logits, labels, loss_cfg);
      if (!std::isfinite(batch.total))
        throw std::runtime_error("finetune: loss diverged at epoch " + std::to_string(epoch) +
                                 ", batch " + std::to_string(start / config.batch_size));
      stats.loss_total += batch.total * static_cast<double>(bs);
      stats.loss_ce += batch.ce * static_cast<double>(bs);
      stats.loss_reg += batch.reg * static_cast<double>(bs);
      loss_weight += static_cast<double>(bs);

      std::vector<double> grad(model.weights.size(), 0.0);
      for (std::size_t b = 0; b < bs; ++b) {
        const std::vector<double> gw = model.grad_weights(adv_fw[b], adv_x[b], batch.grad_logits[b]);
        for (std::size_t j = 0; j < grad.size(); ++j) grad[j] += gw[j];
      }

      if (per_term_clip) {
        // Decompose into the CE part and the regularizer part, cap each on
        // its own budget, then recombine.
        const BatchLoss ce_batch = total_loss(adv_logits, clean_logits, labels, ce_cfg);
        std::vector<double> g_ce(model.weights.size(), 0.0);
        for (std::size_t b = 0; b < bs; ++b) {
          const std::vector<double> gw =
              model.grad_weights(adv_fw[b], adv_x[b], ce_batch.grad_logits[b]);
          for (std::size_t j = 0; j < g_ce.size(); ++j) g_ce[j] += gw[j];
        }
        std::vector<double> g_reg(model.weights.size());
        for (std::size_t j = 0; j < g_reg.size(); ++j) g_reg[j] = grad[j] - g_ce[j];
        clip_to(g_ce, config.grad_clip_norm);
        clip_to(g_reg, config.reg_clip_ratio * config.grad_clip_norm);
        for (std::size_t j = 0; j < grad.size(); ++j) grad[j] = g_ce[j] + g_reg[j];
      } else {
        clip_to(grad, config.grad_clip_norm);
      }

      for (std::size_t j = 0; j < velocity.size(); ++j) {
        velocity[j] = config.momentum * velocity[j] + grad[j];
        model.weights[j] -= lr * velocity[j];
      }
    }

    stats.loss_total /= loss_weight;
    stats.loss_ce /= loss_weight;
    stats.loss_reg /= loss_weight;

    const ModelEval clean_eval = eval_clean(model, eval_split.samples, profile);
    stats.clean_acc = clean_eval.acc.value;
    stats.pu_clean = clean_eval.mean_pu;
    stats.au_clean = clean_eval.mean_au;
    stats.eu_clean = clean_eval.mean_eu;
    if (attacking) {
      const ModelEval adv_eval = eval_attacked(model, eval_split.samples, config.attack, profile);
      stats.robust_acc = adv_eval.acc.value;
      stats.pu_adv = adv_eval.mean_pu;
      stats.au_adv = adv_eval.mean_au;
      stats.eu_adv = adv_eval.mean_eu;
    } else {
      stats.robust_acc = stats.clean_acc;
      stats.pu_adv = stats.pu_clean;
      stats.au_adv = stats.au_clean;
      stats.eu_adv = stats.eu_clean;
    }
    log.epochs.push_back(stats);
  }

  if (!log.epochs.empty()) {
    log.final_clean_acc = log.epochs.back().clean_acc;
    log.final_robust_acc = log.epochs.back().robust_acc;
  } else {
    const ModelEval clean_eval = eval_clean(model, eval_split.samples, profile);
    log.final_clean_acc = clean_eval.acc.value;
    log.final_robust_acc = clean_eval.acc.value;
  }
  return log;
}

}  // namespace ucat

#pragma once

#include <cstdint>
#include <vector>

#include "ucat/attack.hpp"
#include "ucat/data.hpp"
#include "ucat/losses.hpp"

namespace ucat {

struct TrainConfig {
  int epochs = 30;
  int batch_size = 64;
  double learning_rate = 0.05;
  double momentum = 0.9;
  bool cosine_decay = true;
  // Global-norm gradient clip; 0 disables. Needed because the Dirichlet-KL
  // gradient scales with max(alpha) ~ exp(2/tau'), far beyond what plain SGD
  // survives on the first fine-tuning batches.
  double grad_clip_norm = 1.0;
  // For two-term losses the CE and regularizer gradients are clipped
  // separately: CE to grad_clip_norm, the regularizer to reg_clip_ratio *
  // grad_clip_norm. A single joint clip would let the regularizer's norm
  // (lambda * KL gradients, ~10 orders above CE) swallow the label signal
  // entirely; capping the regularizer below CE keeps both terms effective.
  // Values above 1 overweight distributional alignment and destabilize
  // training on the synthetic benchmark.
  double reg_clip_ratio = 0.5;
  LossConfig loss;
  AttackConfig attack;  // eps = 0, steps = 0 reproduces clean training
  std::uint64_t shuffle_seed = 0;

  void validate() const;
};

struct EpochStats {
  int epoch = 0;
  double lr = 0.0;
  double loss_total = 0.0;
  double loss_ce = 0.0;
  double loss_reg = 0.0;
  double clean_acc = 0.0;
  double robust_acc = 0.0;  // under the training attack settings
  double pu_clean = 0.0, pu_adv = 0.0;
  double au_clean = 0.0, au_adv = 0.0;
  double eu_clean = 0.0, eu_adv = 0.0;
  std::size_t degenerate_attacks = 0;
};

struct TrainLog {
  TrainConfig config;
  std::uint64_t data_seed = 0;
  std::uint64_t model_seed = 0;
  double kl_scale = 0.0;  // 2/exp(tau'), metadata companion of lambda
  std::vector<EpochStats> epochs;
  double final_clean_acc = 0.0;
  double final_robust_acc = 0.0;
};

// SGD with momentum and per-epoch cosine decay; adversarial examples are
// regenerated for every batch at current weights, clean logits are taken
// without gradient tracking. Throws on non-finite loss (divergence guard).
// Per-epoch stats are measured on eval_split.
TrainLog finetune(ContrastiveModel& model, const Dataset& train_split, const Dataset& eval_split,
                  const TrainConfig& config);

}  // namespace ucat

#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ucat/attack.hpp"
#include "ucat/data.hpp"
#include "ucat/metrics.hpp"

namespace ucat {

struct NamedAttack {
  std::string name;  // original spec string, carried into reports
  AttackConfig config;
};

// "ce:eps=0.03,steps=100,step=0.03;margin:eps=0.03,steps=10,kappa=0.5"
// objective one of ce|margin|ucat; keys eps, steps, step, kappa, lambda, rs, seed.
// step defaults to eps (single-shot convention for eval-strength attacks).
std::vector<NamedAttack> parse_attack_specs(const std::string& text);

struct ModelEval {
  AccuracyResult acc;
  double mean_pu = 0.0;
  double mean_au = 0.0;
  double mean_eu = 0.0;
  std::optional<double> mean_pu_correct;  // over correctly classified records only
  std::vector<PredictionRecord> records;
  std::size_t degenerate = 0;  // attacks aborted by degenerate embeddings
};

// Per-row probabilities are the native softmax of the logits; AU/EU come from
// the evidence map under `profile` (profile.tau is overwritten by model.tau).
ModelEval eval_clean(const ContrastiveModel& model, std::span<const Sample> samples,
                     const EvidenceProfile& profile);
ModelEval eval_attacked(const ContrastiveModel& model, std::span<const Sample> samples,
                        const AttackConfig& attack, const EvidenceProfile& profile);

struct AttackEvalBlock {
  std::string name;
  double epsilon = 0.0;
  int steps = 0;
  double step_size = 0.0;
  std::string objective;
  double robust_acc = 0.0;
  double harmonic_mean_acc = 0.0;  // H(clean accuracy, robust accuracy)
  std::optional<double> ece_adv;
  std::optional<double> au_auroc;  // undefined when a class is empty
  std::optional<double> eu_auroc;
  double mean_pu_adv = 0.0;
  double mean_au_adv = 0.0;
  double mean_eu_adv = 0.0;
  std::optional<double> mean_pu_adv_correct;
};

// Headline adversarial numbers mirror the first attack in the list.
struct EvalReport {
  double clean_acc = 0.0;
  double ece_clean = 0.0;
  double mean_pu_clean = 0.0;
  double mean_au_clean = 0.0;
  double mean_eu_clean = 0.0;
  std::optional<double> mean_pu_clean_correct;
  double robust_acc = 0.0;
  std::optional<double> ece_adv;
  std::optional<double> au_auroc;
  std::optional<double> eu_auroc;
  double mean_pu_adv = 0.0;
  std::optional<double> mean_pu_adv_correct;
  double harmonic_mean_acc = 0.0;
  std::vector<AttackEvalBlock> attacks;
};

struct EvalOutput {
  EvalReport report;
  std::vector<PredictionRecord> clean_records;
  std::vector<std::vector<PredictionRecord>> adv_records;  // per attack
};

EvalOutput evaluate(const ContrastiveModel& model, std::span<const Sample> samples,
                    const std::vector<NamedAttack>& attacks, const EvidenceProfile& profile);

// AUROC over a record set with misclassified-or-tied as the positive class;
// nullopt when the set has no error or no correct prediction.
std::optional<double> misclassification_auroc(std::span<const PredictionRecord> records,
                                              double PredictionRecord::* score);

}  // namespace ucat

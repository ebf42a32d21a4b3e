#pragma once

#include <span>
#include <string>
#include <vector>

#include "ucat/dirichlet.hpp"

namespace ucat {

struct PredictionRecord {
  std::vector<double> probs;
  int label = 0;
  int pred = 0;      // lowest argmax index; on an exact tie the record is scored incorrect
  bool tie = false;
  double au = 0.0;
  double eu = 0.0;
  double pu = 0.0;
  std::string condition;  // "clean" | "adversarial"
};

PredictionRecord make_record(std::vector<double> probs, int label, UncertaintyTriple u,
                             std::string condition);

struct AccuracyResult {
  double value = 0.0;
  std::size_t ties = 0;
  std::size_t count = 0;
};

AccuracyResult accuracy(std::span<const PredictionRecord> records);

// Equal-width confidence bins (b/n, (b+1)/n], first bin closed below;
// confidence is the max predicted probability.
double ece(std::span<const PredictionRecord> records, int num_bins = 15);

// Rank-based Mann-Whitney AUROC, ties get half credit; equals the O(n^2)
// pairwise count. Throws if either class is empty.
double auroc(std::span<const double> scores, std::span<const int> positives);

// 2cr/(c+r); 0 when either input is <= 0. Scale-invariant, so fractions and
// percents give consistently scaled results.
double harmonic_mean(double c, double r);

struct OrderingCheck {
  double pretrained_clean = 0.0;
  double finetuned_clean = 0.0;
  double finetuned_adv = 0.0;
  bool holds = false;  // strict pretrained_clean < finetuned_clean < finetuned_adv
};

OrderingCheck uncertainty_ordering(double pretrained_clean, double finetuned_clean,
                                   double finetuned_adv);

}  // namespace ucat

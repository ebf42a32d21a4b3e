#include "ucat/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace ucat {

PredictionRecord make_record(std::vector<double> probs, int label, UncertaintyTriple u,
                             std::string condition) {
  if (probs.empty()) throw std::invalid_argument("make_record: empty probabilities");
  if (label < 0 || static_cast<std::size_t>(label) >= probs.size())
    throw std::invalid_argument("make_record: label out of range");
  PredictionRecord r;
  const double best = *std::max_element(probs.begin(), probs.end());
  r.pred = static_cast<int>(std::find(probs.begin(), probs.end(), best) - probs.begin());
  r.tie = std::count(probs.begin(), probs.end(), best) > 1;
  r.probs = std::move(probs);
  r.label = label;
  r.au = u.au;
  r.eu = u.eu;
  r.pu = u.pu;
  r.condition = std::move(condition);
  return r;
}

AccuracyResult accuracy(std::span<const PredictionRecord> records) {
  if (records.empty()) throw std::invalid_argument("accuracy: empty record set");
  AccuracyResult out;
  out.count = records.size();
  std::size_t hit = 0;
  for (const auto& r : records) {
    if (r.tie) {
      ++out.ties;  // ambiguous argmax is scored as an error
      continue;
    }
    if (r.pred == r.label) ++hit;
  }
  out.value = static_cast<double>(hit) / static_cast<double>(records.size());
  return out;
}

double ece(std::span<const PredictionRecord> records, int num_bins) {
  if (records.empty()) throw std::invalid_argument("ece: empty record set");
  if (num_bins < 1) throw std::invalid_argument("ece: need at least one bin");
  std::vector<double> conf_sum(num_bins, 0.0), acc_sum(num_bins, 0.0);
  std::vector<std::size_t> count(num_bins, 0);
  for (const auto& r : records) {
    const double conf = *std::max_element(r.probs.begin(), r.probs.end());
    if (!(conf >= 0.0 && conf <= 1.0)) throw std::invalid_argument("ece: confidence outside [0,1]");
    int b = static_cast<int>(std::ceil(conf * num_bins)) - 1;  // (b/n, (b+1)/n]
    b = std::clamp(b, 0, num_bins - 1);                        // first bin closed below
    conf_sum[b] += conf;
    acc_sum[b] += (!r.tie && r.pred == r.label) ? 1.0 : 0.0;
    count[b] += 1;
  }
  const double n = static_cast<double>(records.size());
  double e = 0.0;
  for (int b = 0; b < num_bins; ++b) {
    if (count[b] == 0) continue;
    const double m = static_cast<double>(count[b]);
    e += (m / n) * std::abs(acc_sum[b] / m - conf_sum[b] / m);
  }
  return e;
}

double auroc(std::span<const double> scores, std::span<const int> positives) {
  if (scores.size() != positives.size())
    throw std::invalid_argument("auroc: size mismatch");
  if (scores.empty()) throw std::invalid_argument("auroc: empty input");
  std::size_t pos = 0;
  for (int p : positives) pos += p ? 1 : 0;
  const std::size_t neg = scores.size() - pos;
  if (pos == 0 || neg == 0)
    throw std::invalid_argument("auroc: needs at least one positive and one negative");

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  // Average ranks within tie groups; 1-based ranks.
  double pos_rank_sum = 0.0;
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && scores[order[j + 1]] == scores[order[i]]) ++j;
    const double avg_rank = 0.5 * static_cast<double>(i + 1 + j + 1);
    for (std::size_t k = i; k <= j; ++k) {
      if (positives[order[k]]) pos_rank_sum += avg_rank;
    }
    i = j + 1;
  }
  const double p = static_cast<double>(pos);
  const double q = static_cast<double>(neg);
  return (pos_rank_sum - p * (p + 1.0) / 2.0) / (p * q);
}

double harmonic_mean(double c, double r) {
  if (!(c > 0.0) || !(r > 0.0)) return 0.0;
  return 2.0 * c * r / (c + r);
}

OrderingCheck uncertainty_ordering(double pretrained_clean, double finetuned_clean,
                                   double finetuned_adv) {
  OrderingCheck o;
  o.pretrained_clean = pretrained_clean;
  o.finetuned_clean = finetuned_clean;
  o.finetuned_adv = finetuned_adv;
  o.holds = pretrained_clean < finetuned_clean && finetuned_clean < finetuned_adv;
  return o;
}

}  // namespace ucat

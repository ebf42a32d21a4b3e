#include "ucat/evaluate.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "ucat/losses.hpp"
#include "ucat/rng.hpp"

namespace ucat {
namespace {

PredictionRecord record_for(const ContrastiveModel& model, const LogitVector& logits, int label,
                            const EvidenceProfile& profile, const char* condition) {
  EvidenceProfile p = profile;
  p.tau = model.tau;
  const DirichletParams alpha = evidence_map(logits, p);
  UncertaintyTriple u;
  u.au = aleatoric_uncertainty(alpha);
  u.eu = epistemic_uncertainty(alpha);
  std::vector<double> probs = softmax(logits.values);
  u.pu = shannon_entropy(probs);
  return make_record(std::move(probs), label, u, condition);
}

void finish(ModelEval& ev) {
  ev.acc = accuracy(ev.records);
  double pu = 0.0, au = 0.0, eu = 0.0, pu_correct = 0.0;
  std::size_t n_correct = 0;
  for (const auto& r : ev.records) {
    pu += r.pu;
    au += r.au;
    eu += r.eu;
    if (!r.tie && r.pred == r.label) {
      pu_correct += r.pu;
      ++n_correct;
    }
  }
  const double n = static_cast<double>(ev.records.size());
  ev.mean_pu = pu / n;
  ev.mean_au = au / n;
  ev.mean_eu = eu / n;
  if (n_correct > 0) ev.mean_pu_correct = pu_correct / static_cast<double>(n_correct);
}

double parse_num(const std::string& v, const std::string& key) {
  try {
    std::size_t used = 0;
    const double x = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw std::invalid_argument("attack spec: bad value for '" + key + "': '" + v + "'");
  }
}

}  // namespace

std::vector<NamedAttack> parse_attack_specs(const std::string& text) {
  std::vector<NamedAttack> out;
  std::istringstream ss(text);
  std::string entry;
  while (std::getline(ss, entry, ';')) {
    if (entry.empty()) continue;
    const auto colon = entry.find(':');
    const std::string objective = entry.substr(0, colon);
    NamedAttack na;
    na.name = entry;
    if (objective == "ce") {
      na.config.objective = AttackObjectiveKind::CrossEntropy;
    } else if (objective == "margin") {
      na.config.objective = AttackObjectiveKind::Margin;
    } else if (objective == "ucat") {
      na.config.objective = AttackObjectiveKind::UcatCombined;
      na.config.lambda = default_kl_weight(0.07);
    } else {
      throw std::invalid_argument("attack spec: unknown objective '" + objective + "'");
    }
    bool have_step = false;
    if (colon != std::string::npos) {
      std::istringstream kvs(entry.substr(colon + 1));
      std::string kv;
      while (std::getline(kvs, kv, ',')) {
        if (kv.empty()) continue;
        const auto eq = kv.find('=');
        if (eq == std::string::npos)
          throw std::invalid_argument("attack spec: expected key=value, got '" + kv + "'");
        const std::string key = kv.substr(0, eq);
        const std::string val = kv.substr(eq + 1);
        if (key == "eps") na.config.epsilon = parse_num(val, key);
        else if (key == "steps") na.config.steps = static_cast<int>(parse_num(val, key));
        else if (key == "step") { na.config.step_size = parse_num(val, key); have_step = true; }
        else if (key == "kappa") na.config.kappa = parse_num(val, key);
        else if (key == "lambda") na.config.lambda = parse_num(val, key);
        else if (key == "rs") na.config.random_start = parse_num(val, key) != 0.0;
        else if (key == "seed") na.config.seed = static_cast<std::uint64_t>(parse_num(val, key));
        else throw std::invalid_argument("attack spec: unknown key '" + key + "'");
      }
    }
    if (!have_step) na.config.step_size = na.config.epsilon;
    na.config.validate();
    out.push_back(std::move(na));
  }
  if (out.empty()) throw std::invalid_argument("attack spec: empty attack list");
  return out;
}

ModelEval eval_clean(const ContrastiveModel& model, std::span<const Sample> samples,
                     const EvidenceProfile& profile) {
  if (samples.empty()) throw std::invalid_argument("eval_clean: empty sample set");
  ModelEval ev;
  ev.records.reserve(samples.size());
  for (const Sample& s : samples) {
    ev.records.push_back(record_for(model, model.forward(s.x).logits, s.label, profile, "clean"));
  }
  finish(ev);
  return ev;
}

ModelEval eval_attacked(const ContrastiveModel& model, std::span<const Sample> samples,
                        const AttackConfig& attack, const EvidenceProfile& profile) {
  if (samples.empty()) throw std::invalid_argument("eval_attacked: empty sample set");
  ModelEval ev;
  ev.records.reserve(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    AttackConfig cfg = attack;
    cfg.seed = mix_seed(attack.seed, i);
    const AdversarialExample adv = pgd(model, samples[i], cfg);
    if (!adv.valid) ++ev.degenerate;
    // An aborted attack leaves the last in-budget iterate; still a legal input.
    ev.records.push_back(record_for(model, model.forward(adv.x_adv).logits, samples[i].label,
                                    profile, "adversarial"));
  }
  finish(ev);
  return ev;
}

std::optional<double> misclassification_auroc(std::span<const PredictionRecord> records,
                                              double PredictionRecord::* score) {
  std::vector<double> s;
  std::vector<int> pos;
  s.reserve(records.size());
  pos.reserve(records.size());
  for (const auto& r : records) {
    s.push_back(r.*score);
    pos.push_back((r.tie || r.pred != r.label) ? 1 : 0);
  }
  try {
    return auroc(s, pos);
  } catch (const std::invalid_argument&) {
    return std::nullopt;  // one of the classes is empty
  }
}

EvalOutput evaluate(const ContrastiveModel& model, std::span<const Sample> samples,
                    const std::vector<NamedAttack>& attacks, const EvidenceProfile& profile) {
  if (attacks.empty()) throw std::invalid_argument("evaluate: need at least one attack");
  EvalOutput out;
  const ModelEval clean = eval_clean(model, samples, profile);
  out.clean_records = clean.records;
  out.report.clean_acc = clean.acc.value;
  out.report.ece_clean = ece(clean.records);
  out.report.mean_pu_clean = clean.mean_pu;
  out.report.mean_au_clean = clean.mean_au;
  out.report.mean_eu_clean = clean.mean_eu;
  out.report.mean_pu_clean_correct = clean.mean_pu_correct;

  for (const NamedAttack& na : attacks) {
    const ModelEval adv = eval_attacked(model, samples, na.config, profile);
    AttackEvalBlock b;
    b.name = na.name;
    b.epsilon = na.config.epsilon;
    b.steps = na.config.steps;
    b.step_size = na.config.step_size;
    switch (na.config.objective) {
      case AttackObjectiveKind::CrossEntropy: b.objective = "ce"; break;
      case AttackObjectiveKind::Margin: b.objective = "margin"; break;
      case AttackObjectiveKind::UcatCombined: b.objective = "ucat"; break;
    }
    b.robust_acc = adv.acc.value;
    b.harmonic_mean_acc = harmonic_mean(clean.acc.value, adv.acc.value);
    b.ece_adv = ece(adv.records);
    b.au_auroc = misclassification_auroc(adv.records, &PredictionRecord::au);
    b.eu_auroc = misclassification_auroc(adv.records, &PredictionRecord::eu);
    b.mean_pu_adv = adv.mean_pu;
    b.mean_au_adv = adv.mean_au;
    b.mean_eu_adv = adv.mean_eu;
    b.mean_pu_adv_correct = adv.mean_pu_correct;
    out.report.attacks.push_back(b);
    out.adv_records.push_back(adv.records);
  }

  const AttackEvalBlock& first = out.report.attacks.front();
  out.report.robust_acc = first.robust_acc;
  out.report.ece_adv = first.ece_adv;
  out.report.au_auroc = first.au_auroc;
  out.report.eu_auroc = first.eu_auroc;
  out.report.mean_pu_adv = first.mean_pu_adv;
  out.report.mean_pu_adv_correct = first.mean_pu_adv_correct;
  out.report.harmonic_mean_acc = first.harmonic_mean_acc;
  return out;
}

}  // namespace ucat

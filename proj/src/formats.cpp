#include "ucat/formats.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace ucat {
namespace {

constexpr int kDumpMajor = 1;

std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& s, const char* what) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw std::runtime_error(std::string("parse: bad ") + what + " '" + s + "'");
  return v;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream ss(line);
  while (std::getline(ss, cur, ',')) out.push_back(cur);
  return out;
}

ojson opt_json(const std::optional<double>& v) {
  if (v.has_value()) return *v;
  return nullptr;
}

void check_major(const std::string& version, const std::string& what) {
  const auto dot = version.find('.');
  const int major = std::stoi(dot == std::string::npos ? version : version.substr(0, dot));
  if (major != 1) throw std::runtime_error(what + ": unsupported format major version " + version);
}

}  // namespace

void save_logit_dump(const LogitDump& dump, const std::filesystem::path& path) {
  if (dump.classes < 1) throw std::invalid_argument("save_logit_dump: classes must be positive");
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_logit_dump: cannot open " + path.string());
  out << "# ucat-logit-dump v" << kDumpMajor << ".0\n";
  out << "# classes=" << dump.classes << " tau=" << format_double(dump.tau)
      << " source=" << dump.source << '\n';
  out << "# columns: id,condition,label,l0..l" << (dump.classes - 1) << '\n';
  for (const auto& r : dump.rows) {
    if (r.logits.size() != static_cast<std::size_t>(dump.classes))
      throw std::invalid_argument("save_logit_dump: row width mismatch");
    out << r.id << ',' << r.condition << ',' << r.label;
    for (double v : r.logits) out << ',' << format_double(v);
    out << '\n';
  }
  if (!out) throw std::runtime_error("save_logit_dump: write failed for " + path.string());
}

LogitDump load_logit_dump(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_logit_dump: cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line.rfind("# ucat-logit-dump v", 0) != 0)
    throw std::runtime_error("load_logit_dump: missing format line");
  check_major(line.substr(std::string("# ucat-logit-dump v").size()), "load_logit_dump");

  LogitDump dump;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::istringstream ss(line.substr(1));
      std::string tok;
      while (ss >> tok) {
        const auto eq = tok.find('=');
        if (eq == std::string::npos) continue;
        const std::string key = tok.substr(0, eq);
        const std::string val = tok.substr(eq + 1);
        if (key == "classes") dump.classes = std::stoi(val);
        else if (key == "tau") dump.tau = parse_double(val, "tau");
        else if (key == "source") dump.source = val;
      }
      continue;
    }
    const auto cells = split_csv(line);
    if (cells.size() < 4) throw std::runtime_error("load_logit_dump: malformed row '" + line + "'");
    LogitDumpRow row;
    row.id = std::stoll(cells[0]);
    row.condition = cells[1];
    row.label = std::stoi(cells[2]);
    for (std::size_t i = 3; i < cells.size(); ++i)
      row.logits.push_back(parse_double(cells[i], "logit"));
    if (dump.classes > 0 && row.logits.size() != static_cast<std::size_t>(dump.classes))
      throw std::runtime_error("load_logit_dump: row width does not match classes header");
    dump.rows.push_back(std::move(row));
  }
  if (dump.classes < 1) throw std::runtime_error("load_logit_dump: missing classes header");
  return dump;
}

std::string variant_name(LossVariant v) {
  switch (v) {
    case LossVariant::CeOnly: return "ce";
    case LossVariant::CePlusProbKl: return "prob-kl";
    case LossVariant::CePlusDirichletKl: return "ucat";
  }
  throw std::logic_error("variant_name: unknown variant");
}

LossVariant parse_variant(const std::string& s) {
  if (s == "ce") return LossVariant::CeOnly;
  if (s == "prob-kl") return LossVariant::CePlusProbKl;
  if (s == "ucat") return LossVariant::CePlusDirichletKl;
  throw std::invalid_argument("unknown loss variant '" + s + "' (expected ce|prob-kl|ucat)");
}

std::string objective_name(AttackObjectiveKind k) {
  switch (k) {
    case AttackObjectiveKind::CrossEntropy: return "ce";
    case AttackObjectiveKind::Margin: return "margin";
    case AttackObjectiveKind::UcatCombined: return "ucat";
  }
  throw std::logic_error("objective_name: unknown objective");
}

AttackObjectiveKind parse_objective(const std::string& s) {
  if (s == "ce") return AttackObjectiveKind::CrossEntropy;
  if (s == "margin") return AttackObjectiveKind::Margin;
  if (s == "ucat") return AttackObjectiveKind::UcatCombined;
  throw std::invalid_argument("unknown attack objective '" + s + "' (expected ce|margin|ucat)");
}

std::string stabilization_name(Stabilization s, bool softplus_raw) {
  if (s == Stabilization::Linear) return "linear";
  return softplus_raw ? "softplus-raw" : "softplus";
}

void parse_stabilization(const std::string& s, Stabilization& stab, bool& raw) {
  if (s == "linear") {
    stab = Stabilization::Linear;
    raw = false;
  } else if (s == "softplus") {
    stab = Stabilization::SoftplusWrapped;
    raw = false;
  } else if (s == "softplus-raw") {
    stab = Stabilization::SoftplusWrapped;
    raw = true;
  } else {
    throw std::invalid_argument("unknown stabilization '" + s +
                                "' (expected linear|softplus|softplus-raw)");
  }
}

std::string current_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

ojson train_log_json(const TrainLog& log, const std::string& timestamp) {
  ojson j;
  j["format"] = "ucat-train-log";
  j["version"] = "1.0";
  j["meta"] = {{"created_at", timestamp}};
  ojson cfg;
  cfg["variant"] = variant_name(log.config.loss.variant);
  cfg["lambda"] = log.config.loss.lambda;
  cfg["kl_scale"] = log.kl_scale;
  cfg["lambda_times_scale"] = log.config.loss.lambda * log.kl_scale;
  cfg["tau_prime"] = log.config.loss.profile.tau_prime;
  cfg["stabilization"] = stabilization_name(log.config.loss.profile.stabilization,
                                            log.config.loss.profile.softplus_raw);
  cfg["epochs"] = log.config.epochs;
  cfg["batch_size"] = log.config.batch_size;
  cfg["learning_rate"] = log.config.learning_rate;
  cfg["momentum"] = log.config.momentum;
  cfg["cosine_decay"] = log.config.cosine_decay;
  cfg["grad_clip_norm"] = log.config.grad_clip_norm;
  cfg["reg_clip_ratio"] = log.config.reg_clip_ratio;
  cfg["attack"] = {{"objective", objective_name(log.config.attack.objective)},
                   {"eps", log.config.attack.epsilon},
                   {"steps", log.config.attack.steps},
                   {"step_size", log.config.attack.step_size},
                   {"random_start", log.config.attack.random_start}};
  cfg["seeds"] = {{"data", log.data_seed},
                  {"model_init", log.model_seed},
                  {"attack", log.config.attack.seed},
                  {"shuffle", log.config.shuffle_seed}};
  j["config"] = std::move(cfg);
  ojson epochs = ojson::array();
  for (const EpochStats& e : log.epochs) {
    epochs.push_back({{"epoch", e.epoch},
                      {"lr", e.lr},
                      {"loss_total", e.loss_total},
                      {"loss_ce", e.loss_ce},
                      {"loss_reg", e.loss_reg},
                      {"clean_acc", e.clean_acc},
                      {"robust_acc", e.robust_acc},
                      {"pu_clean", e.pu_clean},
                      {"pu_adv", e.pu_adv},
                      {"au_clean", e.au_clean},
                      {"au_adv", e.au_adv},
                      {"eu_clean", e.eu_clean},
                      {"eu_adv", e.eu_adv},
                      {"degenerate_attacks", e.degenerate_attacks}});
  }
  j["epochs"] = std::move(epochs);
  j["summary"] = {{"final_clean_acc", log.final_clean_acc},
                  {"final_robust_acc", log.final_robust_acc}};
  return j;
}

void save_train_log(const TrainLog& log, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_train_log: cannot open " + path.string());
  out << train_log_json(log, current_timestamp()).dump(2) << '\n';
  if (!out) throw std::runtime_error("save_train_log: write failed for " + path.string());
}

ojson eval_report_json(const EvalReport& report, const EvidenceProfile& profile,
                       const ojson& meta_extra, const std::string& timestamp) {
  ojson j;
  j["format"] = "ucat-eval-report";
  j["version"] = "1.0";
  ojson meta = meta_extra;
  meta["created_at"] = timestamp;
  j["meta"] = std::move(meta);
  j["profile"] = {{"tau", profile.tau},
                  {"tau_prime", profile.tau_prime},
                  {"stabilization",
                   stabilization_name(profile.stabilization, profile.softplus_raw)}};
  j["clean"] = {{"accuracy", report.clean_acc},
                {"ece", report.ece_clean},
                {"mean_pu", report.mean_pu_clean},
                {"mean_au", report.mean_au_clean},
                {"mean_eu", report.mean_eu_clean},
                {"mean_pu_correct_only", opt_json(report.mean_pu_clean_correct)}};
  j["adversarial"] = {{"robust_acc", report.robust_acc},
                      {"ece", opt_json(report.ece_adv)},
                      {"au_auroc", opt_json(report.au_auroc)},
                      {"eu_auroc", opt_json(report.eu_auroc)},
                      {"mean_pu", report.mean_pu_adv},
                      {"mean_pu_correct_only", opt_json(report.mean_pu_adv_correct)},
                      {"harmonic_mean_acc", report.harmonic_mean_acc}};
  ojson attacks = ojson::array();
  for (const AttackEvalBlock& b : report.attacks) {
    attacks.push_back({{"name", b.name},
                       {"objective", b.objective},
                       {"eps", b.epsilon},
                       {"steps", b.steps},
                       {"step_size", b.step_size},
                       {"robust_acc", b.robust_acc},
                       {"harmonic_mean_acc", b.harmonic_mean_acc},
                       {"ece", opt_json(b.ece_adv)},
                       {"au_auroc", opt_json(b.au_auroc)},
                       {"eu_auroc", opt_json(b.eu_auroc)},
                       {"mean_pu", b.mean_pu_adv},
                       {"mean_au", b.mean_au_adv},
                       {"mean_eu", b.mean_eu_adv},
                       {"mean_pu_correct_only", opt_json(b.mean_pu_adv_correct)}});
  }
  j["attacks"] = std::move(attacks);
  return j;
}

void save_eval_report(const EvalReport& report, const EvidenceProfile& profile,
                      const ojson& meta_extra, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_eval_report: cannot open " + path.string());
  out << eval_report_json(report, profile, meta_extra, current_timestamp()).dump(2) << '\n';
  if (!out) throw std::runtime_error("save_eval_report: write failed for " + path.string());
}

ojson load_versioned_json(const std::filesystem::path& path, const std::string& expected_format) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load: cannot open " + path.string());
  ojson j = ojson::parse(in);
  const std::string format = j.value("format", "");
  if (!expected_format.empty() && format != expected_format)
    throw std::runtime_error("load: " + path.string() + " is '" + format + "', expected '" +
                             expected_format + "'");
  if (!j.contains("version")) throw std::runtime_error("load: missing version in " + path.string());
  check_major(j["version"].get<std::string>(), path.string());
  return j;
}

std::string normalized_report_bytes(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("normalize: cannot open " + path.string());
  ojson j = ojson::parse(in);
  if (j.contains("meta") && j["meta"].contains("created_at")) j["meta"].erase("created_at");
  return j.dump(2);
}

Analysis analyze_logit_dump(const LogitDump& dump, const AnalysisOptions& options,
                            const std::string& timestamp) {
  if (dump.rows.empty()) throw std::invalid_argument("analyze_logit_dump: empty dump");
  if (!(options.tau_au > 0.0) || !(options.tau_eu > 0.0) || !(options.tau_prime > 0.0))
    throw std::invalid_argument("analyze_logit_dump: divisors must be positive");

  const auto profile_for = [&](double divisor) {
    EvidenceProfile p;
    p.tau = dump.tau;
    p.tau_prime = divisor;
    p.stabilization = options.stabilization;
    p.softplus_raw = options.softplus_raw;
    return p;
  };
  const EvidenceProfile prof_au = profile_for(options.tau_au);
  const EvidenceProfile prof_eu = profile_for(options.tau_eu);
  const EvidenceProfile prof_aux = profile_for(options.tau_prime);

  Analysis out;
  std::map<std::string, std::vector<PredictionRecord>> by_condition;
  std::map<std::string, double> alpha0_sum;
  for (const LogitDumpRow& r : dump.rows) {
    const LogitVector lv = LogitVector::external(r.logits, dump.tau);
    UncertaintyTriple u;
    u.au = aleatoric_uncertainty(evidence_map(lv, prof_au));
    u.eu = epistemic_uncertainty(evidence_map(lv, prof_eu));
    std::vector<double> probs = softmax(lv.values);
    u.pu = shannon_entropy(probs);
    const double alpha0 = evidence_map(lv, prof_aux).alpha0;

    PredictionRecord rec = make_record(std::move(probs), r.label, u, r.condition);
    AnalysisRow row;
    row.id = r.id;
    row.condition = r.condition;
    row.label = r.label;
    row.pred = rec.pred;
    row.correct = !rec.tie && rec.pred == rec.label;
    row.pu = u.pu;
    row.au = u.au;
    row.eu = u.eu;
    row.alpha0 = alpha0;
    out.rows.push_back(std::move(row));
    alpha0_sum[r.condition] += alpha0;
    by_condition[r.condition].push_back(std::move(rec));
  }

  ojson j;
  j["format"] = "ucat-logit-analysis";
  j["version"] = "1.0";
  j["meta"] = {{"created_at", timestamp}, {"source", dump.source}};
  j["options"] = {{"tau", dump.tau},
                  {"tau_au", options.tau_au},
                  {"tau_eu", options.tau_eu},
                  {"tau_prime", options.tau_prime},
                  {"stabilization",
                   stabilization_name(options.stabilization, options.softplus_raw)}};
  ojson conditions;
  std::map<std::string, double> mean_pu;
  for (const auto& [cond, records] : by_condition) {
    const AccuracyResult acc = accuracy(records);
    double pu = 0.0, au = 0.0, eu = 0.0;
    for (const auto& r : records) {
      pu += r.pu;
      au += r.au;
      eu += r.eu;
    }
    const double n = static_cast<double>(records.size());
    mean_pu[cond] = pu / n;
    const std::optional<double> au_roc = misclassification_auroc(records, &PredictionRecord::au);
    const std::optional<double> eu_roc = misclassification_auroc(records, &PredictionRecord::eu);
    conditions[cond] = {{"count", records.size()},
                        {"accuracy", acc.value},
                        {"ece", ece(records)},
                        {"mean_pu", pu / n},
                        {"mean_au", au / n},
                        {"mean_eu", eu / n},
                        {"mean_alpha0", alpha0_sum[cond] / n},
                        {"au_auroc", opt_json(au_roc)},
                        {"eu_auroc", opt_json(eu_roc)}};
  }
  j["conditions"] = std::move(conditions);
  if (mean_pu.count("clean") && mean_pu.count("adversarial")) {
    j["delta"] = {{"mean_pu_adv_minus_clean", mean_pu["adversarial"] - mean_pu["clean"]}};
  }
  out.aggregates = std::move(j);
  return out;
}

void save_analysis(const Analysis& analysis, const std::filesystem::path& json_path,
                   const std::filesystem::path& rows_csv_path) {
  {
    std::ofstream out(json_path);
    if (!out) throw std::runtime_error("save_analysis: cannot open " + json_path.string());
    out << analysis.aggregates.dump(2) << '\n';
    if (!out) throw std::runtime_error("save_analysis: write failed");
  }
  std::ofstream rows(rows_csv_path);
  if (!rows) throw std::runtime_error("save_analysis: cannot open " + rows_csv_path.string());
  rows << "# ucat-analysis-rows v1.0\n";
  rows << "# columns: id,condition,label,pred,correct,pu,au,eu,alpha0\n";
  for (const AnalysisRow& r : analysis.rows) {
    rows << r.id << ',' << r.condition << ',' << r.label << ',' << r.pred << ','
         << (r.correct ? 1 : 0) << ',' << format_double(r.pu) << ',' << format_double(r.au)
         << ',' << format_double(r.eu) << ',' << format_double(r.alpha0) << '\n';
  }
  if (!rows) throw std::runtime_error("save_analysis: write failed");
}

ojson merge_reports(const std::vector<std::filesystem::path>& inputs,
                    const std::string& timestamp) {
  if (inputs.empty()) throw std::invalid_argument("merge_reports: no inputs");
  ojson j;
  j["format"] = "ucat-summary";
  j["version"] = "1.0";
  j["meta"] = {{"created_at", timestamp}};
  ojson runs = ojson::array();
  ojson sweep = ojson::array();
  std::vector<ojson> eval_reports;
  for (const auto& path : inputs) {
    ojson doc = load_versioned_json(path, "");
    const std::string format = doc.value("format", "");
    ojson run;
    run["file"] = path.filename().string();
    run["format"] = format;
    if (format == "ucat-train-log") {
      run["variant"] = doc["config"]["variant"];
      run["lambda"] = doc["config"]["lambda"];
      run["lambda_times_scale"] = doc["config"]["lambda_times_scale"];
      run["eps"] = doc["config"]["attack"]["eps"];
      run["final_clean_acc"] = doc["summary"]["final_clean_acc"];
      run["final_robust_acc"] = doc["summary"]["final_robust_acc"];
      sweep.push_back({{"file", path.filename().string()},
                       {"variant", doc["config"]["variant"]},
                       {"lambda", doc["config"]["lambda"]},
                       {"lambda_times_scale", doc["config"]["lambda_times_scale"]},
                       {"final_clean_acc", doc["summary"]["final_clean_acc"]},
                       {"final_robust_acc", doc["summary"]["final_robust_acc"]}});
    } else if (format == "ucat-eval-report") {
      run["clean_acc"] = doc["clean"]["accuracy"];
      run["robust_acc"] = doc["adversarial"]["robust_acc"];
      run["harmonic_mean_acc"] = doc["adversarial"]["harmonic_mean_acc"];
      run["ece_clean"] = doc["clean"]["ece"];
      run["ece_adv"] = doc["adversarial"]["ece"];
      run["mean_pu_clean"] = doc["clean"]["mean_pu"];
      run["mean_pu_adv"] = doc["adversarial"]["mean_pu"];
      run["au_auroc"] = doc["adversarial"]["au_auroc"];
      run["eu_auroc"] = doc["adversarial"]["eu_auroc"];
      eval_reports.push_back(doc);
    } else {
      throw std::runtime_error("merge_reports: unsupported input format '" + format + "' in " +
                               path.string());
    }
    runs.push_back(std::move(run));
  }
  j["runs"] = std::move(runs);
  if (!sweep.empty()) j["lambda_sweep"] = std::move(sweep);
  // First eval report = reference (pretrained), last = fine-tuned.
  if (eval_reports.size() >= 2) {
    const ojson& pre = eval_reports.front();
    const ojson& fin = eval_reports.back();
    const double a = pre["clean"]["mean_pu"].get<double>();
    const double b = fin["clean"]["mean_pu"].get<double>();
    const double c = fin["adversarial"]["mean_pu"].get<double>();
    j["uncertainty_ordering"] = {{"pretrained_clean_pu", a},
                                 {"finetuned_clean_pu", b},
                                 {"finetuned_adv_pu", c},
                                 {"holds", a < b && b < c}};
  }
  return j;
}

void save_summary(const ojson& summary, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_summary: cannot open " + path.string());
  out << summary.dump(2) << '\n';
  if (!out) throw std::runtime_error("save_summary: write failed for " + path.string());
}

std::string summary_table(const ojson& summary) {
  std::ostringstream out;
  const auto pct = [](const ojson& v) {
    if (v.is_null()) return std::string("   n/a");
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%6.2f", v.get<double>() * 100.0);
    return std::string(buf);
  };
  out << "run                              clean%  robust%  H(c,r)%\n";
  for (const auto& run : summary.at("runs")) {
    if (run["format"] == "ucat-eval-report") {
      char line[128];
      std::snprintf(line, sizeof(line), "%-32s %s  %s   %s\n",
                    run["file"].get<std::string>().c_str(), pct(run["clean_acc"]).c_str(),
                    pct(run["robust_acc"]).c_str(), pct(run["harmonic_mean_acc"]).c_str());
      out << line;
    } else {
      char line[128];
      std::snprintf(line, sizeof(line), "%-32s %s  %s   (train %s, lambda*scale=%.3g)\n",
                    run["file"].get<std::string>().c_str(), pct(run["final_clean_acc"]).c_str(),
                    pct(run["final_robust_acc"]).c_str(), run["variant"].get<std::string>().c_str(),
                    run["lambda_times_scale"].get<double>());
      out << line;
    }
  }
  if (summary.contains("uncertainty_ordering")) {
    const auto& o = summary["uncertainty_ordering"];
    out << "uncertainty ordering (PU, nats): pretrained-clean "
        << o["pretrained_clean_pu"].get<double>() << " < finetuned-clean "
        << o["finetuned_clean_pu"].get<double>() << " < finetuned-adv "
        << o["finetuned_adv_pu"].get<double>() << " : "
        << (o["holds"].get<bool>() ? "holds" : "VIOLATED") << '\n';
  }
  return out.str();
}

}  // namespace ucat

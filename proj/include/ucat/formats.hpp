#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ucat/evaluate.hpp"
#include "ucat/train.hpp"

// File formats. Every artifact carries a format name and a major.minor
// version; readers reject unknown majors. Volatile metadata (timestamps)
// lives only under meta.created_at so reports stay byte-comparable.
namespace ucat {

using ojson = nlohmann::ordered_json;

struct LogitDumpRow {
  std::int64_t id = 0;
  std::string condition;  // "clean" | "adversarial"
  int label = 0;
  std::vector<double> logits;
};

struct LogitDump {
  int classes = 0;
  double tau = 0.07;  // source temperature of the logits
  std::string source;
  std::vector<LogitDumpRow> rows;
};

void save_logit_dump(const LogitDump& dump, const std::filesystem::path& path);
LogitDump load_logit_dump(const std::filesystem::path& path);

// Enum <-> string names used across files and CLI flags.
std::string variant_name(LossVariant v);
LossVariant parse_variant(const std::string& s);
std::string objective_name(AttackObjectiveKind k);
AttackObjectiveKind parse_objective(const std::string& s);
std::string stabilization_name(Stabilization s, bool softplus_raw);
void parse_stabilization(const std::string& s, Stabilization& stab, bool& raw);

// ISO-8601 UTC; the only volatile field in any artifact.
std::string current_timestamp();

ojson train_log_json(const TrainLog& log, const std::string& timestamp);
void save_train_log(const TrainLog& log, const std::filesystem::path& path);

ojson eval_report_json(const EvalReport& report, const EvidenceProfile& profile,
                       const ojson& meta_extra, const std::string& timestamp);
void save_eval_report(const EvalReport& report, const EvidenceProfile& profile,
                      const ojson& meta_extra, const std::filesystem::path& path);

// Parses, checks format/major, returns the document.
ojson load_versioned_json(const std::filesystem::path& path, const std::string& expected_format);

// Report bytes with meta.created_at removed; the determinism comparison unit.
std::string normalized_report_bytes(const std::filesystem::path& path);

struct AnalysisOptions {
  double tau_au = 0.01;     // evidence divisor for AU
  double tau_eu = 0.07;     // evidence divisor for EU
  double tau_prime = 0.07;  // divisor for the auxiliary alpha0 diagnostics
  Stabilization stabilization = Stabilization::SoftplusWrapped;
  bool softplus_raw = false;
};

struct AnalysisRow {
  std::int64_t id = 0;
  std::string condition;
  int label = 0;
  int pred = 0;
  bool correct = false;
  double pu = 0.0, au = 0.0, eu = 0.0, alpha0 = 0.0;
};

struct Analysis {
  ojson aggregates;  // per-condition accuracy/ECE/AUROC/means + deltas
  std::vector<AnalysisRow> rows;
};

// Uncertainty decomposition of externally dumped logits; PU comes from the
// native softmax, AU/EU from per-measure evidence divisors.
Analysis analyze_logit_dump(const LogitDump& dump, const AnalysisOptions& options,
                            const std::string& timestamp);
void save_analysis(const Analysis& analysis, const std::filesystem::path& json_path,
                   const std::filesystem::path& rows_csv_path);

// Merges train logs and eval reports into one summary document; inputs are
// tagged by filename, eval reports in pretrained -> finetuned order drive the
// uncertainty-ordering block.
ojson merge_reports(const std::vector<std::filesystem::path>& inputs,
                    const std::string& timestamp);
void save_summary(const ojson& summary, const std::filesystem::path& path);

// Human-readable table of a merged summary; the only place percents appear.
std::string summary_table(const ojson& summary);

}  // namespace ucat

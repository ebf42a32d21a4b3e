#include <algorithm>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ucat/data.hpp"
#include "ucat/evaluate.hpp"
#include "ucat/formats.hpp"
#include "ucat/losses.hpp"
#include "ucat/model.hpp"
#include "ucat/rng.hpp"
#include "ucat/train.hpp"

namespace {

using namespace ucat;

struct GenDataArgs {
  DatasetSpec spec;
  std::string out;
};

int run_gen_data(const GenDataArgs& a) {
  const GeneratedData data = generate_dataset(a.spec);
  const std::string train_path = a.out + ".train.csv";
  const std::string test_path = a.out + ".test.csv";
  save_dataset(data.train, train_path);
  save_dataset(data.test, test_path);
  std::cout << "wrote " << train_path << " (" << data.train.samples.size() << " rows), "
            << test_path << " (" << data.test.samples.size() << " rows)\n";
  std::cout << "centroid accuracy: train " << data.train.centroid_accuracy << ", test "
            << data.test.centroid_accuracy << "\n";
  return 0;
}

struct TrainArgs {
  std::string data_prefix;
  std::string variant = "ucat";
  double lambda = -1.0;  // <0: default 1e5/kl_scale
  double tau_prime = 0.07;
  std::string stabilization = "linear";
  double eps = 0.05;
  int steps = 10;
  double step_size = -1.0;  // <0: 2.5*eps/steps
  int epochs = 30;
  int batch = 64;
  double lr = 0.05;
  double momentum = 0.9;
  double clip = 1.0;
  double reg_clip_ratio = 0.5;
  int embed_dim = 8;
  double tau = 0.07;
  std::string train_attack = "ce";
  std::uint64_t seed = 7;        // model init
  std::uint64_t attack_seed = 0; // 0: derived from seed
  bool attack_random_start = false;
  std::string pretrained;
  std::string out_model;
  std::string out_log;
};

int run_train(const TrainArgs& a) {
  const Dataset train_split = load_dataset(a.data_prefix + ".train.csv");
  const Dataset test_split = load_dataset(a.data_prefix + ".test.csv");

  ContrastiveModel model;
  if (!a.pretrained.empty()) {
    model = load_checkpoint(a.pretrained);
    if (model.input_dim != train_split.spec.input_dim ||
        model.num_classes != train_split.spec.classes)
      throw std::invalid_argument("train: pretrained checkpoint does not match dataset shape");
  } else {
    model = make_model(train_split.spec.input_dim, a.embed_dim, train_split.spec.classes, a.tau,
                       a.seed);
  }

  TrainConfig cfg;
  cfg.epochs = a.epochs;
  cfg.batch_size = a.batch;
  cfg.learning_rate = a.lr;
  cfg.momentum = a.momentum;
  cfg.grad_clip_norm = a.clip;
  cfg.loss.variant = parse_variant(a.variant);
  cfg.loss.profile.tau = model.tau;
  cfg.loss.profile.tau_prime = a.tau_prime;
  parse_stabilization(a.stabilization, cfg.loss.profile.stabilization,
                      cfg.loss.profile.softplus_raw);
  cfg.loss.lambda = a.lambda < 0.0 ? default_kl_weight(a.tau_prime) : a.lambda;
  cfg.attack.epsilon = a.eps;
  cfg.attack.steps = a.steps;
  cfg.attack.step_size = a.step_size < 0.0
                             ? (a.steps > 0 ? 2.5 * a.eps / a.steps : 0.0)
                             : a.step_size;
  cfg.reg_clip_ratio = a.reg_clip_ratio;
  cfg.attack.objective = parse_objective(a.train_attack);
  if (cfg.attack.objective == AttackObjectiveKind::UcatCombined) {
    cfg.attack.lambda = cfg.loss.lambda;
    cfg.attack.profile = cfg.loss.profile;
  }
  cfg.attack.random_start = a.attack_random_start;
  cfg.attack.seed = a.attack_seed != 0 ? a.attack_seed : mix_seed(a.seed, 0xA77ACULL);
  cfg.shuffle_seed = mix_seed(a.seed, 0x5F0FFULL);

  char digest[160];
  std::snprintf(digest, sizeof(digest), "%s:lambda=%.9g:eps=%.9g:steps=%d:epochs=%d:seed=%llu",
                a.variant.c_str(), cfg.loss.lambda, a.eps, a.steps, a.epochs,
                static_cast<unsigned long long>(a.seed));
  model.config_digest = digest;

  const TrainLog log = finetune(model, train_split, test_split, cfg);
  if (!a.out_model.empty()) save_checkpoint(model, a.out_model);
  if (!a.out_log.empty()) save_train_log(log, a.out_log);
  std::cout << "final clean acc " << log.final_clean_acc << ", robust acc (train attack) "
            << log.final_robust_acc << "\n";
  if (!a.out_model.empty()) std::cout << "wrote " << a.out_model << "\n";
  if (!a.out_log.empty()) std::cout << "wrote " << a.out_log << "\n";
  return 0;
}

struct AttackArgs {
  std::string model;
  std::string data;
  std::string objective = "ce";
  double eps = 0.05;
  int steps = 100;
  double step_size = -1.0;  // <0: eps
  double kappa = 0.0;
  double lambda = -1.0;
  double tau_prime = 0.07;
  bool random_start = false;
  std::uint64_t seed = 0;
  std::string out;
};

int run_attack(const AttackArgs& a) {
  const ContrastiveModel model = load_checkpoint(a.model);
  const Dataset data = load_dataset(a.data);
  AttackConfig cfg;
  cfg.objective = parse_objective(a.objective);
  cfg.epsilon = a.eps;
  cfg.steps = a.steps;
  cfg.step_size = a.step_size < 0.0 ? a.eps : a.step_size;
  cfg.kappa = a.kappa;
  cfg.lambda = a.lambda < 0.0 ? default_kl_weight(a.tau_prime) : a.lambda;
  cfg.profile.tau = model.tau;
  cfg.profile.tau_prime = a.tau_prime;
  cfg.random_start = a.random_start;
  cfg.seed = a.seed;
  cfg.validate();

  LogitDump dump;
  dump.classes = model.num_classes;
  dump.tau = model.tau;
  dump.source = "attack:" + a.objective + ":" + std::filesystem::path(a.model).filename().string() +
                ":" + std::filesystem::path(a.data).filename().string();
  std::size_t robust_hits = 0, degenerate = 0;
  for (std::size_t i = 0; i < data.samples.size(); ++i) {
    const Sample& s = data.samples[i];
    const LogitVector clean = model.forward(s.x).logits;
    AttackConfig per = cfg;
    per.seed = mix_seed(cfg.seed, i);
    const AdversarialExample adv = pgd(model, s, per);
    if (!adv.valid) ++degenerate;
    const LogitVector attacked = model.forward(adv.x_adv).logits;
    dump.rows.push_back({static_cast<std::int64_t>(i), "clean", s.label, clean.values});
    dump.rows.push_back({static_cast<std::int64_t>(i), "adversarial", s.label, attacked.values});
    const auto& lv = attacked.values;
    const std::size_t am = std::max_element(lv.begin(), lv.end()) - lv.begin();
    if (static_cast<int>(am) == s.label) ++robust_hits;
  }
  save_logit_dump(dump, a.out);
  std::cout << "robust acc " << static_cast<double>(robust_hits) / data.samples.size()
            << " over " << data.samples.size() << " samples";
  if (degenerate > 0) std::cout << " (" << degenerate << " degenerate)";
  std::cout << "\nwrote " << a.out << "\n";
  return 0;
}

struct EvalArgs {
  std::string model;
  std::string data;
  std::string attacks;
  double tau_prime = 0.07;
  std::string out_report;
  std::string dump_logits;
};

int run_eval(const EvalArgs& a) {
  const ContrastiveModel model = load_checkpoint(a.model);
  const Dataset data = load_dataset(a.data);
  std::vector<NamedAttack> attacks = parse_attack_specs(a.attacks);
  for (NamedAttack& na : attacks) {
    na.config.profile.tau = model.tau;
    na.config.profile.tau_prime = a.tau_prime;
  }
  EvidenceProfile profile;
  profile.tau = model.tau;
  profile.tau_prime = a.tau_prime;

  const EvalOutput out = evaluate(model, data.samples, attacks, profile);
  ojson meta;
  meta["model"] = std::filesystem::path(a.model).filename().string();
  meta["data"] = std::filesystem::path(a.data).filename().string();
  meta["attacks"] = a.attacks;
  meta["model_digest"] = model.config_digest;
  meta["seeds"] = {{"data", data.spec.seed}, {"model_init", model.init_seed}};
  save_eval_report(out.report, profile, meta, a.out_report);
  std::cout << "clean acc " << out.report.clean_acc << ", robust acc " << out.report.robust_acc
            << ", H " << out.report.harmonic_mean_acc << "\nwrote " << a.out_report << "\n";

  if (!a.dump_logits.empty()) {
    LogitDump dump;
    dump.classes = model.num_classes;
    dump.tau = model.tau;
    dump.source = "eval:" + std::filesystem::path(a.model).filename().string() + ":" +
                  std::filesystem::path(a.data).filename().string();
    for (std::size_t i = 0; i < data.samples.size(); ++i) {
      const Sample& s = data.samples[i];
      dump.rows.push_back({static_cast<std::int64_t>(i), "clean", s.label,
                           model.forward(s.x).logits.values});
      AttackConfig per = attacks.front().config;
      per.seed = mix_seed(per.seed, i);
      const AdversarialExample adv = pgd(model, s, per);
      dump.rows.push_back({static_cast<std::int64_t>(i), "adversarial", s.label,
                           model.forward(adv.x_adv).logits.values});
    }
    save_logit_dump(dump, a.dump_logits);
    std::cout << "wrote " << a.dump_logits << "\n";
  }
  return 0;
}

struct AnalyzeArgs {
  std::string dump;
  AnalysisOptions options;
  std::string stabilization = "softplus";
  std::string out;
  std::string out_rows;
};

int run_analyze(const AnalyzeArgs& a) {
  AnalysisOptions opt = a.options;
  parse_stabilization(a.stabilization, opt.stabilization, opt.softplus_raw);
  const LogitDump dump = load_logit_dump(a.dump);
  const Analysis analysis = analyze_logit_dump(dump, opt, current_timestamp());
  const std::string rows = a.out_rows.empty() ? a.out + ".rows.csv" : a.out_rows;
  save_analysis(analysis, a.out, rows);
  std::cout << "wrote " << a.out << " and " << rows << " (" << analysis.rows.size() << " rows)\n";
  return 0;
}

struct ReportArgs {
  std::vector<std::string> inputs;
  std::string out;
};

int run_report(const ReportArgs& a) {
  std::vector<std::filesystem::path> paths(a.inputs.begin(), a.inputs.end());
  const ojson summary = merge_reports(paths, current_timestamp());
  save_summary(summary, a.out);
  std::cout << summary_table(summary);
  std::cout << "wrote " << a.out << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dirichlet-evidence uncertainty and adversarial-training toolkit"};
  app.require_subcommand(1);

  GenDataArgs gen;
  auto* cmd_gen = app.add_subcommand("gen-data", "generate the synthetic benchmark");
  cmd_gen->add_option("--classes", gen.spec.classes, "number of classes");
  cmd_gen->add_option("--input-dim", gen.spec.input_dim, "input dimension m");
  cmd_gen->add_option("--n-train", gen.spec.n_train, "training samples");
  cmd_gen->add_option("--n-test", gen.spec.n_test, "test samples");
  cmd_gen->add_option("--noise", gen.spec.noise_sigma, "Gaussian noise sigma");
  cmd_gen->add_option("--separation", gen.spec.class_separation, "class mean separation");
  cmd_gen->add_option("--seed", gen.spec.seed, "data seed");
  cmd_gen->add_option("--out", gen.out, "output prefix (<out>.train.csv, <out>.test.csv)")
      ->required();

  TrainArgs tr;
  auto* cmd_train = app.add_subcommand("train", "train or fine-tune a model");
  cmd_train->add_option("--data", tr.data_prefix, "dataset prefix from gen-data")->required();
  cmd_train->add_option("--variant", tr.variant, "loss variant: ce|prob-kl|ucat");
  cmd_train->add_option("--lambda", tr.lambda, "regularizer weight (default 1e5/kl-scale)");
  cmd_train->add_option("--tau-prime", tr.tau_prime, "evidence calibration divisor");
  cmd_train->add_option("--stabilization", tr.stabilization, "linear|softplus|softplus-raw");
  cmd_train->add_option("--eps", tr.eps, "training attack budget (0 = clean training)");
  cmd_train->add_option("--steps", tr.steps, "training attack steps");
  cmd_train->add_option("--step-size", tr.step_size, "training attack step size");
  cmd_train->add_option("--epochs", tr.epochs, "epochs");
  cmd_train->add_option("--batch", tr.batch, "batch size");
  cmd_train->add_option("--lr", tr.lr, "peak learning rate (cosine decay)");
  cmd_train->add_option("--momentum", tr.momentum, "SGD momentum");
  cmd_train->add_option("--clip", tr.clip, "global-norm gradient clip (0 = off)");
  cmd_train->add_option("--reg-clip-ratio", tr.reg_clip_ratio,
                        "regularizer gradient cap as a fraction of --clip");
  cmd_train->add_option("--train-attack", tr.train_attack,
                        "training attack objective: ce|margin|ucat");
  cmd_train->add_option("--embed-dim", tr.embed_dim, "embedding dimension d");
  cmd_train->add_option("--tau", tr.tau, "logit temperature");
  cmd_train->add_option("--seed", tr.seed, "model init seed");
  cmd_train->add_option("--attack-seed", tr.attack_seed, "attack seed (0 = derived)");
  cmd_train->add_flag("--attack-random-start", tr.attack_random_start,
                      "random start for the training attack");
  cmd_train->add_option("--pretrained", tr.pretrained, "start from this checkpoint");
  cmd_train->add_option("--out-model", tr.out_model, "checkpoint output path");
  cmd_train->add_option("--out-log", tr.out_log, "train log output path");

  AttackArgs at;
  auto* cmd_attack = app.add_subcommand("attack", "run PGD and dump clean/adversarial logits");
  cmd_attack->add_option("--model", at.model, "model checkpoint")->required();
  cmd_attack->add_option("--data", at.data, "dataset file (single split)")->required();
  cmd_attack->add_option("--objective", at.objective, "ce|margin|ucat");
  cmd_attack->add_option("--eps", at.eps, "l_inf budget");
  cmd_attack->add_option("--steps", at.steps, "PGD steps");
  cmd_attack->add_option("--step-size", at.step_size, "step size (default eps)");
  cmd_attack->add_option("--kappa", at.kappa, "margin confidence floor");
  cmd_attack->add_option("--lambda", at.lambda, "ucat objective weight");
  cmd_attack->add_option("--tau-prime", at.tau_prime, "ucat objective evidence divisor");
  cmd_attack->add_flag("--random-start", at.random_start, "uniform random start inside the ball");
  cmd_attack->add_option("--seed", at.seed, "attack seed");
  cmd_attack->add_option("--out", at.out, "logit dump output path")->required();

  EvalArgs ev;
  auto* cmd_eval = app.add_subcommand("eval", "evaluate a model under a list of attacks");
  cmd_eval->add_option("--model", ev.model, "model checkpoint")->required();
  cmd_eval->add_option("--data", ev.data, "dataset file (single split)")->required();
  cmd_eval->add_option("--attacks", ev.attacks,
                       "semicolon list, e.g. ce:eps=0.05,steps=100;margin:eps=0.05,steps=100")
      ->required();
  cmd_eval->add_option("--tau-prime", ev.tau_prime, "evidence calibration divisor");
  cmd_eval->add_option("--out-report", ev.out_report, "eval report output path")->required();
  cmd_eval->add_option("--dump-logits", ev.dump_logits, "also dump clean/adv logits here");

  AnalyzeArgs an;
  auto* cmd_analyze = app.add_subcommand("analyze-logits", "uncertainty analysis of a logit dump");
  cmd_analyze->add_option("--dump", an.dump, "logit dump path")->required();
  cmd_analyze->add_option("--tau-au", an.options.tau_au, "evidence divisor for AU");
  cmd_analyze->add_option("--tau-eu", an.options.tau_eu, "evidence divisor for EU");
  cmd_analyze->add_option("--tau-prime", an.options.tau_prime, "divisor for alpha0 diagnostics");
  cmd_analyze->add_option("--stabilization", an.stabilization, "linear|softplus|softplus-raw");
  cmd_analyze->add_option("--out", an.out, "aggregate JSON output path")->required();
  cmd_analyze->add_option("--out-rows", an.out_rows, "per-row CSV path (default <out>.rows.csv)");

  ReportArgs rp;
  auto* cmd_report = app.add_subcommand("report", "merge train logs and eval reports");
  cmd_report->add_option("--inputs", rp.inputs, "input files")->required()->expected(-1);
  cmd_report->add_option("--out", rp.out, "merged summary output path")->required();

  try {
    app.parse(argc, argv);
    if (cmd_gen->parsed()) return run_gen_data(gen);
    if (cmd_train->parsed()) return run_train(tr);
    if (cmd_attack->parsed()) return run_attack(at);
    if (cmd_eval->parsed()) return run_eval(ev);
    if (cmd_analyze->parsed()) return run_analyze(an);
    if (cmd_report->parsed()) return run_report(rp);
    return 2;
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

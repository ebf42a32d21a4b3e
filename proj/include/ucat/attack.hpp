#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "ucat/evidence.hpp"
#include "ucat/model.hpp"

namespace ucat {

enum class AttackObjectiveKind { CrossEntropy, Margin, UcatCombined };

struct AttackConfig {
  double epsilon = 0.0;    // l_inf budget, input units
  double step_size = 0.0;
  int steps = 0;
  AttackObjectiveKind objective = AttackObjectiveKind::CrossEntropy;
  bool random_start = false;  // off for training, on for evaluation
  std::uint64_t seed = 0;
  double kappa = 0.0;      // Margin confidence floor
  double lambda = 0.0;     // UcatCombined regularizer weight
  EvidenceProfile profile; // UcatCombined evidence calibration

  void validate() const;
};

struct AdversarialExample {
  std::vector<double> x_adv;
  double delta_linf = 0.0;
  std::vector<double> loss_trace;  // objective value at start and after each step
  bool valid = true;               // false if a degenerate embedding aborted the run
};

// Scalar objective over inputs, maximized by pgd.
class Objective {
public:
  virtual ~Objective() = default;
  virtual double value(std::span<const double> x) const = 0;
  virtual std::vector<double> grad(std::span<const double> x) const = 0;
};

// max(max_{j != y} l_j - l_y, -kappa); requires at least two classes.
double margin_loss(const LogitVector& logits, int label, double kappa);

// Sign-step ascent projected onto B_eps(x0) intersected with [0,1]^m each
// iterate; sign(0) = 0; eps = 0 returns the input bitwise unchanged.
AdversarialExample pgd(std::span<const double> x0, const AttackConfig& config,
                       const Objective& objective);

// Builds the objective selected by config.objective for (model, sample).
// UcatCombined captures the clean logits of sample.x at call time (stop-grad).
AdversarialExample pgd(const ContrastiveModel& model, const Sample& sample,
                       const AttackConfig& config);

std::unique_ptr<Objective> make_objective(const ContrastiveModel& model, const Sample& sample,
                                          const AttackConfig& config);

}  // namespace ucat

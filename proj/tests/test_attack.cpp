#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

#include "oracles.hpp"
#include "ucat/attack.hpp"

using ucat::AdversarialExample;
using ucat::AttackConfig;
using ucat::AttackObjectiveKind;
using ucat::LogitVector;
using ucat::Objective;

namespace {

class LinearObjective final : public Objective {
public:
  explicit LinearObjective(std::vector<double> w) : w_(std::move(w)) {}
  double value(std::span<const double> x) const override {
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += w_[i] * x[i];
    return s;
  }
  std::vector<double> grad(std::span<const double>) const override { return w_; }

private:
  std::vector<double> w_;
};

// Forwards to an inner objective while checking the feasibility of every
// iterate PGD evaluates.
class InvariantProbe final : public Objective {
public:
  InvariantProbe(const Objective& inner, std::vector<double> x0, double eps)
      : inner_(inner), x0_(std::move(x0)), eps_(eps) {}

  double value(std::span<const double> x) const override {
    check(x);
    return inner_.value(x);
  }
  std::vector<double> grad(std::span<const double> x) const override {
    check(x);
    return inner_.grad(x);
  }
  int violations() const { return violations_; }

private:
  void check(std::span<const double> x) const {
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (std::abs(x[i] - x0_[i]) > eps_ + 1e-12 || x[i] < 0.0 || x[i] > 1.0) ++violations_;
    }
  }
  const Objective& inner_;
  std::vector<double> x0_;
  double eps_;
  mutable int violations_ = 0;
};

std::vector<double> random_box_point(std::mt19937_64& eng, std::size_t m) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> x(m);
  for (auto& v : x) v = u(eng);
  return x;
}

}  // namespace

TEST_CASE("margin loss hand examples") {
  const auto correct = LogitVector::external({5.0, 1.0}, 0.07);
  CHECK(ucat::margin_loss(correct, 0, 0.0) == 0.0);
  const auto wrong = LogitVector::external({1.0, 5.0}, 0.07);
  CHECK(ucat::margin_loss(wrong, 0, 0.0) == 4.0);
  const auto tied = LogitVector::external({3.0, 3.0}, 0.07);
  CHECK(ucat::margin_loss(tied, 0, 1.0) == 0.0);
  CHECK_THROWS_AS(ucat::margin_loss(LogitVector::external({1.0}, 0.07), 0, 0.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(ucat::margin_loss(correct, 0, -1.0), std::invalid_argument);
}

TEST_CASE("pgd with zero budget returns the input bitwise") {
  const std::vector<double> x0 = {0.13, 0.77, 0.5001};
  AttackConfig cfg;
  cfg.epsilon = 0.0;
  cfg.step_size = 0.1;
  cfg.steps = 5;
  cfg.random_start = true;  // must be inert at eps = 0
  const LinearObjective obj({1.0, -2.0, 0.5});
  const auto adv = pgd(x0, cfg, obj);
  CHECK(adv.x_adv == x0);
  CHECK(adv.delta_linf == 0.0);
  CHECK(adv.loss_trace.size() == 6);
}

TEST_CASE("zero gradient means zero movement") {
  const std::vector<double> x0 = {0.4, 0.6};
  AttackConfig cfg;
  cfg.epsilon = 0.2;
  cfg.step_size = 0.05;
  cfg.steps = 8;
  const LinearObjective obj({0.0, 0.0});
  const auto adv = pgd(x0, cfg, obj);
  CHECK(adv.x_adv == x0);
}

TEST_CASE("every iterate respects the budget and the unit box") {
  std::mt19937_64 eng(5005);
  std::uniform_real_distribution<double> wd(-3.0, 3.0);
  for (int trial = 0; trial < 50; ++trial) {
    const auto x0 = random_box_point(eng, 10);
    std::vector<double> w(10);
    for (auto& v : w) v = wd(eng);
    const LinearObjective inner(w);
    AttackConfig cfg;
    cfg.epsilon = 0.1;
    cfg.step_size = 0.027;
    cfg.steps = 10;
    cfg.random_start = trial % 2 == 1;
    cfg.seed = static_cast<std::uint64_t>(trial);
    const InvariantProbe probe(inner, x0, cfg.epsilon);
    const auto adv = pgd(x0, cfg, probe);
    CAPTURE(trial);
    CHECK(probe.violations() == 0);
    CHECK(adv.delta_linf <= cfg.epsilon + 1e-12);
    CHECK(adv.loss_trace.size() == 11);
  }
}

TEST_CASE("pgd attains the corner optimum of linear objectives") {
  std::mt19937_64 eng(616);
  std::uniform_real_distribution<double> wd(-2.0, 2.0);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t m = 8;
    const auto x0 = random_box_point(eng, m);
    std::vector<double> w(m);
    for (auto& v : w) v = wd(eng);
    const LinearObjective obj(w);
    AttackConfig cfg;
    cfg.epsilon = 0.15;
    cfg.step_size = cfg.epsilon;
    cfg.steps = 10;
    const auto adv = pgd(x0, cfg, obj);
    const double best = oracle::corner_max([&](std::span<const double> x) { return obj.value(x); },
                                           x0, cfg.epsilon);
    CAPTURE(trial);
    CHECK(adv.loss_trace.back() >= best - 1e-6);
    // Monotone trace for a fixed ascent direction.
    for (std::size_t t = 1; t < adv.loss_trace.size(); ++t)
      CHECK(adv.loss_trace[t] >= adv.loss_trace[t - 1] - 1e-12);
  }
}

TEST_CASE("random start is deterministic per seed and stays feasible") {
  const std::vector<double> x0 = {0.02, 0.5, 0.98, 0.33};
  AttackConfig cfg;
  cfg.epsilon = 0.1;
  cfg.step_size = 0.0;
  cfg.steps = 0;
  cfg.random_start = true;
  cfg.seed = 1234;
  const LinearObjective obj({1.0, 1.0, 1.0, 1.0});
  const auto a = pgd(x0, cfg, obj);
  const auto b = pgd(x0, cfg, obj);
  CHECK(a.x_adv == b.x_adv);
  CHECK(a.x_adv != x0);
  cfg.seed = 1235;
  const auto c = pgd(x0, cfg, obj);
  CHECK(a.x_adv != c.x_adv);
  for (std::size_t i = 0; i < x0.size(); ++i) {
    CHECK(a.x_adv[i] >= 0.0);
    CHECK(a.x_adv[i] <= 1.0);
    CHECK(std::abs(a.x_adv[i] - x0[i]) <= cfg.epsilon + 1e-12);
  }
}

TEST_CASE("cross-entropy attacks increase the objective on a real model") {
  const auto model = ucat::make_model(12, 5, 4, 0.07, 77);
  std::mt19937_64 eng(31);
  for (int trial = 0; trial < 20; ++trial) {
    ucat::Sample s;
    s.x = random_box_point(eng, 12);
    s.label = trial % 4;
    AttackConfig cfg;
    cfg.epsilon = 0.08;
    cfg.step_size = 0.02;
    cfg.steps = 10;
    cfg.objective = AttackObjectiveKind::CrossEntropy;
    const auto adv = pgd(model, s, cfg);
    CAPTURE(trial);
    CHECK(adv.valid);
    CHECK(adv.loss_trace.back() >= adv.loss_trace.front() - 1e-10);
  }
}

TEST_CASE("combined objective gradients match finite differences") {
  const auto model = ucat::make_model(10, 4, 5, 0.07, 99);
  std::mt19937_64 eng(555);
  for (int trial = 0; trial < 15; ++trial) {
    ucat::Sample s;
    s.x = random_box_point(eng, 10);
    s.label = trial % 5;
    AttackConfig cfg;
    cfg.objective = AttackObjectiveKind::UcatCombined;
    cfg.lambda = 10.0;
    cfg.profile.tau_prime = 0.2;  // moderate evidence scale for clean differencing
    const auto obj = ucat::make_objective(model, s, cfg);
    const auto x = random_box_point(eng, 10);
    const auto g = obj->grad(x);
    for (std::size_t i = 0; i < x.size(); ++i) {
      const auto fd = oracle::central_diff(
          [&](double t) {
            auto xp = x;
            xp[i] = t;
            return obj->value(xp);
          },
          x[i], 1e-6);
      CAPTURE(trial);
      CAPTURE(i);
      CHECK(std::abs(g[i] - fd) <= 1e-5 * std::max(1.0, std::abs(fd)));
    }
  }
}

TEST_CASE("margin attacks flip the prediction when the budget allows") {
  const auto model = ucat::make_model(16, 6, 3, 0.07, 3);
  std::mt19937_64 eng(21);
  int flipped = 0, eligible = 0;
  for (int trial = 0; trial < 40; ++trial) {
    ucat::Sample s;
    s.x = random_box_point(eng, 16);
    const auto fw = model.forward(s.x);
    const auto& v = fw.logits.values;
    s.label = static_cast<int>(std::max_element(v.begin(), v.end()) - v.begin());
    AttackConfig cfg;
    cfg.epsilon = 0.5;  // generous budget against a random model
    cfg.step_size = 0.1;
    cfg.steps = 20;
    cfg.objective = AttackObjectiveKind::Margin;
    // kappa exceeding the logit range keeps the objective out of its flat
    // region, so the ascent direction is live even where the model is right.
    cfg.kappa = 30.0;
    ++eligible;
    const auto adv = pgd(model, s, cfg);
    if (ucat::margin_loss(model.forward(adv.x_adv).logits, s.label, 0.0) > 0.0) ++flipped;
  }
  CHECK(eligible == 40);
  CHECK(flipped >= 20);  // a random linear model should fall to most of these
}

TEST_CASE("margin objective is flat at kappa = 0 for confidently correct points") {
  const auto model = ucat::make_model(6, 4, 3, 0.07, 11);
  std::mt19937_64 eng(77);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 10; ++trial) {
    ucat::Sample s;
    s.x.resize(6);
    for (auto& v : s.x) v = u(eng);
    const auto fw = model.forward(s.x);
    const auto& lv = fw.logits.values;
    s.label = static_cast<int>(std::max_element(lv.begin(), lv.end()) - lv.begin());
    if (ucat::margin_loss(fw.logits, s.label, 1e300) < 0.0) {  // strictly correct
      AttackConfig cfg;
      cfg.epsilon = 0.2;
      cfg.step_size = 0.05;
      cfg.steps = 5;
      cfg.objective = AttackObjectiveKind::Margin;
      cfg.kappa = 0.0;
      const auto adv = pgd(model, s, cfg);
      CHECK(adv.x_adv == s.x);  // zero subgradient in the clamped region
    }
  }
}

TEST_CASE("attack inputs are validated") {
  AttackConfig cfg;
  cfg.epsilon = -0.1;
  const LinearObjective obj({1.0});
  CHECK_THROWS_AS(pgd(std::vector<double>{0.5}, cfg, obj), std::invalid_argument);
  cfg.epsilon = 0.1;
  cfg.steps = -1;
  CHECK_THROWS_AS(pgd(std::vector<double>{0.5}, cfg, obj), std::invalid_argument);
  cfg.steps = 1;
  CHECK_THROWS_AS(pgd(std::vector<double>{1.5}, cfg, obj), std::invalid_argument);
  CHECK_THROWS_AS(pgd(std::vector<double>{}, cfg, obj), std::invalid_argument);
}

#include <doctest.h>

#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

#include "oracles.hpp"
#include "ucat/losses.hpp"

using ucat::EvidenceProfile;
using ucat::LogitVector;
using ucat::LossConfig;
using ucat::LossVariant;

namespace {

LogitVector random_cosine_logits(std::mt19937_64& eng, std::size_t dim, double tau) {
  std::uniform_real_distribution<double> cosd(-0.9, 0.9);
  std::vector<double> c(dim);
  for (auto& v : c) v = cosd(eng);
  return LogitVector::from_cosines(std::move(c), tau);
}

// Cosines confined low enough that alpha stays <= ~6e2 and the loss <= ~1e5.
// Central differences are meaningless against the full training-scale loss
// (~1e11): the f*eps/2h rounding noise of the FD quotient alone exceeds any
// useful tolerance there, so gradient-vs-FD checks run in this band.
LogitVector random_moderate_logits(std::mt19937_64& eng, std::size_t dim, double tau) {
  std::uniform_real_distribution<double> cosd(-0.95, -0.55);
  std::vector<double> c(dim);
  for (auto& v : c) v = cosd(eng);
  return LogitVector::from_cosines(std::move(c), tau);
}

}  // namespace

TEST_CASE("regularizer weight normalization pins its reference values") {
  CHECK(oracle::rel_err(ucat::kl_weight_scale(0.07), 1.8647876398118965) <= 1e-15);
  CHECK(oracle::rel_err(ucat::default_kl_weight(0.07), 53625.409062710824) <= 1e-15);
  CHECK_THROWS_AS(ucat::kl_weight_scale(0.0), std::invalid_argument);
}

TEST_CASE("cross-entropy value and gradient") {
  const auto lv = LogitVector::external({2.0, -1.0, 0.5}, 0.07);
  const auto lp = ucat::log_softmax(lv.values);
  CHECK(ucat::loss_ce(lv, 1) == doctest::Approx(-lp[1]).epsilon(1e-15));

  std::mt19937_64 eng(64);
  std::uniform_real_distribution<double> logit(-5.0, 5.0);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> vals(4);
    for (auto& v : vals) v = logit(eng);
    const int y = trial % 4;
    const auto g = ucat::loss_ce_grad(LogitVector::external(vals, 0.07), y);
    double gsum = 0.0;
    for (std::size_t k = 0; k < vals.size(); ++k) {
      gsum += g[k];
      const auto fd = oracle::central_diff(
          [&](double t) {
            auto p = vals;
            p[k] = t;
            return ucat::loss_ce(LogitVector::external(p, 0.07), y);
          },
          vals[k], 1e-6);
      CHECK(std::abs(g[k] - fd) <= 1e-6 * std::max(1.0, std::abs(fd)));
    }
    CHECK(std::abs(gsum) <= 1e-12);  // softmax - onehot sums to zero
  }
  CHECK_THROWS_AS(ucat::loss_ce(lv, 3), std::invalid_argument);
  CHECK_THROWS_AS(ucat::loss_ce(lv, -1), std::invalid_argument);
}

TEST_CASE("probability KL: sign, diagonal, and gradient") {
  std::mt19937_64 eng(642);
  std::uniform_real_distribution<double> logit(-6.0, 6.0);
  for (int trial = 0; trial < 60; ++trial) {
    std::vector<double> av(5), cv(5);
    for (auto& v : av) v = logit(eng);
    for (auto& v : cv) v = logit(eng);
    const auto adv = LogitVector::external(av, 0.07);
    const auto clean = LogitVector::external(cv, 0.07);
    CHECK(ucat::loss_prob_kl(adv, clean) >= 0.0);
    CHECK(ucat::loss_prob_kl(adv, adv) == 0.0);

    const auto g = ucat::loss_prob_kl_grad(adv, clean);
    for (std::size_t k = 0; k < av.size(); ++k) {
      const auto fd = oracle::central_diff(
          [&](double t) {
            auto p = av;
            p[k] = t;
            return ucat::loss_prob_kl(LogitVector::external(p, 0.07), clean);
          },
          av[k], 1e-6);
      CHECK(std::abs(g[k] - fd) <= 1e-6 * std::max(1.0, std::abs(fd)));
    }
  }
}

TEST_CASE("uniform logit shifts: invisible to probability KL, visible to evidence KL") {
  EvidenceProfile prof;  // tau = tau' = 0.07
  std::mt19937_64 eng(4242);
  std::uniform_real_distribution<double> cosd(-0.6, 0.6);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> c(6);
    for (auto& v : c) v = cosd(eng);
    const auto clean = LogitVector::from_cosines(c, 0.07);
    std::vector<double> shifted = clean.values;
    const double shift = 0.5 + 2.0 * (trial % 5);  // uniform additive offset
    for (auto& v : shifted) v += shift;
    const auto adv = LogitVector::external(shifted, 0.07);

    CAPTURE(trial);
    CHECK(ucat::loss_prob_kl(adv, clean) <= 1e-12);
    CHECK(ucat::loss_ucr(adv, clean, prof) > 1e-6);
  }
}

TEST_CASE("evidence KL loss: diagonal and gradient at the training calibration") {
  EvidenceProfile prof;  // tau = tau' = 0.07, Linear
  std::mt19937_64 eng(7110);
  for (int trial = 0; trial < 40; ++trial) {
    // Value-level properties hold across the entire cosine range.
    const auto adv_full = random_cosine_logits(eng, 5, 0.07);
    const auto clean_full = random_cosine_logits(eng, 5, 0.07);
    CHECK(ucat::loss_ucr(adv_full, adv_full, prof) == 0.0);
    const double v = ucat::loss_ucr(adv_full, clean_full, prof);
    CHECK(v >= 0.0);
    CHECK(std::isfinite(v));

    const auto adv = random_moderate_logits(eng, 5, 0.07);
    const auto clean = random_moderate_logits(eng, 5, 0.07);
    const auto g = ucat::loss_ucr_grad(adv, clean, prof);
    for (std::size_t k = 0; k < g.size(); ++k) {
      const auto fd = oracle::central_diff(
          [&](double t) {
            auto p = adv.values;
            p[k] = t;
            return ucat::loss_ucr(LogitVector::external(p, 0.07), clean, prof);
          },
          adv.values[k], 1e-6);
      CAPTURE(trial);
      CAPTURE(k);
      CHECK(std::abs(g[k] - fd) <= 1e-5 * std::max(1.0, std::abs(fd)));
    }
  }
}

TEST_CASE("batch loss composes per-sample terms and divides gradients by the batch") {
  std::mt19937_64 eng(880);
  const std::size_t B = 6, C = 4;
  std::vector<LogitVector> adv, clean;
  std::vector<int> labels;
  for (std::size_t i = 0; i < B; ++i) {
    adv.push_back(random_moderate_logits(eng, C, 0.07));
    clean.push_back(random_moderate_logits(eng, C, 0.07));
    labels.push_back(static_cast<int>(i % C));
  }

  for (auto variant :
       {LossVariant::CeOnly, LossVariant::CePlusProbKl, LossVariant::CePlusDirichletKl}) {
    LossConfig cfg;
    cfg.variant = variant;
    cfg.lambda = 3.5;
    const auto bl = ucat::total_loss(adv, clean, labels, cfg);

    double ce = 0.0, reg = 0.0;
    for (std::size_t i = 0; i < B; ++i) {
      ce += ucat::loss_ce(adv[i], labels[i]);
      if (variant == LossVariant::CePlusProbKl) reg += ucat::loss_prob_kl(adv[i], clean[i]);
      if (variant == LossVariant::CePlusDirichletKl)
        reg += ucat::loss_ucr(adv[i], clean[i], cfg.profile);
    }
    ce /= B;
    reg /= B;
    CAPTURE(static_cast<int>(variant));
    CHECK(oracle::rel_err(bl.ce, ce) <= 1e-13);
    if (variant == LossVariant::CeOnly) {
      CHECK(bl.reg == 0.0);
      CHECK(bl.total == doctest::Approx(ce).epsilon(1e-13));
    } else {
      CHECK(oracle::rel_err(bl.reg, reg) <= 1e-13);
      CHECK(oracle::rel_err(bl.total, ce + cfg.lambda * reg) <= 1e-13);
    }

    // grad_logits differentiates total wrt each adversarial logit.
    for (std::size_t i = 0; i < 2; ++i) {
      for (std::size_t k = 0; k < C; ++k) {
        const auto fd = oracle::central_diff(
            [&](double t) {
              auto a2 = adv;
              auto vals = a2[i].values;
              vals[k] = t;
              a2[i] = LogitVector::external(vals, 0.07);
              return ucat::total_loss(a2, clean, labels, cfg).total;
            },
            adv[i].values[k], 1e-6);
        CHECK(std::abs(bl.grad_logits[i][k] - fd) <= 1e-5 * std::max(1.0, std::abs(fd)));
      }
    }
  }
}

TEST_CASE("batch loss accepts an empty clean side only for plain cross-entropy") {
  std::mt19937_64 eng(99);
  std::vector<LogitVector> adv = {random_cosine_logits(eng, 3, 0.07)};
  std::vector<int> labels = {1};
  LossConfig cfg;
  cfg.variant = LossVariant::CeOnly;
  CHECK_NOTHROW(ucat::total_loss(adv, {}, labels, cfg));
  cfg.variant = LossVariant::CePlusDirichletKl;
  CHECK_THROWS_AS(ucat::total_loss(adv, {}, labels, cfg), std::invalid_argument);
}

TEST_CASE("loss input validation") {
  const auto a = LogitVector::external({1.0, 2.0}, 0.07);
  const auto b = LogitVector::external({1.0, 2.0, 3.0}, 0.07);
  const auto c = LogitVector::external({1.0, 2.0}, 0.05);
  CHECK_THROWS_AS(ucat::loss_prob_kl(a, b), std::invalid_argument);
  CHECK_THROWS_AS(ucat::loss_prob_kl(a, c), std::invalid_argument);
  LossConfig cfg;
  cfg.lambda = -1.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

#include <doctest.h>

#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

#include "oracles.hpp"
#include "ucat/dirichlet.hpp"

using ucat::DirichletParams;

namespace {

DirichletParams random_params(std::mt19937_64& eng, int max_dim, double lo, double hi) {
  std::uniform_int_distribution<int> dim(2, max_dim);
  std::uniform_real_distribution<double> conc(lo, hi);
  std::vector<double> a(static_cast<std::size_t>(dim(eng)));
  for (auto& x : a) x = conc(eng);
  return DirichletParams(std::move(a));
}

}  // namespace

TEST_CASE("parameter validation") {
  CHECK_THROWS_AS(DirichletParams(std::vector<double>{}), std::invalid_argument);
  CHECK_THROWS_AS(DirichletParams({1.0, 0.0}), std::invalid_argument);
  CHECK_THROWS_AS(DirichletParams({1.0, -2.0}), std::invalid_argument);
  CHECK_THROWS_AS(DirichletParams({1.0, std::nan("")}), std::invalid_argument);
  const DirichletParams p({2.0, 3.0});
  CHECK(p.alpha0 == 5.0);
}

// References computed with 50-digit arithmetic.
TEST_CASE("aleatoric uncertainty pins reference values") {
  CHECK(std::abs(ucat::aleatoric_uncertainty(DirichletParams({1.0, 1.0})) - 0.5) <= 1e-10);
  CHECK(oracle::rel_err(ucat::aleatoric_uncertainty(DirichletParams({3.0, 7.0, 2.0})),
                        0.88237734487734488) <= 1e-12);
  CHECK(oracle::rel_err(ucat::aleatoric_uncertainty(DirichletParams({2.5, 0.5, 1.25, 8.0})),
                        0.86277085963214900) <= 1e-12);
}

TEST_CASE("uncertainty measures respect their analytic ranges") {
  std::mt19937_64 eng(31);
  for (int trial = 0; trial < 400; ++trial) {
    const auto p = random_params(eng, 16, 0.3, 40.0);
    const auto t = ucat::uncertainty_triple(p);
    const double logc = std::log(static_cast<double>(p.size()));
    CAPTURE(trial);
    CHECK(t.au >= 0.0);
    CHECK(t.au <= logc + 1e-12);
    CHECK(t.eu > 0.0);
    CHECK(t.eu < 1.0);
    CHECK(t.eu == doctest::Approx(p.size() / (p.alpha0 + p.size())).epsilon(1e-14));
    CHECK(t.pu >= 0.0);
    CHECK(t.pu <= logc + 1e-12);
    CHECK(t.pu + 1e-12 >= t.au);  // mean entropy upper-bounds expected entropy
  }
}

TEST_CASE("aleatoric uncertainty agrees with Monte Carlo") {
  std::mt19937_64 eng(227);
  for (int trial = 0; trial < 8; ++trial) {
    const auto p = random_params(eng, 8, 1.0, 30.0);
    const auto draws = ucat::sample(p, 40000, 1000 + static_cast<std::uint64_t>(trial));
    std::vector<double> ent(draws.size());
    for (std::size_t i = 0; i < draws.size(); ++i) ent[i] = oracle::categorical_entropy(draws[i]);
    const auto ms = oracle::mean_stderr(ent);
    CAPTURE(trial);
    CHECK(std::abs(ucat::aleatoric_uncertainty(p) - ms.mean) <= 3.0 * ms.stderr_ + 1e-9);
  }
}

TEST_CASE("uncertainties stay finite at training-scale concentrations") {
  const DirichletParams p({2.5e12, 1e9, 5.0, 1.0});
  const auto t = ucat::uncertainty_triple(p);
  CHECK(std::isfinite(t.au));
  CHECK(t.au >= 0.0);
  CHECK(t.au <= std::log(4.0));
  CHECK(t.eu > 0.0);
  CHECK(t.eu < 1e-11);
  CHECK(t.pu >= t.au - 1e-12);
}

TEST_CASE("KL divergence pins reference values") {
  CHECK(oracle::rel_err(
            ucat::kl_dirichlet(DirichletParams({2.0, 1.0}), DirichletParams({1.0, 1.0})),
            0.19314718055994531) <= 1e-12);
  const DirichletParams a({2.5, 0.5, 1.25, 8.0});
  const DirichletParams b({1.5, 1.5, 3.25, 2.0});
  CHECK(oracle::rel_err(ucat::kl_dirichlet(a, b), 5.8515866843141659) <= 1e-12);
  const auto g = ucat::kl_gradient_wrt_a(a, b);
  const double want[] = {0.15013718414758203, -5.2750227724973321, -2.7348788809668743,
                         0.45860151621153572};
  for (std::size_t k = 0; k < 4; ++k) CHECK(oracle::rel_err(g[k], want[k]) <= 1e-12);
}

TEST_CASE("KL is non-negative and zero on the diagonal") {
  std::mt19937_64 eng(733);
  for (int trial = 0; trial < 2000; ++trial) {
    const auto a = random_params(eng, 16, 0.5, 30.0);
    std::vector<double> bv(a.size());
    std::uniform_real_distribution<double> conc(0.5, 30.0);
    for (auto& x : bv) x = conc(eng);
    const DirichletParams b(std::move(bv));
    CAPTURE(trial);
    CHECK(ucat::kl_dirichlet(a, b) >= 0.0);
    CHECK(ucat::kl_dirichlet(a, a) == 0.0);
  }
}

TEST_CASE("KL between huge nearby concentrations does not lose its sign") {
  // This is the regime the difference-form lgamma/digamma exist for: naive
  // evaluation has ~1e-3 absolute error here and goes negative.
  std::mt19937_64 eng(881);
  std::uniform_real_distribution<double> rel(-1e-9, 1e-9);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> av = {2.5e12, 1.3e12, 8e11, 2e12};
    std::vector<double> bv(av.size());
    for (std::size_t k = 0; k < av.size(); ++k) bv[k] = av[k] * (1.0 + rel(eng));
    const DirichletParams a(std::move(av));
    const DirichletParams b(std::move(bv));
    const double kl = ucat::kl_dirichlet(a, b);
    CAPTURE(trial);
    CHECK(kl >= 0.0);
    CHECK(kl < 1.0);
  }
}

TEST_CASE("KL matches a Monte Carlo estimate built on the C library") {
  std::mt19937_64 eng(555);
  for (int trial = 0; trial < 5; ++trial) {
    const auto a = random_params(eng, 6, 1.0, 20.0);
    std::vector<double> bv(a.size());
    std::uniform_real_distribution<double> conc(1.0, 20.0);
    for (auto& x : bv) x = conc(eng);
    const DirichletParams b(std::move(bv));
    const auto draws = ucat::sample(a, 50000, 77 + static_cast<std::uint64_t>(trial));
    std::vector<double> ratio(draws.size());
    for (std::size_t i = 0; i < draws.size(); ++i)
      ratio[i] = oracle::dirichlet_log_pdf(draws[i], a.alpha) -
                 oracle::dirichlet_log_pdf(draws[i], b.alpha);
    const auto ms = oracle::mean_stderr(ratio);
    CAPTURE(trial);
    CHECK(std::abs(ucat::kl_dirichlet(a, b) - ms.mean) <= 3.0 * ms.stderr_);
  }
}

TEST_CASE("KL gradient matches central finite differences") {
  std::mt19937_64 eng(99);
  for (int trial = 0; trial < 100; ++trial) {
    const auto a = random_params(eng, 10, 0.8, 25.0);
    std::vector<double> bv(a.size());
    std::uniform_real_distribution<double> conc(0.8, 25.0);
    for (auto& x : bv) x = conc(eng);
    const DirichletParams b(std::move(bv));
    const auto g = ucat::kl_gradient_wrt_a(a, b);
    for (std::size_t k = 0; k < a.size(); ++k) {
      const auto fd = oracle::central_diff(
          [&](double t) {
            auto av = a.alpha;
            av[k] = t;
            return ucat::kl_dirichlet(DirichletParams(av), b);
          },
          a.alpha[k], 1e-5 * a.alpha[k]);
      CAPTURE(trial);
      CAPTURE(k);
      CHECK(std::abs(g[k] - fd) <= 1e-5 * std::max(1.0, std::abs(fd)));
    }
  }
}

TEST_CASE("KL rejects dimension mismatches") {
  CHECK_THROWS_AS(
      ucat::kl_dirichlet(DirichletParams({1.0, 2.0}), DirichletParams({1.0, 2.0, 3.0})),
      std::invalid_argument);
  CHECK_THROWS_AS(
      ucat::kl_gradient_wrt_a(DirichletParams({1.0}), DirichletParams({1.0, 2.0})),
      std::invalid_argument);
}

TEST_CASE("simplex sampling is deterministic, normalized, and unbiased") {
  const DirichletParams p({2.0, 5.0, 0.7, 11.0});
  const auto d1 = ucat::sample(p, 2000, 42);
  const auto d2 = ucat::sample(p, 2000, 42);
  const auto d3 = ucat::sample(p, 2000, 43);
  CHECK(d1 == d2);
  CHECK(d1 != d3);

  std::vector<double> mean(p.size(), 0.0);
  for (const auto& row : d1) {
    double sum = 0.0;
    for (std::size_t k = 0; k < row.size(); ++k) {
      CHECK(row[k] >= 0.0);
      sum += row[k];
      mean[k] += row[k];
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
  }
  for (std::size_t k = 0; k < mean.size(); ++k) {
    mean[k] /= static_cast<double>(d1.size());
    const double want = p.alpha[k] / p.alpha0;
    // stderr of a Dirichlet marginal is sqrt(want*(1-want)/(alpha0+1)/n)
    const double se = std::sqrt(want * (1.0 - want) / (p.alpha0 + 1.0) / 2000.0);
    CHECK(std::abs(mean[k] - want) <= 4.0 * se);
  }
}

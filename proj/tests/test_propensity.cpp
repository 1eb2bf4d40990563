#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "ecmatch/errors.hpp"
#include "ecmatch/propensity.hpp"
#include "test_support.hpp"

using namespace ecmatch;

namespace {

// Random logistic dataset with n rows and p covariates; regenerated until the
// maximum-likelihood fit exists, is interior (|coef| <= 4) and converged.
struct LogisticCase {
  std::vector<std::vector<double>> x;
  std::vector<int> y;
  LogisticFit fit;
};

LogisticCase well_posed_case(std::mt19937& gen, int n, int p) {
  std::normal_distribution<double> z(0.0, 1.0);
  std::uniform_real_distribution<double> beta_draw(-1.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (;;) {
    std::vector<double> beta(static_cast<std::size_t>(p) + 1);
    for (auto& b : beta) b = beta_draw(gen);
    std::vector<std::vector<double>> x(static_cast<std::size_t>(n));
    std::vector<int> y(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      double eta = beta[0];
      for (int j = 0; j < p; ++j) {
        const double v = z(gen);
        x[static_cast<std::size_t>(i)].push_back(v);
        eta += beta[static_cast<std::size_t>(j) + 1] * v;
      }
      y[static_cast<std::size_t>(i)] =
          unit(gen) < 1.0 / (1.0 + std::exp(-eta)) ? 1 : 0;
    }
    try {
      LogisticFit fit = fit_logistic(x, y);
      bool interior = true;
      for (const double c : fit.coefficients) {
        if (std::abs(c) > 4.0) interior = false;
      }
      if (!interior) continue;
      return {std::move(x), std::move(y), std::move(fit)};
    } catch (const NumericalError&) {
      continue;  // separated or degenerate draw; try again
    }
  }
}

}  // namespace

TEST_CASE("propensity: intercept-only fit recovers the log odds") {
  // 10 trial members among 100 -> log(10/90).
  std::vector<std::vector<double>> x(100);
  std::vector<int> y(100, 0);
  for (int i = 0; i < 10; ++i) y[static_cast<std::size_t>(i)] = 1;
  const auto fit = fit_logistic(x, y);
  REQUIRE(fit.coefficients.size() == 1);
  CHECK(fit.coefficients[0] == doctest::Approx(std::log(10.0 / 90.0)).epsilon(1e-8));
  CHECK(fit.converged);
}

TEST_CASE("propensity: inverse logit hits its anchor points") {
  CHECK(logistic_probability(0.0) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(logistic_probability(std::log(9.0)) == doctest::Approx(0.9).epsilon(1e-12));
  CHECK(logistic_probability(800.0) == doctest::Approx(1.0));
  CHECK(logistic_probability(-800.0) >= 0.0);
  CHECK(logistic_probability(-800.0) < 1e-300);
  CHECK(std::isfinite(logistic_probability(800.0)));
}

TEST_CASE("propensity: linear predictor") {
  CHECK(linear_predictor({1.0, 2.0, -0.5}, {3.0, 4.0}) ==
        doctest::Approx(1.0 + 6.0 - 2.0));
}

TEST_CASE("propensity: fit agrees with a refining grid search") {
  std::mt19937 gen(101);
  for (int round = 0; round < 8; ++round) {
    const int n = 12 + static_cast<int>(gen() % 29);
    const int p = 1 + static_cast<int>(gen() % 2);
    const auto data = well_posed_case(gen, n, p);
    const auto grid = testsupport::grid_search_logistic(
        data.x, data.y, data.fit.coefficients.size(), -6.0, 6.0, 0.5, 2e-4);
    for (std::size_t j = 0; j < grid.size(); ++j) {
      CHECK(std::abs(data.fit.coefficients[j] - grid[j]) < 1e-3);
    }
    // The reported log-likelihood matches an independent evaluation.
    CHECK(data.fit.log_likelihood ==
          doctest::Approx(testsupport::oracle_logistic_ll(
                              data.x, data.y, data.fit.coefficients))
              .epsilon(1e-10));
  }
}

TEST_CASE("propensity: analytic score matches central finite differences") {
  std::mt19937 gen(103);
  std::uniform_real_distribution<double> beta_draw(-2.0, 2.0);
  for (int round = 0; round < 6; ++round) {
    const int n = 15 + static_cast<int>(gen() % 26);
    const int p = 1 + static_cast<int>(gen() % 2);
    const auto data = well_posed_case(gen, n, p);
    for (int trial = 0; trial < 3; ++trial) {
      std::vector<double> beta(static_cast<std::size_t>(p) + 1);
      for (auto& b : beta) b = beta_draw(gen);
      const auto analytic = logistic_score(data.x, data.y, beta);
      const auto numeric = testsupport::central_fd_gradient(
          [&](const std::vector<double>& b) {
            return logistic_log_likelihood(data.x, data.y, b);
          },
          beta);
      double scale = 1.0;
      for (const double g : analytic) scale = std::max(scale, std::abs(g));
      for (std::size_t j = 0; j < analytic.size(); ++j) {
        CHECK(std::abs(analytic[j] - numeric[j]) <= 1e-4 * scale);
      }
    }
  }
}

TEST_CASE("propensity: score vanishes at the maximum") {
  std::mt19937 gen(105);
  const auto data = well_posed_case(gen, 40, 2);
  const auto score = logistic_score(data.x, data.y, data.fit.coefficients);
  for (const double g : score) CHECK(std::abs(g) < 1e-6);
}

TEST_CASE("propensity: separation and degeneracies raise numerical errors") {
  SUBCASE("perfect separation") {
    // Small covariate scale: saturating the likelihood requires coefficients
    // far beyond the divergence bound, so the separation guard must fire.
    std::vector<std::vector<double>> x;
    std::vector<int> y;
    for (int i = 0; i < 20; ++i) {
      x.push_back({i < 10 ? 0.25 : -0.25});
      y.push_back(i < 10 ? 1 : 0);
    }
    CHECK_THROWS_AS(fit_logistic(x, y), NumericalError);
  }
  SUBCASE("constant response") {
    std::vector<std::vector<double>> x{{0.1}, {0.4}, {0.9}, {0.2}};
    std::vector<int> y{1, 1, 1, 1};
    CHECK_THROWS_AS(fit_logistic(x, y), NumericalError);
  }
  SUBCASE("rank-deficient design") {
    std::vector<std::vector<double>> x;
    std::vector<int> y;
    std::mt19937 gen(4);
    std::normal_distribution<double> z(0.0, 1.0);
    for (int i = 0; i < 30; ++i) {
      const double v = z(gen);
      x.push_back({v, 2.0 * v});  // second column is a multiple of the first
      y.push_back(i % 2);
    }
    CHECK_THROWS_AS(fit_logistic(x, y), NumericalError);
  }
  SUBCASE("input size mismatch") {
    std::vector<std::vector<double>> x{{0.1}, {0.2}};
    std::vector<int> y{1};
    CHECK_THROWS_AS(fit_logistic(x, y), ValidationError);
  }
}

TEST_CASE("propensity: large-sample fit recovers the generating coefficients") {
  std::mt19937 gen(107);
  std::normal_distribution<double> z(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const std::vector<double> truth{-0.4, 0.8, -0.6};
  const int n = 6000;
  std::vector<std::vector<double>> x;
  std::vector<int> y;
  for (int i = 0; i < n; ++i) {
    const double a = z(gen), b = z(gen);
    const double eta = truth[0] + truth[1] * a + truth[2] * b;
    x.push_back({a, b});
    y.push_back(unit(gen) < 1.0 / (1.0 + std::exp(-eta)) ? 1 : 0);
  }
  const auto fit = fit_logistic(x, y);
  for (std::size_t j = 0; j < truth.size(); ++j) {
    CHECK(std::abs(fit.coefficients[j] - truth[j]) < 0.15);
  }
  CHECK(fit.iterations <= 100);
  CHECK(fit.converged);
}

TEST_CASE("propensity: selection_scores regresses membership on covariates") {
  std::mt19937 gen(109);
  const auto ds = testsupport::random_trial(gen, 30, 120, 1, 2);

  // Replicate by hand: y = 1 for trial rows, covariates as given.
  std::vector<std::vector<double>> x;
  std::vector<int> y;
  for (const auto& s : ds.subjects) {
    x.push_back(s.covariates);
    y.push_back(s.source == Source::RCT ? 1 : 0);
  }
  const auto direct = fit_logistic(x, y);
  const auto scored = selection_scores(ds);

  REQUIRE(scored.fit.coefficients.size() == direct.coefficients.size());
  for (std::size_t j = 0; j < direct.coefficients.size(); ++j) {
    CHECK(scored.fit.coefficients[j] == doctest::Approx(direct.coefficients[j]).epsilon(1e-12));
  }
  REQUIRE(scored.logit.size() == ds.subjects.size());
  for (std::size_t i = 0; i < ds.subjects.size(); ++i) {
    CHECK(scored.logit[i] ==
          doctest::Approx(linear_predictor(scored.fit.coefficients,
                                           ds.subjects[i].covariates))
              .epsilon(1e-12));
  }
}

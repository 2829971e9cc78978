#include <cmath>
#include <numeric>

#include "doctest.h"
#include "helpers.hpp"
#include "tconf/stability.hpp"

using namespace tconf;
using namespace tconf::testing;

TEST_CASE("stability_curve arithmetic") {
  const StabilityCurve zeros = stability_curve({0, 0, 0, 0}, StabilityCondition::tournament);
  for (double nu : {0.0, 0.1, 0.5, 1.0}) CHECK(zeros.epsilon_at(nu) == 0.0);

  const StabilityCurve small = stability_curve({4, 2, 1, 3}, StabilityCondition::approx_test);
  CHECK(small.epsilon_at(0.25) == doctest::Approx(3.0));  // 75% of the mass at or below 3
  CHECK(small.epsilon_at(0.0) == doctest::Approx(4.0));   // max
  CHECK(small.epsilon_at(1.0) == 0.0);

  CHECK_THROWS_AS(stability_curve({}, StabilityCondition::tournament), std::invalid_argument);
  CHECK_THROWS_AS(stability_curve({-1.0}, StabilityCondition::tournament), std::invalid_argument);
  CHECK_THROWS_AS(small.epsilon_at(-0.1), std::invalid_argument);
}

TEST_CASE("stability_curve is non-increasing in nu") {
  rng::Stream stream(51);
  std::vector<double> deltas;
  for (int k = 0; k < 200; ++k) deltas.push_back(std::abs(stream.normal()));
  const StabilityCurve curve = stability_curve(deltas, StabilityCondition::tournament);
  double prev = kInf;
  for (double nu = 0.0; nu <= 1.0; nu += 0.01) {
    const double eps = curve.epsilon_at(nu);
    CHECK(eps <= prev + 1e-15);
    prev = eps;
  }
}

TEST_CASE("identical training rows make every tournament delta vanish") {
  // Removing one of three identical rows leaves the fit unchanged, so the
  // corrected and uncorrected scores coincide.
  Eigen::MatrixXd X(3, 1);
  X << 1.0, 1.0, 1.0;
  Eigen::VectorXd y(3);
  y << 2.0, 2.0, 2.0;
  const Dataset train(X, y);
  DataPoint test{Eigen::VectorXd::Constant(1, 0.5), 1.7};

  const std::vector<double> deltas =
      tournament_deltas_for(ScoreFamily::deletion(), train, test, {0, 1, 2});
  for (double d : deltas) CHECK(d <= 1e-12);
}

TEST_CASE("hand-computed univariate instance matches tournament deltas") {
  // n = 3, p = 1; scalar least squares admits spreadsheet arithmetic.
  Eigen::MatrixXd X(3, 1);
  X << 0.8, -1.3, 2.1;
  Eigen::VectorXd y(3);
  y << 1.1, -0.4, 2.9;
  const Dataset train(X, y);
  const DataPoint test{Eigen::VectorXd::Constant(1, 0.6), 0.9};

  const double sxx = X.col(0).squaredNorm();
  const double sxy = X.col(0).dot(y);
  const double beta_full = sxy / sxx;

  SUBCASE("deletion family") {
    const double base = std::abs(test.y - test.x(0) * beta_full);
    const std::vector<double> deltas =
        tournament_deltas_for(ScoreFamily::deletion(), train, test, {0, 1, 2});
    for (int i = 0; i < 3; ++i) {
      const double beta_loo = (sxy - X(i, 0) * y(i)) / (sxx - X(i, 0) * X(i, 0));
      const double corrected = std::abs(test.y - test.x(0) * beta_loo);
      CHECK(deltas[static_cast<std::size_t>(i)] ==
            doctest::Approx(std::abs(corrected - base)).epsilon(1e-10));
    }
  }

  SUBCASE("one-step family") {
    const double eta = 10.0;
    const double theta2 =
        beta_full + eta / 4.0 * test.x(0) * (test.y - test.x(0) * beta_full);
    const double base = std::abs(test.y - test.x(0) * theta2);
    const std::vector<double> deltas =
        tournament_deltas_for(ScoreFamily::one_step({eta}), train, test, {0, 1, 2});
    for (int i = 0; i < 3; ++i) {
      const double beta_loo = (sxy - X(i, 0) * y(i)) / (sxx - X(i, 0) * X(i, 0));
      const double grad = X(i, 0) * (y(i) - X(i, 0) * beta_loo) +
                          test.x(0) * (test.y - test.x(0) * beta_loo);
      const double theta3 = beta_loo + eta / 4.0 * grad;
      const double corrected = std::abs(test.y - test.x(0) * theta3);
      CHECK(deltas[static_cast<std::size_t>(i)] ==
            doctest::Approx(std::abs(corrected - base)).epsilon(1e-10));
    }
  }
}

TEST_CASE("one-step deltas collapse to deletion deltas as eta vanishes") {
  rng::Stream stream(52);
  const Dataset train = random_dataset(8, 2, stream);
  const DataPoint test = random_point(2, stream);
  const std::vector<std::size_t> indices{0, 1, 2, 3, 4, 5, 6, 7};

  const std::vector<double> del = tournament_deltas_for(ScoreFamily::deletion(), train, test, indices);
  const std::vector<double> one =
      tournament_deltas_for(ScoreFamily::one_step({1e-12}), train, test, indices);
  REQUIRE(del.size() == one.size());
  for (std::size_t k = 0; k < del.size(); ++k) CHECK(std::abs(del[k] - one[k]) <= 1e-9);

  const auto [dt, dr] = approx_deltas_for(ScoreFamily::deletion(), train, test, 3);
  const auto [ot, or_] = approx_deltas_for(ScoreFamily::one_step({1e-12}), train, test, 3);
  CHECK(std::abs(dt - ot) <= 1e-9);
  CHECK(std::abs(dr - or_) <= 1e-9);
}

TEST_CASE("one-step test-point delta vanishes when the added point is already fitted") {
  // A test point lying exactly on the fitted plane leaves both the one-step
  // update and the exact refit unchanged, so approximate and exact scores
  // coincide.
  rng::Stream stream(54);
  const Dataset train = random_dataset(10, 2, stream);
  DataPoint test = random_point(2, stream);
  test.y = fit_ols_pinv(train).predict(test.x);
  const auto [test_delta, train_delta] =
      approx_deltas_for(ScoreFamily::one_step({10.0}), train, test, 1);
  CHECK(test_delta <= 1e-8);
  CHECK(train_delta <= 1e-8);
}

TEST_CASE("rounding test-point delta vanishes when the response sits on the grid") {
  rng::Stream stream(53);
  const Dataset train = random_dataset(10, 2, stream);
  const RoundingGrid grid = build_rounding_grid(train.responses(), 10, 0.02);
  DataPoint test = random_point(2, stream);
  test.y = grid.points[6];
  const auto [test_delta, train_delta] =
      approx_deltas_for(ScoreFamily::rounding(grid), train, test, 2);
  CHECK(test_delta == 0.0);
  CHECK(train_delta >= 0.0);
}

TEST_CASE("near-interpolation regime: test-point deltas dominate train-point deltas") {
  // With p close to n, re-including the test point moves its own prediction
  // far more than it moves a training prediction.
  SimConfig cfg;
  cfg.n = 12;
  cfg.p = 10;
  cfg.trials = 25;
  cfg.master_seed = 999;
  FamilyPreset preset;
  preset.kind = FamilyKind::deletion;
  const ApproxDeltas deltas = stability_deltas_approx(preset, cfg);
  const double mean_test =
      std::accumulate(deltas.test_point.begin(), deltas.test_point.end(), 0.0) / cfg.trials;
  const double mean_train =
      std::accumulate(deltas.train_point.begin(), deltas.train_point.end(), 0.0) / cfg.trials;
  CHECK(mean_test > mean_train);
}

TEST_CASE("simulation wrappers are deterministic and worker-independent") {
  SimConfig cfg;
  cfg.n = 9;
  cfg.p = 2;
  cfg.trials = 6;
  cfg.master_seed = 31337;

  for (FamilyKind kind :
       {FamilyKind::deletion, FamilyKind::one_step, FamilyKind::rounding, FamilyKind::bayes_ppd}) {
    FamilyPreset preset;
    preset.kind = kind;
    preset.bayes_K = 25;
    const std::vector<double> a = stability_deltas_tournament(preset, cfg, 4, 1);
    const std::vector<double> b = stability_deltas_tournament(preset, cfg, 4, 3);
    CHECK(a == b);
    CHECK(a.size() == static_cast<std::size_t>(cfg.trials * 4));

    const ApproxDeltas c = stability_deltas_approx(preset, cfg, 1);
    const ApproxDeltas d = stability_deltas_approx(preset, cfg, 2);
    CHECK(c.test_point == d.test_point);
    CHECK(c.train_point == d.train_point);
    for (double v : c.test_point) CHECK(v >= 0.0);
  }
}

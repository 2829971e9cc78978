#include <cmath>

#include "doctest.h"
#include "tconf/models.hpp"
#include "tconf/rng.hpp"

using namespace tconf;

namespace {

Dataset random_dataset(int n, int p, rng::Stream& stream) {
  Eigen::MatrixXd X(n, p);
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < p; ++j) X(i, j) = stream.normal();
    y(i) = stream.normal();
  }
  return Dataset(std::move(X), std::move(y));
}

}  // namespace

TEST_CASE("fit_ols_pinv identity design") {
  Eigen::MatrixXd X = Eigen::MatrixXd::Identity(3, 3);
  Eigen::VectorXd y(3);
  y << 1, 2, 3;
  const LinearModel m = fit_ols_pinv(Dataset(X, y));
  CHECK(m.beta(0) == doctest::Approx(1.0));
  CHECK(m.beta(1) == doctest::Approx(2.0));
  CHECK(m.beta(2) == doctest::Approx(3.0));
}

TEST_CASE("fit_ols_pinv single row gives the minimum-norm solution") {
  Eigen::MatrixXd X(1, 2);
  X << 1, 1;
  Eigen::VectorXd y(1);
  y << 2;
  const LinearModel m = fit_ols_pinv(Dataset(X, y));
  CHECK(m.beta(0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(m.beta(1) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("fit_ols_pinv matches the normal equations on a full-rank design") {
  rng::Stream stream(11);
  const Dataset data = random_dataset(50, 10, stream);
  const LinearModel m = fit_ols_pinv(data);

  // Independent oracle: solve (X'X) beta = X'y directly.
  const Eigen::MatrixXd xtx = data.X().transpose() * data.X();
  const Eigen::VectorXd xty = data.X().transpose() * data.y();
  const Eigen::VectorXd oracle = xtx.ldlt().solve(xty);
  CHECK((m.beta - oracle).norm() <= 1e-8);

  // Residuals orthogonal to the column space.
  const Eigen::VectorXd resid = data.y() - data.X() * m.beta;
  CHECK((data.X().transpose() * resid).lpNorm<Eigen::Infinity>() <= 1e-8 * data.y().norm());
}

TEST_CASE("fit_ols_pinv minimizes the residual norm") {
  rng::Stream stream(12);
  const Dataset data = random_dataset(30, 6, stream);
  const LinearModel m = fit_ols_pinv(data);
  const double base = (data.y() - data.X() * m.beta).norm();
  for (int rep = 0; rep < 100; ++rep) {
    Eigen::VectorXd dir(6);
    for (int j = 0; j < 6; ++j) dir(j) = stream.normal();
    dir.normalize();
    const double perturbed = (data.y() - data.X() * (m.beta + 1e-3 * dir)).norm();
    CHECK(perturbed >= base - 1e-12);
  }
}

TEST_CASE("fit_ols_pinv input validation") {
  CHECK_THROWS_AS(fit_ols_pinv(Dataset{}), std::invalid_argument);
  Eigen::MatrixXd X(1, 1);
  X << std::nan("");
  Eigen::VectorXd y(1);
  y << 0.0;
  CHECK_THROWS_AS(fit_ols_pinv(Dataset(X, y)), std::invalid_argument);
}

TEST_CASE("loo_fit equals a refit with the row dropped") {
  rng::Stream stream(13);
  const Dataset data = random_dataset(12, 4, stream);
  for (std::size_t i = 0; i < data.size(); ++i) {
    const LinearModel a = loo_fit(data, i);
    const LinearModel b = fit_ols_pinv(data.without_row(i));
    CHECK((a.beta - b.beta).lpNorm<Eigen::Infinity>() <= 1e-10);
  }
  CHECK_THROWS_AS(loo_fit(data, 12), std::out_of_range);

  // Two identical rows: removing one leaves the fit on the survivor.
  Eigen::MatrixXd X(2, 1);
  X << 1, 1;
  Eigen::VectorXd y(2);
  y << 3, 3;
  const LinearModel survivor = loo_fit(Dataset(X, y), 0);
  CHECK(survivor.beta(0) == doctest::Approx(3.0));
}

TEST_CASE("loo_fit handles rank deficiency after removal") {
  // Removing row 0 leaves two copies of the same direction: rank 1 out of 2.
  Eigen::MatrixXd X(3, 2);
  X << 1, 0, 0, 1, 0, 1;
  Eigen::VectorXd y(3);
  y << 1, 2, 2;
  const LinearModel m = loo_fit(Dataset(X, y), 0);
  CHECK(m.beta(0) == doctest::Approx(0.0).epsilon(1e-10));
  CHECK(m.beta(1) == doctest::Approx(2.0));
}

TEST_CASE("one_step_update formula and edge cases") {
  rng::Stream stream(14);

  // Hand evaluation: p=1, base beta 0, 9 base rows, eta 10, x'=1, y'=1.
  LinearModel base{Eigen::VectorXd::Zero(1)};
  DataPoint z{Eigen::VectorXd::Ones(1), 1.0};
  const LinearModel updated = one_step_update(base, 9, {z}, OneStepConfig{10.0});
  CHECK(updated.beta(0) == doctest::Approx(1.0));

  // Vanishing step leaves the model unchanged.
  LinearModel rich{Eigen::VectorXd::Constant(3, 0.7)};
  DataPoint z3{Eigen::VectorXd::Constant(3, 1.1), 2.0};
  const LinearModel still = one_step_update(rich, 10, {z3}, OneStepConfig{1e-12});
  CHECK((still.beta - rich.beta).lpNorm<Eigen::Infinity>() <= 1e-9);

  // Zero residual: the gradient vanishes exactly.
  DataPoint fitted{Eigen::VectorXd::Constant(3, 1.0), 0.0};
  fitted.y = rich.predict(fitted.x);
  const LinearModel same = one_step_update(rich, 10, {fitted}, OneStepConfig{10.0});
  CHECK((same.beta - rich.beta).lpNorm<Eigen::Infinity>() == 0.0);

  CHECK_THROWS_AS(one_step_update(rich, 10, {}, OneStepConfig{10.0}), std::invalid_argument);
  CHECK_THROWS_AS(one_step_update(rich, 10, {z3, z3, z3}, OneStepConfig{10.0}),
                  std::invalid_argument);
}

TEST_CASE("one_step_update two-point symmetry and linearity in the responses") {
  rng::Stream stream(15);
  for (int rep = 0; rep < 20; ++rep) {
    LinearModel base{Eigen::VectorXd::Zero(4)};
    for (int j = 0; j < 4; ++j) base.beta(j) = stream.normal();
    DataPoint a{Eigen::VectorXd::Zero(4), stream.normal()};
    DataPoint b{Eigen::VectorXd::Zero(4), stream.normal()};
    for (int j = 0; j < 4; ++j) {
      a.x(j) = stream.normal();
      b.x(j) = stream.normal();
    }
    const OneStepConfig cfg{10.0};
    const LinearModel ab = one_step_update(base, 20, {a, b}, cfg);
    const LinearModel ba = one_step_update(base, 20, {b, a}, cfg);
    CHECK((ab.beta - ba.beta).lpNorm<Eigen::Infinity>() <= 1e-12);

    // Linearity in y' holding everything else fixed.
    DataPoint a1 = a, a2 = a;
    a1.y = 1.0;
    a2.y = 2.0;
    const Eigen::VectorXd at1 = one_step_update(base, 20, {a1, b}, cfg).beta;
    const Eigen::VectorXd at2 = one_step_update(base, 20, {a2, b}, cfg).beta;
    DataPoint a15 = a;
    a15.y = 1.5;
    const Eigen::VectorXd at15 = one_step_update(base, 20, {a15, b}, cfg).beta;
    CHECK((at15 - 0.5 * (at1 + at2)).lpNorm<Eigen::Infinity>() <= 1e-10);
  }
}

TEST_CASE("one-step test-point score closed form |1-kappa||t|") {
  rng::Stream stream(16);
  for (int rep = 0; rep < 100; ++rep) {
    const int n = 10, p = 3;
    const Dataset data = random_dataset(n, p, stream);
    const LinearModel base = fit_ols_pinv(data);
    DataPoint test{Eigen::VectorXd::Zero(p), stream.normal()};
    for (int j = 0; j < p; ++j) test.x(j) = stream.normal();

    const OneStepConfig cfg{10.0};
    const LinearModel upd = one_step_update(base, n, {test}, cfg);
    const double direct = std::abs(test.y - upd.predict(test.x));

    const double kappa = cfg.eta / (n + 1) * test.x.squaredNorm();
    const double t = test.y - base.predict(test.x);
    CHECK(direct == doctest::Approx(std::abs(1.0 - kappa) * std::abs(t)).epsilon(1e-9));
  }
}

TEST_CASE("generate_trial contracts") {
  SimConfig cfg;
  cfg.n = 20;
  cfg.p = 4;
  cfg.master_seed = 123;

  const TrialData a = generate_trial(cfg, 5);
  const TrialData b = generate_trial(cfg, 5);
  CHECK(a.train.X() == b.train.X());
  CHECK(a.train.y() == b.train.y());
  CHECK(a.test.x == b.test.x);
  CHECK(a.test.y == b.test.y);
  CHECK(a.beta_star == b.beta_star);

  const TrialData c = generate_trial(cfg, 6);
  CHECK(a.train.y() != c.train.y());

  CHECK(a.beta_star.norm() == doctest::Approx(std::sqrt(10.0)).epsilon(1e-12));

  // Noiseless: responses lie exactly on the line.
  SimConfig clean = cfg;
  clean.noise_sd = 0.0;
  clean.p = 1;
  const TrialData d = generate_trial(clean, 0);
  for (std::size_t i = 0; i < d.train.size(); ++i) {
    CHECK(d.train.y()(static_cast<Eigen::Index>(i)) ==
          doctest::Approx(d.train.X()(static_cast<Eigen::Index>(i), 0) * d.beta_star(0)));
  }
}

TEST_CASE("dataset views") {
  rng::Stream stream(17);
  const Dataset data = random_dataset(5, 2, stream);
  const Dataset smaller = data.without_row(2);
  CHECK(smaller.size() == 4);
  CHECK(smaller.X().row(2) == data.X().row(3));

  const DataPoint z = data.row(1);
  const Dataset bigger = data.with_point(z);
  CHECK(bigger.size() == 6);
  CHECK(bigger.y()(5) == z.y);

  const Dataset swapped = data.with_response(0, 42.0);
  CHECK(swapped.y()(0) == 42.0);
  CHECK(swapped.X() == data.X());
  CHECK_THROWS_AS(data.row(7), std::out_of_range);
}

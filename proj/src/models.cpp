#include "tconf/models.hpp"

#include <stdexcept>

#include "tconf/rng.hpp"

namespace tconf {

Dataset::Dataset(Eigen::MatrixXd X, Eigen::VectorXd y) : X_(std::move(X)), y_(std::move(y)) {
  if (X_.rows() != y_.rows()) {
    throw std::invalid_argument("Dataset: X and y must have the same number of rows");
  }
}

Dataset Dataset::from_points(const std::vector<DataPoint>& points) {
  if (points.empty()) return Dataset{};
  const Eigen::Index p = points.front().x.size();
  Eigen::MatrixXd X(static_cast<Eigen::Index>(points.size()), p);
  Eigen::VectorXd y(static_cast<Eigen::Index>(points.size()));
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (points[i].x.size() != p) {
      throw std::invalid_argument("Dataset::from_points: inconsistent feature dimension");
    }
    X.row(static_cast<Eigen::Index>(i)) = points[i].x.transpose();
    y(static_cast<Eigen::Index>(i)) = points[i].y;
  }
  return Dataset(std::move(X), std::move(y));
}

std::vector<double> Dataset::responses() const {
  return std::vector<double>(y_.data(), y_.data() + y_.size());
}

void Dataset::check_index(std::size_t i) const {
  if (i >= size()) throw std::out_of_range("Dataset: row index out of range");
}

DataPoint Dataset::row(std::size_t i) const {
  check_index(i);
  return DataPoint{X_.row(static_cast<Eigen::Index>(i)).transpose(), y_(static_cast<Eigen::Index>(i))};
}

Dataset Dataset::without_row(std::size_t i) const {
  check_index(i);
  const Eigen::Index n = X_.rows();
  Eigen::MatrixXd X(n - 1, X_.cols());
  Eigen::VectorXd y(n - 1);
  const Eigen::Index ei = static_cast<Eigen::Index>(i);
  X.topRows(ei) = X_.topRows(ei);
  y.head(ei) = y_.head(ei);
  X.bottomRows(n - 1 - ei) = X_.bottomRows(n - 1 - ei);
  y.tail(n - 1 - ei) = y_.tail(n - 1 - ei);
  return Dataset(std::move(X), std::move(y));
}

Dataset Dataset::with_point(const DataPoint& z) const {
  Eigen::MatrixXd X(X_.rows() + 1, size() == 0 ? z.x.size() : X_.cols());
  Eigen::VectorXd y(y_.size() + 1);
  if (size() > 0) {
    if (z.x.size() != X_.cols()) {
      throw std::invalid_argument("Dataset::with_point: feature dimension mismatch");
    }
    X.topRows(X_.rows()) = X_;
    y.head(y_.size()) = y_;
  }
  X.row(X.rows() - 1) = z.x.transpose();
  y(y.size() - 1) = z.y;
  return Dataset(std::move(X), std::move(y));
}

Dataset Dataset::with_points(const DataPoint& z1, const DataPoint& z2) const {
  return with_point(z1).with_point(z2);
}

Dataset Dataset::with_response(std::size_t i, double new_y) const {
  check_index(i);
  Eigen::VectorXd y = y_;
  y(static_cast<Eigen::Index>(i)) = new_y;
  return Dataset(X_, std::move(y));
}

double LinearModel::predict(const Eigen::VectorXd& x) const {
  if (x.size() != beta.size()) {
    throw std::invalid_argument("LinearModel::predict: feature dimension mismatch");
  }
  return x.dot(beta);
}

void OneStepConfig::validate() const {
  if (!(eta > 0.0)) throw std::invalid_argument("OneStepConfig: eta must be positive");
}

void SimConfig::validate() const {
  if (n < 2) throw std::invalid_argument("SimConfig: n must be >= 2");
  if (p < 1) throw std::invalid_argument("SimConfig: p must be >= 1");
  if (trials < 1) throw std::invalid_argument("SimConfig: trials must be >= 1");
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("SimConfig: alpha must lie in (0,1)");
  if (beta_star_norm < 0.0) throw std::invalid_argument("SimConfig: beta_star_norm must be >= 0");
  if (noise_sd < 0.0) throw std::invalid_argument("SimConfig: noise_sd must be >= 0");
}

PinvFactor::PinvFactor(const Eigen::MatrixXd& X, double rtol) {
  Eigen::BDCSVD<Eigen::MatrixXd> svd(X, Eigen::ComputeThinU | Eigen::ComputeThinV);
  U_ = svd.matrixU();
  V_ = svd.matrixV();
  const Eigen::VectorXd& sigma = svd.singularValues();
  inv_sigma_ = Eigen::VectorXd::Zero(sigma.size());
  const double cutoff = sigma.size() > 0 ? rtol * sigma(0) : 0.0;
  for (Eigen::Index k = 0; k < sigma.size(); ++k) {
    if (sigma(k) > cutoff) {
      inv_sigma_(k) = 1.0 / sigma(k);
      ++rank_;
    }
  }
}

Eigen::VectorXd PinvFactor::solve(const Eigen::VectorXd& y) const {
  return V_ * inv_sigma_.cwiseProduct(U_.transpose() * y);
}

Eigen::MatrixXd PinvFactor::pseudoinverse() const {
  return V_ * inv_sigma_.asDiagonal() * U_.transpose();
}

LinearModel fit_ols_pinv(const Dataset& data) {
  if (data.size() == 0) throw std::invalid_argument("fit_ols_pinv: empty dataset");
  if (!data.X().allFinite() || !data.y().allFinite()) {
    throw std::invalid_argument("fit_ols_pinv: non-finite inputs");
  }
  PinvFactor factor(data.X());
  return LinearModel{factor.solve(data.y())};
}

LinearModel loo_fit(const Dataset& data, std::size_t i) {
  if (data.size() < 2) throw std::invalid_argument("loo_fit: need at least 2 rows");
  return fit_ols_pinv(data.without_row(i));
}

LinearModel one_step_update(const LinearModel& base, int base_size,
                            const std::vector<DataPoint>& added, const OneStepConfig& cfg) {
  cfg.validate();
  if (added.empty() || added.size() > 2) {
    throw std::invalid_argument("one_step_update: expected exactly 1 or 2 added points");
  }
  if (base_size < 0) throw std::invalid_argument("one_step_update: negative base size");
  const double denom = static_cast<double>(base_size) + static_cast<double>(added.size());
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(base.beta.size());
  for (const DataPoint& z : added) {
    grad += z.x * (z.y - base.predict(z.x));
  }
  return LinearModel{base.beta + (cfg.eta / denom) * grad};
}

TrialData generate_trial(const SimConfig& cfg, int trial_index) {
  cfg.validate();
  rng::Stream stream(rng::derive_seed(cfg.master_seed,
                                      {rng::kStreamTrialData, static_cast<std::uint64_t>(trial_index),
                                       static_cast<std::uint64_t>(cfg.n),
                                       static_cast<std::uint64_t>(cfg.p)}));

  Eigen::VectorXd beta_star(cfg.p);
  for (int j = 0; j < cfg.p; ++j) beta_star(j) = stream.normal();
  const double norm = beta_star.norm();
  if (norm > 0.0 && cfg.beta_star_norm > 0.0) {
    beta_star *= cfg.beta_star_norm / norm;
  } else {
    beta_star.setZero();
  }

  Eigen::MatrixXd X(cfg.n, cfg.p);
  for (int i = 0; i < cfg.n; ++i) {
    for (int j = 0; j < cfg.p; ++j) X(i, j) = stream.normal();
  }
  Eigen::VectorXd y = X * beta_star;
  for (int i = 0; i < cfg.n; ++i) y(i) += cfg.noise_sd * stream.normal();

  DataPoint test;
  test.x.resize(cfg.p);
  for (int j = 0; j < cfg.p; ++j) test.x(j) = stream.normal();
  test.y = test.x.dot(beta_star) + cfg.noise_sd * stream.normal();

  return TrialData{Dataset(std::move(X), std::move(y)), std::move(test), std::move(beta_star)};
}

}  // namespace tconf

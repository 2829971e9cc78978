#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <vector>

// Linear-model fitting for the simulation study: minimum-norm least squares
// via the SVD pseudoinverse, leave-one-out refits, the one/two-point
// gradient-step model updates, and the Gaussian data generator.

namespace tconf {

struct DataPoint {
  Eigen::VectorXd x;
  double y = 0.0;
};

class Dataset {
 public:
  Dataset() = default;
  Dataset(Eigen::MatrixXd X, Eigen::VectorXd y);

  static Dataset from_points(const std::vector<DataPoint>& points);

  std::size_t size() const { return static_cast<std::size_t>(X_.rows()); }
  Eigen::Index dim() const { return X_.cols(); }
  const Eigen::MatrixXd& X() const { return X_; }
  const Eigen::VectorXd& y() const { return y_; }
  std::vector<double> responses() const;

  DataPoint row(std::size_t i) const;
  Dataset without_row(std::size_t i) const;
  Dataset with_point(const DataPoint& z) const;
  Dataset with_points(const DataPoint& z1, const DataPoint& z2) const;
  Dataset with_response(std::size_t i, double new_y) const;

 private:
  void check_index(std::size_t i) const;
  Eigen::MatrixXd X_;
  Eigen::VectorXd y_;
};

// Coefficient vector of a no-intercept linear predictor.
struct LinearModel {
  Eigen::VectorXd beta;
  double predict(const Eigen::VectorXd& x) const;
};

struct OneStepConfig {
  double eta = 10.0;  // gradient step size
  void validate() const;
};

// Parameters of one synthetic experiment cell.
struct SimConfig {
  int n = 100;
  int p = 20;
  double alpha = 0.1;
  int trials = 100;
  double beta_star_norm = std::sqrt(10.0);
  double noise_sd = 1.0;
  std::uint64_t master_seed = 0;
  void validate() const;
};

// Thin-SVD factor of a fixed design matrix with small singular values zeroed,
// reusable across many response vectors (the fit is linear in the response).
class PinvFactor {
 public:
  explicit PinvFactor(const Eigen::MatrixXd& X, double rtol = 1e-10);

  // Minimum-norm least-squares solution for the response vector y.
  Eigen::VectorXd solve(const Eigen::VectorXd& y) const;

  // Explicit p x n pseudoinverse.
  Eigen::MatrixXd pseudoinverse() const;

  Eigen::Index rank() const { return rank_; }

 private:
  Eigen::MatrixXd U_, V_;
  Eigen::VectorXd inv_sigma_;
  Eigen::Index rank_ = 0;
};

// Least squares via the Moore-Penrose pseudoinverse; returns the minimum-norm
// solution when the design is rank-deficient or underdetermined.
LinearModel fit_ols_pinv(const Dataset& data);

// Refit with row i removed (recomputed from scratch; no downdating).
LinearModel loo_fit(const Dataset& data, std::size_t i);

// One gradient-descent step on the squared-error loss from the fitted base
// model, adding one or two points. `base_size` is the number of rows the base
// model was trained on; the step divides by base_size + added.size().
LinearModel one_step_update(const LinearModel& base, int base_size,
                            const std::vector<DataPoint>& added, const OneStepConfig& cfg);

struct TrialData {
  Dataset train;
  DataPoint test;
  Eigen::VectorXd beta_star;
};

// Deterministic per (cfg.master_seed, trial_index): X rows i.i.d. N(0, I_p),
// beta_star uniform on the sphere of radius cfg.beta_star_norm, responses
// X beta_star + N(0, noise_sd^2) noise, one test point from the same law.
TrialData generate_trial(const SimConfig& cfg, int trial_index);

}  // namespace tconf

#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <vector>

#include "tconf/models.hpp"

// Conjugate Gaussian linear-model posterior, Monte Carlo posterior-predictive
// scores evaluated in log space, and the shared rejection-sampling shortcut
// that realizes all n leave-one-out posteriors from one proposal stream.

namespace tconf {

struct GaussianPrior {
  Eigen::VectorXd mu0;
  Eigen::MatrixXd Sigma0;
  double sigma_lik = 1.0;

  // Prior used by the synthetic experiments: mu0 = 10*1_p, Sigma0 = I_p,
  // unit likelihood noise.
  static GaussianPrior simulation_default(int p);

  void validate() const;
};

struct GaussianPosterior {
  Eigen::VectorXd mu_n;
  Eigen::MatrixXd Sigma_n;
  Eigen::MatrixXd chol;  // lower-triangular, Sigma_n = chol * chol^T
};

struct PosteriorDraws {
  std::vector<Eigen::VectorXd> thetas;
  std::uint64_t seed = 0;

  int count() const { return static_cast<int>(thetas.size()); }
};

// Per-row positive lower bounds c(z) <= inf_theta f_theta(y|x) over the
// proposal support; violations at any proposed theta are hard errors.
struct LikelihoodFloor {
  Eigen::VectorXd c;
  void validate() const;
};

// Closed-form conjugate update. An empty dataset returns the prior itself.
GaussianPosterior conjugate_posterior(const GaussianPrior& prior, const Dataset& data);

// Leave-one-out posterior computed from the full-data Gram matrix and
// cross-moment, avoiding the O(n p^2) Gram rebuild per index. Matches
// conjugate_posterior(prior, data.without_row(i)) up to floating-point noise.
GaussianPosterior conjugate_posterior_loo(const GaussianPrior& prior, const Eigen::MatrixXd& gram,
                                          const Eigen::VectorXd& xty, const Eigen::VectorXd& x_i,
                                          double y_i);

// theta_k = mu_n + chol * g_k with g_k standard normal from the seeded stream.
PosteriorDraws sample_posterior(const GaussianPosterior& post, int K, std::uint64_t seed);

double gaussian_log_density(double y, double mean, double sd);

// Two-slot Monte Carlo PPD score: -sum_k f(y|x) f(y'|x'), summed via
// max-shift log-sum-exp. Always <= 0.
double ppd_score_two(const PosteriorDraws& draws, const DataPoint& z, const DataPoint& z_prime,
                     double sigma_lik);

// Three-slot variant with the product of three densities; exactly symmetric
// in z_prime and z_dprime.
double ppd_score_three(const PosteriorDraws& draws, const DataPoint& z, const DataPoint& z_prime,
                       const DataPoint& z_dprime, double sigma_lik);

// Plain Monte Carlo PPD score -sum_k f(y|x); the exact-score counterpart the
// two-slot approximation targets when the conditioning set is refit in full.
double ppd_score_single(const PosteriorDraws& draws, const DataPoint& z, double sigma_lik);

struct RejectionDiagnostics {
  std::vector<long> proposals_seen;     // proposals offered to index i while it was unfinished
  std::vector<double> acceptance_rate;  // K / proposals_seen[i]
  long total_proposals = 0;
};

struct LooDrawsResult {
  std::vector<PosteriorDraws> per_index;
  RejectionDiagnostics diagnostics;
};

// Generic shared-stream rejection core. `next_proposal` yields the shared
// proposal stream; `log_lik(theta, i)` evaluates log f_theta(y_i | x_i);
// log_floor(i) = log c(z_i). Each index i keeps its own uniform stream,
// derived from `master_seed`, advanced only while index i is unfinished.
LooDrawsResult shared_rejection_core(int n_indices, int K,
                                     const std::function<Eigen::VectorXd()>& next_proposal,
                                     const std::function<double(const Eigen::VectorXd&, int)>& log_lik,
                                     const Eigen::VectorXd& log_floor, std::uint64_t master_seed,
                                     long max_proposals);

// Gaussian-likelihood instantiation: proposals are drawn from the full-data
// posterior restricted to the radius-`region_radius` standardized ball (the
// Gaussian likelihood has no global positive lower bound, so the support is
// compactified and the floor is taken over that region).
LooDrawsResult shared_rejection_loo_draws(const Dataset& full_data, const GaussianPrior& prior,
                                          int K, const LikelihoodFloor& floor, std::uint64_t seed,
                                          long max_proposals, double region_radius = 6.0);

// Floor values for the Gaussian likelihood over the truncated proposal
// region: the density at the in-region parameter predicting farthest from y.
LikelihoodFloor gaussian_region_floor(const GaussianPosterior& post, const Dataset& data,
                                      double sigma_lik, double region_radius = 6.0);

// Two-sample energy distance statistic and its permutation p-value; used to
// validate the rejection sampler against the closed-form posterior.
double energy_distance(const std::vector<Eigen::VectorXd>& a, const std::vector<Eigen::VectorXd>& b);
double energy_distance_pvalue(const std::vector<Eigen::VectorXd>& a,
                              const std::vector<Eigen::VectorXd>& b, int permutations,
                              std::uint64_t seed);

}  // namespace tconf

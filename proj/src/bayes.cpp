#include "tconf/bayes.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "tconf/core.hpp"
#include "tconf/rng.hpp"

namespace tconf {
namespace {

constexpr double kLogTwoPi = 1.8378770664093454835606594728112;

// log(sum_k exp(v_k)) with the usual max shift.
double log_sum_exp(const std::vector<double>& v) {
  double m = -kInf;
  for (double x : v) m = std::max(m, x);
  if (!std::isfinite(m)) return m;  // all -inf
  double acc = 0.0;
  for (double x : v) acc += std::exp(x - m);
  return m + std::log(acc);
}

Eigen::MatrixXd lower_cholesky(const Eigen::MatrixXd& A, const char* what) {
  Eigen::LLT<Eigen::MatrixXd> llt(A);
  if (llt.info() != Eigen::Success) {
    std::ostringstream msg;
    msg << what << ": Cholesky factorization failed (matrix not positive definite); "
        << "consider adding diagonal jitter";
    throw std::runtime_error(msg.str());
  }
  return llt.matrixL();
}

}  // namespace

GaussianPrior GaussianPrior::simulation_default(int p) {
  GaussianPrior prior;
  prior.mu0 = Eigen::VectorXd::Constant(p, 10.0);
  prior.Sigma0 = Eigen::MatrixXd::Identity(p, p);
  prior.sigma_lik = 1.0;
  return prior;
}

void GaussianPrior::validate() const {
  if (mu0.size() == 0) throw std::invalid_argument("GaussianPrior: empty mean");
  if (Sigma0.rows() != mu0.size() || Sigma0.cols() != mu0.size()) {
    throw std::invalid_argument("GaussianPrior: Sigma0 dimension mismatch");
  }
  if (!(sigma_lik > 0.0)) throw std::invalid_argument("GaussianPrior: sigma_lik must be positive");
  (void)lower_cholesky(Sigma0, "GaussianPrior::validate");
}

void LikelihoodFloor::validate() const {
  for (Eigen::Index i = 0; i < c.size(); ++i) {
    if (!(c(i) > 0.0)) throw std::invalid_argument("LikelihoodFloor: c(z) must be positive");
  }
}

namespace {

GaussianPosterior posterior_from_precision(const Eigen::MatrixXd& precision,
                                           const Eigen::VectorXd& rhs) {
  const Eigen::Index p = precision.rows();
  Eigen::LLT<Eigen::MatrixXd> llt(precision);
  if (llt.info() != Eigen::Success) {
    throw std::runtime_error(
        "conjugate_posterior: precision matrix is not positive definite; "
        "consider adding diagonal jitter to Sigma0");
  }
  GaussianPosterior post;
  post.mu_n = llt.solve(rhs);
  post.Sigma_n = llt.solve(Eigen::MatrixXd::Identity(p, p));
  // Symmetrize before factoring; the solve leaves ~1e-16 asymmetry behind.
  post.Sigma_n = 0.5 * (post.Sigma_n + post.Sigma_n.transpose()).eval();
  post.chol = lower_cholesky(post.Sigma_n, "conjugate_posterior");
  return post;
}

}  // namespace

GaussianPosterior conjugate_posterior(const GaussianPrior& prior, const Dataset& data) {
  prior.validate();
  const Eigen::Index p = prior.mu0.size();
  if (data.size() == 0) {
    GaussianPosterior post;
    post.mu_n = prior.mu0;
    post.Sigma_n = prior.Sigma0;
    post.chol = lower_cholesky(prior.Sigma0, "conjugate_posterior");
    return post;
  }
  if (data.dim() != p) throw std::invalid_argument("conjugate_posterior: dimension mismatch");
  const double inv_var = 1.0 / (prior.sigma_lik * prior.sigma_lik);
  Eigen::LLT<Eigen::MatrixXd> prior_llt(prior.Sigma0);
  const Eigen::MatrixXd prior_precision = prior_llt.solve(Eigen::MatrixXd::Identity(p, p));
  const Eigen::MatrixXd precision = prior_precision + inv_var * (data.X().transpose() * data.X());
  const Eigen::VectorXd rhs =
      prior_precision * prior.mu0 + inv_var * (data.X().transpose() * data.y());
  return posterior_from_precision(precision, rhs);
}

GaussianPosterior conjugate_posterior_loo(const GaussianPrior& prior, const Eigen::MatrixXd& gram,
                                          const Eigen::VectorXd& xty, const Eigen::VectorXd& x_i,
                                          double y_i) {
  prior.validate();
  const Eigen::Index p = prior.mu0.size();
  const double inv_var = 1.0 / (prior.sigma_lik * prior.sigma_lik);
  Eigen::LLT<Eigen::MatrixXd> prior_llt(prior.Sigma0);
  const Eigen::MatrixXd prior_precision = prior_llt.solve(Eigen::MatrixXd::Identity(p, p));
  const Eigen::MatrixXd precision =
      prior_precision + inv_var * (gram - x_i * x_i.transpose());
  const Eigen::VectorXd rhs = prior_precision * prior.mu0 + inv_var * (xty - x_i * y_i);
  return posterior_from_precision(precision, rhs);
}

PosteriorDraws sample_posterior(const GaussianPosterior& post, int K, std::uint64_t seed) {
  if (K < 1) throw std::invalid_argument("sample_posterior: K must be >= 1");
  rng::Stream stream(seed);
  const Eigen::Index p = post.mu_n.size();
  PosteriorDraws draws;
  draws.seed = seed;
  draws.thetas.reserve(static_cast<std::size_t>(K));
  Eigen::VectorXd g(p);
  for (int k = 0; k < K; ++k) {
    for (Eigen::Index j = 0; j < p; ++j) g(j) = stream.normal();
    draws.thetas.push_back(post.mu_n + post.chol * g);
  }
  return draws;
}

double gaussian_log_density(double y, double mean, double sd) {
  const double z = (y - mean) / sd;
  return -0.5 * kLogTwoPi - std::log(sd) - 0.5 * z * z;
}

double ppd_score_two(const PosteriorDraws& draws, const DataPoint& z, const DataPoint& z_prime,
                     double sigma_lik) {
  if (draws.thetas.empty()) throw std::invalid_argument("ppd_score_two: no posterior draws");
  std::vector<double> terms;
  terms.reserve(draws.thetas.size());
  for (const Eigen::VectorXd& theta : draws.thetas) {
    terms.push_back(gaussian_log_density(z.y, z.x.dot(theta), sigma_lik) +
                    gaussian_log_density(z_prime.y, z_prime.x.dot(theta), sigma_lik));
  }
  return -std::exp(log_sum_exp(terms));
}

double ppd_score_three(const PosteriorDraws& draws, const DataPoint& z, const DataPoint& z_prime,
                       const DataPoint& z_dprime, double sigma_lik) {
  if (draws.thetas.empty()) throw std::invalid_argument("ppd_score_three: no posterior draws");
  std::vector<double> terms;
  terms.reserve(draws.thetas.size());
  for (const Eigen::VectorXd& theta : draws.thetas) {
    terms.push_back(gaussian_log_density(z.y, z.x.dot(theta), sigma_lik) +
                    gaussian_log_density(z_prime.y, z_prime.x.dot(theta), sigma_lik) +
                    gaussian_log_density(z_dprime.y, z_dprime.x.dot(theta), sigma_lik));
  }
  return -std::exp(log_sum_exp(terms));
}

double ppd_score_single(const PosteriorDraws& draws, const DataPoint& z, double sigma_lik) {
  if (draws.thetas.empty()) throw std::invalid_argument("ppd_score_single: no posterior draws");
  std::vector<double> terms;
  terms.reserve(draws.thetas.size());
  for (const Eigen::VectorXd& theta : draws.thetas) {
    terms.push_back(gaussian_log_density(z.y, z.x.dot(theta), sigma_lik));
  }
  return -std::exp(log_sum_exp(terms));
}

LooDrawsResult shared_rejection_core(int n_indices, int K,
                                     const std::function<Eigen::VectorXd()>& next_proposal,
                                     const std::function<double(const Eigen::VectorXd&, int)>& log_lik,
                                     const Eigen::VectorXd& log_floor, std::uint64_t master_seed,
                                     long max_proposals) {
  if (n_indices < 1) throw std::invalid_argument("shared_rejection_core: need at least one index");
  if (K < 1) throw std::invalid_argument("shared_rejection_core: K must be >= 1");
  if (log_floor.size() != n_indices) {
    throw std::invalid_argument("shared_rejection_core: one floor value per index required");
  }

  LooDrawsResult result;
  result.per_index.resize(static_cast<std::size_t>(n_indices));
  result.diagnostics.proposals_seen.assign(static_cast<std::size_t>(n_indices), 0);
  std::vector<rng::Stream> uniform_streams;
  uniform_streams.reserve(static_cast<std::size_t>(n_indices));
  for (int i = 0; i < n_indices; ++i) {
    uniform_streams.emplace_back(
        rng::derive_seed(master_seed, {rng::kStreamAcceptV, static_cast<std::uint64_t>(i)}));
    result.per_index[static_cast<std::size_t>(i)].seed = master_seed;
    result.per_index[static_cast<std::size_t>(i)].thetas.reserve(static_cast<std::size_t>(K));
  }

  int unfinished = n_indices;
  long proposals = 0;
  while (unfinished > 0) {
    if (proposals >= max_proposals) {
      std::ostringstream msg;
      msg << "shared_rejection_loo_draws: proposal budget (" << max_proposals
          << ") exhausted; accepted counts:";
      for (int i = 0; i < n_indices; ++i) {
        msg << " k[" << i << "]=" << result.per_index[static_cast<std::size_t>(i)].count();
      }
      throw std::runtime_error(msg.str());
    }
    const Eigen::VectorXd theta = next_proposal();
    ++proposals;
    for (int i = 0; i < n_indices; ++i) {
      PosteriorDraws& draws = result.per_index[static_cast<std::size_t>(i)];
      if (draws.count() >= K) continue;
      ++result.diagnostics.proposals_seen[static_cast<std::size_t>(i)];
      const double log_ratio = log_floor(i) - log_lik(theta, i);
      if (log_ratio > 1e-12) {
        std::ostringstream msg;
        msg << "shared_rejection_loo_draws: likelihood floor violated at index " << i
            << " (log c - log f = " << log_ratio << ", theta[0] = " << theta(0) << ")";
        throw std::runtime_error(msg.str());
      }
      const double v = uniform_streams[static_cast<std::size_t>(i)].uniform_pos();
      if (std::log(v) <= log_ratio) {
        draws.thetas.push_back(theta);
        if (draws.count() == K) --unfinished;
      }
    }
  }

  result.diagnostics.total_proposals = proposals;
  result.diagnostics.acceptance_rate.resize(static_cast<std::size_t>(n_indices));
  for (int i = 0; i < n_indices; ++i) {
    result.diagnostics.acceptance_rate[static_cast<std::size_t>(i)] =
        static_cast<double>(K) /
        static_cast<double>(result.diagnostics.proposals_seen[static_cast<std::size_t>(i)]);
  }
  return result;
}

LikelihoodFloor gaussian_region_floor(const GaussianPosterior& post, const Dataset& data,
                                      double sigma_lik, double region_radius) {
  LikelihoodFloor floor;
  floor.c.resize(static_cast<Eigen::Index>(data.size()));
  for (std::size_t i = 0; i < data.size(); ++i) {
    const DataPoint z = data.row(i);
    // Worst in-region prediction error: |y - x'mu| plus the largest shift an
    // in-region parameter can produce, radius * ||chol^T x||.
    const double worst =
        std::abs(z.y - z.x.dot(post.mu_n)) + region_radius * (post.chol.transpose() * z.x).norm();
    floor.c(static_cast<Eigen::Index>(i)) =
        std::exp(gaussian_log_density(worst, 0.0, sigma_lik));
  }
  floor.validate();
  return floor;
}

LooDrawsResult shared_rejection_loo_draws(const Dataset& full_data, const GaussianPrior& prior,
                                          int K, const LikelihoodFloor& floor, std::uint64_t seed,
                                          long max_proposals, double region_radius) {
  if (full_data.size() == 0) {
    throw std::invalid_argument("shared_rejection_loo_draws: empty dataset");
  }
  floor.validate();
  if (floor.c.size() != static_cast<Eigen::Index>(full_data.size())) {
    throw std::invalid_argument("shared_rejection_loo_draws: one floor value per data row required");
  }
  const GaussianPosterior post = conjugate_posterior(prior, full_data);
  const Eigen::Index p = post.mu_n.size();

  rng::Stream proposal_stream(rng::derive_seed(seed, {rng::kStreamProposal}));
  auto next_proposal = [&]() {
    // Proposals from the full-data posterior truncated to the standardized
    // ball of radius region_radius (the region the floor was computed over).
    Eigen::VectorXd g(p);
    for (;;) {
      for (Eigen::Index j = 0; j < p; ++j) g(j) = proposal_stream.normal();
      if (g.norm() <= region_radius) return (post.mu_n + post.chol * g).eval();
    }
  };
  auto log_lik = [&](const Eigen::VectorXd& theta, int i) {
    const DataPoint z = full_data.row(static_cast<std::size_t>(i));
    return gaussian_log_density(z.y, z.x.dot(theta), prior.sigma_lik);
  };
  Eigen::VectorXd log_floor = floor.c.array().log();
  return shared_rejection_core(static_cast<int>(full_data.size()), K, next_proposal, log_lik,
                               log_floor, seed, max_proposals);
}

namespace {

double mean_cross_distance(const std::vector<const Eigen::VectorXd*>& a,
                           const std::vector<const Eigen::VectorXd*>& b) {
  double acc = 0.0;
  for (const auto* x : a) {
    for (const auto* y : b) acc += (*x - *y).norm();
  }
  return acc / (static_cast<double>(a.size()) * static_cast<double>(b.size()));
}

double energy_statistic(const std::vector<const Eigen::VectorXd*>& a,
                        const std::vector<const Eigen::VectorXd*>& b) {
  double within_a = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = i + 1; j < a.size(); ++j) within_a += (*a[i] - *a[j]).norm();
  }
  within_a = 2.0 * within_a / (static_cast<double>(a.size()) * static_cast<double>(a.size()));
  double within_b = 0.0;
  for (std::size_t i = 0; i < b.size(); ++i) {
    for (std::size_t j = i + 1; j < b.size(); ++j) within_b += (*b[i] - *b[j]).norm();
  }
  within_b = 2.0 * within_b / (static_cast<double>(b.size()) * static_cast<double>(b.size()));
  return 2.0 * mean_cross_distance(a, b) - within_a - within_b;
}

}  // namespace

double energy_distance(const std::vector<Eigen::VectorXd>& a, const std::vector<Eigen::VectorXd>& b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("energy_distance: empty sample");
  std::vector<const Eigen::VectorXd*> pa, pb;
  pa.reserve(a.size());
  pb.reserve(b.size());
  for (const auto& v : a) pa.push_back(&v);
  for (const auto& v : b) pb.push_back(&v);
  return energy_statistic(pa, pb);
}

double energy_distance_pvalue(const std::vector<Eigen::VectorXd>& a,
                              const std::vector<Eigen::VectorXd>& b, int permutations,
                              std::uint64_t seed) {
  if (permutations < 1) throw std::invalid_argument("energy_distance_pvalue: need permutations >= 1");
  std::vector<const Eigen::VectorXd*> pooled;
  pooled.reserve(a.size() + b.size());
  for (const auto& v : a) pooled.push_back(&v);
  for (const auto& v : b) pooled.push_back(&v);
  const std::size_t na = a.size();

  std::vector<const Eigen::VectorXd*> pa(pooled.begin(), pooled.begin() + static_cast<long>(na));
  std::vector<const Eigen::VectorXd*> pb(pooled.begin() + static_cast<long>(na), pooled.end());
  const double observed = energy_statistic(pa, pb);

  rng::Stream stream(seed);
  int at_least = 0;
  for (int r = 0; r < permutations; ++r) {
    // Fisher-Yates over the pooled pointers.
    for (std::size_t k = pooled.size() - 1; k > 0; --k) {
      const std::size_t j = static_cast<std::size_t>(stream.uniform_below(k + 1));
      std::swap(pooled[k], pooled[j]);
    }
    pa.assign(pooled.begin(), pooled.begin() + static_cast<long>(na));
    pb.assign(pooled.begin() + static_cast<long>(na), pooled.end());
    if (energy_statistic(pa, pb) >= observed) ++at_least;
  }
  return (1.0 + at_least) / (1.0 + permutations);
}

}  // namespace tconf

#include "tconf/stability.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "tconf/parallel.hpp"
#include "tconf/rng.hpp"

namespace tconf {

const char* condition_tag(StabilityCondition condition) {
  switch (condition) {
    case StabilityCondition::tournament: return "tournament";
    case StabilityCondition::approx_test: return "approx-test";
    case StabilityCondition::approx_train: return "approx-train";
  }
  return "?";
}

ScoreFamily instantiate_family(const FamilyPreset& preset, const Dataset& train,
                               std::uint64_t family_seed) {
  switch (preset.kind) {
    case FamilyKind::deletion:
      return ScoreFamily::deletion();
    case FamilyKind::rounding:
      return ScoreFamily::rounding(build_rounding_grid(train.responses(), preset.grid_M,
                                                       preset.grid_pad));
    case FamilyKind::one_step:
      return ScoreFamily::one_step(preset.one_step);
    case FamilyKind::bayes_ppd: {
      BayesFamilyParams params;
      params.prior = GaussianPrior::simulation_default(static_cast<int>(train.dim()));
      params.K = preset.bayes_K;
      params.seed = family_seed;
      return ScoreFamily::bayes_ppd(std::move(params));
    }
  }
  throw std::logic_error("instantiate_family: unknown family kind");
}

double StabilityCurve::epsilon_at(double nu) const {
  if (nu < 0.0 || nu > 1.0) throw std::invalid_argument("StabilityCurve: nu must lie in [0,1]");
  const double m = static_cast<double>(sorted_deltas.size());
  const int k = static_cast<int>(std::ceil((1.0 - nu) * m - 1e-9));
  if (k <= 0) return 0.0;
  return sorted_deltas[static_cast<std::size_t>(k - 1)];
}

StabilityCurve stability_curve(std::vector<double> deltas, StabilityCondition condition) {
  if (deltas.empty()) throw std::invalid_argument("stability_curve: empty delta list");
  for (double d : deltas) {
    if (!(d >= 0.0)) throw std::invalid_argument("stability_curve: deltas must be >= 0");
  }
  std::sort(deltas.begin(), deltas.end());
  return StabilityCurve{std::move(deltas), condition};
}

std::vector<double> tournament_deltas_for(const ScoreFamily& family, const Dataset& train,
                                          const DataPoint& test,
                                          const std::vector<std::size_t>& indices) {
  std::vector<double> deltas;
  deltas.reserve(indices.size());
  if (family.kind() == FamilyKind::bayes_ppd) {
    const BayesFamilyParams& params = family.bayes();
    const PosteriorDraws full_draws = sample_posterior(conjugate_posterior(params.prior, train),
                                                       params.K, params.seed_for_full());
    const double base = ppd_score_two(full_draws, test, test, params.prior.sigma_lik);
    const Eigen::MatrixXd gram = train.X().transpose() * train.X();
    const Eigen::VectorXd xty = train.X().transpose() * train.y();
    for (std::size_t i : indices) {
      const DataPoint z = train.row(i);
      const GaussianPosterior post = conjugate_posterior_loo(params.prior, gram, xty, z.x, z.y);
      const PosteriorDraws draws = sample_posterior(post, params.K, params.seed_for_index(i));
      const double corrected = ppd_score_three(draws, test, z, test, params.prior.sigma_lik);
      deltas.push_back(std::abs(corrected - base));
    }
    return deltas;
  }
  const double base = score_two_slot(family, test, train, test);
  for (std::size_t i : indices) {
    const double corrected =
        score_three_slot(family, test, train.without_row(i), train.row(i), test);
    deltas.push_back(std::abs(corrected - base));
  }
  return deltas;
}

std::pair<double, double> approx_deltas_for(const ScoreFamily& family, const Dataset& train,
                                            const DataPoint& test, std::size_t train_index) {
  const DataPoint z_i = train.row(train_index);
  if (family.kind() == FamilyKind::bayes_ppd) {
    const BayesFamilyParams& params = family.bayes();
    const PosteriorDraws full_draws = sample_posterior(conjugate_posterior(params.prior, train),
                                                       params.K, params.seed_for_full());
    const PosteriorDraws exact_draws = sample_posterior(
        conjugate_posterior(params.prior, train.with_point(test)), params.K,
        rng::derive_seed(params.seed, {rng::kStreamBayesExact}));
    const double sigma = params.prior.sigma_lik;
    const double test_delta = std::abs(ppd_score_two(full_draws, test, test, sigma) -
                                       ppd_score_single(exact_draws, test, sigma));
    const double train_delta = std::abs(ppd_score_two(full_draws, z_i, test, sigma) -
                                        ppd_score_single(exact_draws, z_i, sigma));
    return {test_delta, train_delta};
  }
  const LinearModel exact_model = fit_ols_pinv(train.with_point(test));
  const double test_delta =
      std::abs(score_two_slot(family, test, train, test) - residual_score(exact_model, test));
  const double train_delta =
      std::abs(score_two_slot(family, z_i, train, test) - residual_score(exact_model, z_i));
  return {test_delta, train_delta};
}

namespace {

std::vector<std::size_t> pick_indices(int n, int per_trial_indices, std::uint64_t seed) {
  std::vector<std::size_t> all(static_cast<std::size_t>(n));
  std::iota(all.begin(), all.end(), 0u);
  if (per_trial_indices <= 0 || per_trial_indices >= n) return all;
  // Partial Fisher-Yates: the first per_trial_indices slots form the sample.
  rng::Stream stream(seed);
  for (int k = 0; k < per_trial_indices; ++k) {
    const std::size_t j =
        static_cast<std::size_t>(k) +
        static_cast<std::size_t>(stream.uniform_below(static_cast<std::uint64_t>(n - k)));
    std::swap(all[static_cast<std::size_t>(k)], all[j]);
  }
  all.resize(static_cast<std::size_t>(per_trial_indices));
  std::sort(all.begin(), all.end());
  return all;
}

std::uint64_t family_seed_for(const SimConfig& cfg, int trial) {
  return rng::derive_seed(cfg.master_seed,
                          {rng::kStreamFamilySeed, static_cast<std::uint64_t>(trial),
                           static_cast<std::uint64_t>(cfg.p)});
}

}  // namespace

std::vector<double> stability_deltas_tournament(const FamilyPreset& preset, const SimConfig& cfg,
                                                int per_trial_indices, int workers) {
  cfg.validate();
  const int count = (per_trial_indices <= 0 || per_trial_indices >= cfg.n) ? cfg.n
                                                                           : per_trial_indices;
  std::vector<std::vector<double>> per_trial(static_cast<std::size_t>(cfg.trials));
  parallel_for_index(static_cast<std::size_t>(cfg.trials), workers, [&](std::size_t t) {
    const int trial = static_cast<int>(t);
    const TrialData data = generate_trial(cfg, trial);
    const ScoreFamily family = instantiate_family(preset, data.train, family_seed_for(cfg, trial));
    const std::vector<std::size_t> indices =
        pick_indices(cfg.n, per_trial_indices,
                     rng::derive_seed(cfg.master_seed, {rng::kStreamIndexSubsample,
                                                        static_cast<std::uint64_t>(trial)}));
    per_trial[t] = tournament_deltas_for(family, data.train, data.test, indices);
  });
  std::vector<double> deltas;
  deltas.reserve(static_cast<std::size_t>(cfg.trials) * static_cast<std::size_t>(count));
  for (const auto& chunk : per_trial) deltas.insert(deltas.end(), chunk.begin(), chunk.end());
  return deltas;
}

ApproxDeltas stability_deltas_approx(const FamilyPreset& preset, const SimConfig& cfg,
                                     int workers) {
  cfg.validate();
  ApproxDeltas out;
  out.test_point.resize(static_cast<std::size_t>(cfg.trials));
  out.train_point.resize(static_cast<std::size_t>(cfg.trials));
  parallel_for_index(static_cast<std::size_t>(cfg.trials), workers, [&](std::size_t t) {
    const int trial = static_cast<int>(t);
    const TrialData data = generate_trial(cfg, trial);
    const ScoreFamily family = instantiate_family(preset, data.train, family_seed_for(cfg, trial));
    rng::Stream index_stream(rng::derive_seed(
        cfg.master_seed, {rng::kStreamIndexSubsample, static_cast<std::uint64_t>(trial), 1}));
    const std::size_t i =
        static_cast<std::size_t>(index_stream.uniform_below(static_cast<std::uint64_t>(cfg.n)));
    const auto [test_delta, train_delta] = approx_deltas_for(family, data.train, data.test, i);
    out.test_point[t] = test_delta;
    out.train_point[t] = train_delta;
  });
  return out;
}

}  // namespace tconf

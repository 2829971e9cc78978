#include "tconf/scores.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "tconf/rng.hpp"

namespace tconf {

double RoundingGrid::round(double y) const {
  return points[static_cast<std::size_t>(cell_index(y))];
}

int RoundingGrid::cell_index(double y) const {
  // Number of boundaries strictly below y; a value exactly on a boundary
  // therefore lands in the lower cell.
  auto it = std::lower_bound(cell_boundaries.begin(), cell_boundaries.end(), y);
  return static_cast<int>(it - cell_boundaries.begin());
}

RoundingGrid build_rounding_grid(const std::vector<double>& train_y, int M, double pad_frac) {
  if (M < 2) throw std::invalid_argument("build_rounding_grid: M must be >= 2");
  if (train_y.empty()) throw std::invalid_argument("build_rounding_grid: empty response list");
  const auto [min_it, max_it] = std::minmax_element(train_y.begin(), train_y.end());
  const double range = *max_it - *min_it;
  if (!(range > 0.0)) throw std::invalid_argument("build_rounding_grid: degenerate response range");
  const double lo = *min_it - pad_frac * range;
  const double hi = *max_it + pad_frac * range;
  const double spacing = (hi - lo) / static_cast<double>(M - 1);
  RoundingGrid grid;
  grid.points.resize(static_cast<std::size_t>(M));
  for (int m = 0; m < M; ++m) grid.points[static_cast<std::size_t>(m)] = lo + spacing * m;
  grid.cell_boundaries.resize(static_cast<std::size_t>(M - 1));
  for (int m = 0; m + 1 < M; ++m) {
    grid.cell_boundaries[static_cast<std::size_t>(m)] =
        0.5 * (grid.points[static_cast<std::size_t>(m)] + grid.points[static_cast<std::size_t>(m + 1)]);
  }
  return grid;
}

std::uint64_t BayesFamilyParams::seed_for_index(std::size_t i) const {
  if (!loo_seeds.empty()) {
    if (i >= loo_seeds.size()) {
      throw std::out_of_range("BayesFamilyParams: loo seed index out of range");
    }
    return loo_seeds[i];
  }
  return rng::derive_seed(seed, {rng::kStreamBayesLoo, static_cast<std::uint64_t>(i)});
}

std::uint64_t BayesFamilyParams::seed_for_full() const {
  return rng::derive_seed(seed, {rng::kStreamBayesApprox});
}

ScoreFamily ScoreFamily::deletion() {
  ScoreFamily f(FamilyKind::deletion);
  return f;
}

ScoreFamily ScoreFamily::rounding(RoundingGrid grid) {
  ScoreFamily f(FamilyKind::rounding);
  f.params_ = std::move(grid);
  return f;
}

ScoreFamily ScoreFamily::one_step(OneStepConfig cfg) {
  cfg.validate();
  ScoreFamily f(FamilyKind::one_step);
  f.params_ = cfg;
  return f;
}

ScoreFamily ScoreFamily::bayes_ppd(BayesFamilyParams params) {
  params.prior.validate();
  if (params.K < 1) throw std::invalid_argument("ScoreFamily::bayes_ppd: K must be >= 1");
  ScoreFamily f(FamilyKind::bayes_ppd);
  f.params_ = std::move(params);
  return f;
}

const RoundingGrid& ScoreFamily::grid() const {
  if (kind_ != FamilyKind::rounding) throw std::logic_error("ScoreFamily: not a rounding family");
  return std::get<RoundingGrid>(params_);
}

const OneStepConfig& ScoreFamily::one_step_config() const {
  if (kind_ != FamilyKind::one_step) throw std::logic_error("ScoreFamily: not a one-step family");
  return std::get<OneStepConfig>(params_);
}

const BayesFamilyParams& ScoreFamily::bayes() const {
  if (kind_ != FamilyKind::bayes_ppd) throw std::logic_error("ScoreFamily: not a bayes family");
  return std::get<BayesFamilyParams>(params_);
}

const char* family_tag(FamilyKind kind) {
  switch (kind) {
    case FamilyKind::deletion: return "delete";
    case FamilyKind::rounding: return "round";
    case FamilyKind::one_step: return "onestep";
    case FamilyKind::bayes_ppd: return "bayes";
  }
  return "?";
}

double residual_score(const LinearModel& model, const DataPoint& z) {
  return std::abs(z.y - model.predict(z.x));
}

namespace {

// Canonical ordering of the two approximately-treated points; scoring with
// {z', z''} must be bit-identical to scoring with {z'', z'}.
bool point_less(const DataPoint& a, const DataPoint& b) {
  if (a.y != b.y) return a.y < b.y;
  for (Eigen::Index j = 0; j < std::min(a.x.size(), b.x.size()); ++j) {
    if (a.x(j) != b.x(j)) return a.x(j) < b.x(j);
  }
  return a.x.size() < b.x.size();
}

}  // namespace

double score_two_slot(const ScoreFamily& family, const DataPoint& z, const Dataset& base,
                      const DataPoint& z_prime) {
  switch (family.kind()) {
    case FamilyKind::deletion:
      return residual_score(fit_ols_pinv(base), z);
    case FamilyKind::rounding: {
      const DataPoint rounded{z_prime.x, family.grid().round(z_prime.y)};
      return residual_score(fit_ols_pinv(base.with_point(rounded)), z);
    }
    case FamilyKind::one_step: {
      const LinearModel fitted = fit_ols_pinv(base);
      const LinearModel updated =
          one_step_update(fitted, static_cast<int>(base.size()), {z_prime}, family.one_step_config());
      return residual_score(updated, z);
    }
    case FamilyKind::bayes_ppd:
      throw std::invalid_argument(
          "score_two_slot: bayes-ppd scores are randomized and are computed via the bayes module");
  }
  throw std::logic_error("score_two_slot: unknown family");
}

double score_three_slot(const ScoreFamily& family, const DataPoint& z, const Dataset& base,
                        const DataPoint& z_prime, const DataPoint& z_dprime) {
  switch (family.kind()) {
    case FamilyKind::deletion:
      return residual_score(fit_ols_pinv(base), z);
    case FamilyKind::rounding: {
      DataPoint r1{z_prime.x, family.grid().round(z_prime.y)};
      DataPoint r2{z_dprime.x, family.grid().round(z_dprime.y)};
      if (point_less(r2, r1)) std::swap(r1, r2);
      return residual_score(fit_ols_pinv(base.with_points(r1, r2)), z);
    }
    case FamilyKind::one_step: {
      const LinearModel fitted = fit_ols_pinv(base);
      std::vector<DataPoint> added{z_prime, z_dprime};
      if (point_less(added[1], added[0])) std::swap(added[0], added[1]);
      const LinearModel updated = one_step_update(fitted, static_cast<int>(base.size()), added,
                                                  family.one_step_config());
      return residual_score(updated, z);
    }
    case FamilyKind::bayes_ppd:
      throw std::invalid_argument(
          "score_three_slot: bayes-ppd scores are randomized and are computed via the bayes module");
  }
  throw std::logic_error("score_three_slot: unknown family");
}

}  // namespace tconf

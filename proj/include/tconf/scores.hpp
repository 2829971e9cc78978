#pragma once

#include <cstdint>
#include <variant>
#include <vector>

#include "tconf/bayes.hpp"
#include "tconf/models.hpp"

// The unified approximate-score abstraction: two-slot scores treat one added
// point approximately, three-slot scores treat two. Deletion, rounding and
// one-step families live here; the Bayesian PPD family is evaluated through
// the bayes module because its score is randomized.

namespace tconf {

// Equally spaced response grid with Voronoi rounding; midpoints round down
// and values outside the padded range clamp to the nearest extreme point.
struct RoundingGrid {
  std::vector<double> points;
  std::vector<double> cell_boundaries;  // midpoints of adjacent grid points

  double round(double y) const;
  // Index of the Voronoi cell containing y (ties go to the lower cell).
  int cell_index(double y) const;
  int size() const { return static_cast<int>(points.size()); }
};

// Grid of M points from min(train_y) - pad_frac*range to
// max(train_y) + pad_frac*range. Throws on a degenerate response range.
RoundingGrid build_rounding_grid(const std::vector<double>& train_y, int M, double pad_frac);

enum class FamilyKind { deletion, rounding, one_step, bayes_ppd };

struct BayesFamilyParams {
  GaussianPrior prior;
  int K = 100;
  std::uint64_t seed = 0;
  // Optional explicit per-training-index seeds for the leave-one-out draws;
  // when empty they are derived from `seed` by index.
  std::vector<std::uint64_t> loo_seeds;

  std::uint64_t seed_for_index(std::size_t i) const;
  std::uint64_t seed_for_full() const;
};

// Immutable after construction; evaluation is pure.
class ScoreFamily {
 public:
  ScoreFamily() : kind_(FamilyKind::deletion) {}

  static ScoreFamily deletion();
  static ScoreFamily rounding(RoundingGrid grid);
  static ScoreFamily one_step(OneStepConfig cfg);
  static ScoreFamily bayes_ppd(BayesFamilyParams params);

  FamilyKind kind() const { return kind_; }
  const RoundingGrid& grid() const;
  const OneStepConfig& one_step_config() const;
  const BayesFamilyParams& bayes() const;

 private:
  explicit ScoreFamily(FamilyKind kind) : kind_(kind) {}
  FamilyKind kind_;
  std::variant<std::monostate, RoundingGrid, OneStepConfig, BayesFamilyParams> params_;
};

const char* family_tag(FamilyKind kind);

// Absolute residual |y - x' beta|.
double residual_score(const LinearModel& model, const DataPoint& z);

// Score of z against `base` plus one approximately-treated point z_prime.
// Deletion ignores z_prime, rounding refits with the rounded response,
// one-step applies the gradient update. Throws for the bayes family.
double score_two_slot(const ScoreFamily& family, const DataPoint& z, const Dataset& base,
                      const DataPoint& z_prime);

// Score of z against `base` plus two approximately-treated points; exactly
// symmetric under swapping z_prime and z_dprime.
double score_three_slot(const ScoreFamily& family, const DataPoint& z, const Dataset& base,
                        const DataPoint& z_prime, const DataPoint& z_dprime);

}  // namespace tconf

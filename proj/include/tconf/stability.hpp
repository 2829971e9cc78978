#pragma once

#include <utility>
#include <vector>

#include "tconf/scores.hpp"

// Empirical (nu, epsilon) stability curves: the score perturbation from
// changing how a single training point enters the fit (the tournament
// condition), and the two stronger conditions the uncorrected approximation
// would need (agreement with the exact refit score at the test point and at a
// training point).

namespace tconf {

enum class StabilityCondition { tournament, approx_test, approx_train };

const char* condition_tag(StabilityCondition condition);

// Per-trial family construction: the rounding grid is rebuilt from each
// trial's responses and the Bayesian draw seeds are derived per trial.
struct FamilyPreset {
  FamilyKind kind = FamilyKind::deletion;
  int grid_M = 10;
  double grid_pad = 0.02;
  OneStepConfig one_step{};
  int bayes_K = 100;
};

ScoreFamily instantiate_family(const FamilyPreset& preset, const Dataset& train,
                               std::uint64_t family_seed);

struct StabilityCurve {
  std::vector<double> sorted_deltas;  // ascending
  StabilityCondition condition = StabilityCondition::tournament;

  // Smallest epsilon such that a (1-nu) fraction of the observed deltas is at
  // most epsilon; equals max at nu = 0 and 0 by convention at nu = 1.
  double epsilon_at(double nu) const;
};

StabilityCurve stability_curve(std::vector<double> deltas, StabilityCondition condition);

// |three-slot score of the test point with index i re-added approximately
//  minus its two-slot score with all training points kept| for each index.
std::vector<double> tournament_deltas_for(const ScoreFamily& family, const Dataset& train,
                                          const DataPoint& test,
                                          const std::vector<std::size_t>& indices);

// (test-point delta, train-point delta) against the exact refit score on the
// full n+1 points for one training index.
std::pair<double, double> approx_deltas_for(const ScoreFamily& family, const Dataset& train,
                                            const DataPoint& test, std::size_t train_index);

// Simulation wrappers: one delta per (trial, sampled index). A non-positive
// `per_trial_indices` uses every index.
std::vector<double> stability_deltas_tournament(const FamilyPreset& preset, const SimConfig& cfg,
                                                int per_trial_indices, int workers = 1);

struct ApproxDeltas {
  std::vector<double> test_point;
  std::vector<double> train_point;
};

// One test-point delta and one train-point delta (random index) per trial.
ApproxDeltas stability_deltas_approx(const FamilyPreset& preset, const SimConfig& cfg,
                                     int workers = 1);

}  // namespace tconf

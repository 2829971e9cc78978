#pragma once

#include <functional>
#include <memory>
#include <optional>

#include "tconf/core.hpp"
#include "tconf/scores.hpp"

// Prediction-set engines: the approximate sets, their tournament-corrected
// variants, the 2-epsilon inflated forms of both, and split conformal.
// Linear families are computed exactly from per-game breakpoints; the
// rounding family per grid cell; the Bayesian family by membership plus an
// adaptive endpoint search.

namespace tconf {

enum class Variant { approximate, tournament };

enum class Evaluator { exact_breakpoints, grid_cells, adaptive_search };

const char* variant_tag(Variant v);
Evaluator default_evaluator(FamilyKind kind);

struct EngineSpec {
  ScoreFamily family;
  Variant variant = Variant::tournament;
  double inflation_epsilon = 0.0;
  Evaluator evaluator = Evaluator::exact_breakpoints;
  ConformalConfig config;

  void validate() const;
};

// Per-(data, x_new) engine state: fits, posterior draws and game coefficients
// are prepared once, after which membership queries and set construction are
// pure. A candidate y is accepted when the number of games the test point
// wins by more than 2*inflation_epsilon stays below (1-alpha)(n+1).
class Engine {
 public:
  Engine(EngineSpec spec, const Dataset& data, const Eigen::VectorXd& x_new);
  ~Engine();
  Engine(Engine&&) noexcept;
  Engine& operator=(Engine&&) noexcept;

  const EngineSpec& spec() const;

  // Number of games won by the test point at candidate response y.
  int win_count(double y) const;

  // The acceptance condition evaluated directly at y; never goes through the
  // materialized set.
  bool contains(double y) const;

  // Exact union of closed intervals for the linear and rounding families;
  // the adaptive-search interval estimate for the Bayesian family.
  PredictionSet set() const;

  struct Impl;

 private:
  std::unique_ptr<Impl> impl_;
};

// Split conformal: a single interval centered at the trained model's
// prediction with the calibration-quantile half-width.
PredictionSet split_conformal_set(const Dataset& train_half, const Dataset& cal_half,
                                  const Eigen::VectorXd& x_new, double alpha);

// Convenience wrappers over Engine matching the two set definitions; the
// spec's variant must agree with the function called.
PredictionSet approx_set(const EngineSpec& spec, const Dataset& data, const Eigen::VectorXd& x_new);
PredictionSet tournament_set(const EngineSpec& spec, const Dataset& data,
                             const Eigen::VectorXd& x_new);

struct AdaptiveLengthResult {
  double length = 0.0;
  std::optional<Interval> endpoints;
};

// Endpoint search over [min(train_y) - 0.02R, max(train_y) + 0.02R]: coarse
// scan, then left/right endpoints refined by a shrink factor of 10 down to
// resolution 0.1. No accepted point on the range means length zero.
AdaptiveLengthResult adaptive_length(const std::function<bool(double)>& membership,
                                     const std::vector<double>& train_y);

// Membership of the true test response, evaluated via the engine's acceptance
// condition (never via the length grid).
bool coverage_check(const EngineSpec& spec, const Dataset& data, const DataPoint& test);

}  // namespace tconf

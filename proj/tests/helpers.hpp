#pragma once

// Shared fixtures and independent oracles for the test suites and the
// acceptance runner. Everything here deliberately avoids the engines' game
// machinery: scores go through the model objects and membership through plain
// counting, so these paths can serve as oracles for the exact evaluators.

#include <cmath>
#include <vector>

#include "tconf/engines.hpp"
#include "tconf/rng.hpp"
#include "tconf/scores.hpp"

namespace tconf::testing {

inline Dataset random_dataset(int n, int p, rng::Stream& stream, double beta_scale = 1.0,
                              double noise_sd = 1.0) {
  Eigen::VectorXd beta(p);
  for (int j = 0; j < p; ++j) beta(j) = beta_scale * stream.normal();
  Eigen::MatrixXd X(n, p);
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < p; ++j) X(i, j) = stream.normal();
    y(i) = X.row(i).dot(beta) + noise_sd * stream.normal();
  }
  return Dataset(std::move(X), std::move(y));
}

inline DataPoint random_point(int p, rng::Stream& stream) {
  DataPoint z{Eigen::VectorXd::Zero(p), stream.normal()};
  for (int j = 0; j < p; ++j) z.x(j) = stream.normal();
  return z;
}

inline EngineSpec make_spec(const ScoreFamily& family, Variant variant, double alpha, int n,
                            double inflation = 0.0) {
  return EngineSpec{family, variant, inflation, default_evaluator(family.kind()),
                    ConformalConfig{alpha, n}};
}

// Direct win count through the scores module: every probe refits the models
// involved. Slow but structurally independent of the engine evaluators.
inline int scores_module_win_count(const ScoreFamily& family, Variant variant, const Dataset& data,
                                   const Eigen::VectorXd& x_new, double y, double margin) {
  const DataPoint test{x_new, y};
  int wins = 0;
  if (variant == Variant::approximate) {
    const double s_test = score_two_slot(family, test, data, test);
    for (std::size_t i = 0; i < data.size(); ++i) {
      const double s_i = score_two_slot(family, data.row(i), data, test);
      wins += (s_test > s_i + margin) ? 1 : 0;
    }
    return wins;
  }
  for (std::size_t i = 0; i < data.size(); ++i) {
    const Dataset base = data.without_row(i);
    const DataPoint z_i = data.row(i);
    const double s_test = score_three_slot(family, test, base, z_i, test);
    const double s_i = score_three_slot(family, z_i, base, z_i, test);
    wins += (s_test > s_i + margin) ? 1 : 0;
  }
  return wins;
}

// Deletion/one-step membership oracle with the leave-one-out models fitted
// once; scores are evaluated through the model update objects rather than the
// engines' game coefficients.
class CachedLinearOracle {
 public:
  CachedLinearOracle(FamilyKind kind, Variant variant, const Dataset& data, Eigen::VectorXd x_new,
                     double eta, double alpha, double inflation = 0.0)
      : kind_(kind),
        variant_(variant),
        data_(data),
        x_new_(std::move(x_new)),
        eta_(eta),
        margin_(2.0 * inflation),
        cfg_{alpha, static_cast<int>(data.size())} {
    if (variant_ == Variant::approximate) {
      full_ = fit_ols_pinv(data_);
    } else {
      for (std::size_t i = 0; i < data_.size(); ++i) loo_.push_back(loo_fit(data_, i));
    }
  }

  int win_count(double y) const {
    const int n = static_cast<int>(data_.size());
    const DataPoint test{x_new_, y};
    int wins = 0;
    if (kind_ == FamilyKind::deletion) {
      if (variant_ == Variant::approximate) {
        const double s_test = std::abs(y - full_.predict(x_new_));
        for (std::size_t i = 0; i < data_.size(); ++i) {
          wins += (s_test > residual_score(full_, data_.row(i)) + margin_) ? 1 : 0;
        }
      } else {
        for (std::size_t i = 0; i < data_.size(); ++i) {
          const double s_test = std::abs(y - loo_[i].predict(x_new_));
          wins += (s_test > residual_score(loo_[i], data_.row(i)) + margin_) ? 1 : 0;
        }
      }
      return wins;
    }
    // one-step
    const OneStepConfig cfg{eta_};
    if (variant_ == Variant::approximate) {
      const LinearModel updated = one_step_update(full_, n, {test}, cfg);
      const double s_test = residual_score(updated, test);
      for (std::size_t i = 0; i < data_.size(); ++i) {
        wins += (s_test > residual_score(updated, data_.row(i)) + margin_) ? 1 : 0;
      }
      return wins;
    }
    for (std::size_t i = 0; i < data_.size(); ++i) {
      const DataPoint z_i = data_.row(i);
      const LinearModel updated = one_step_update(loo_[i], n - 1, {z_i, test}, cfg);
      const double s_test = residual_score(updated, test);
      wins += (s_test > residual_score(updated, z_i) + margin_) ? 1 : 0;
    }
    return wins;
  }

  bool accepted(double y) const { return tournament_accepts_count(win_count(y), cfg_); }

 private:
  FamilyKind kind_;
  Variant variant_;
  Dataset data_;
  Eigen::VectorXd x_new_;
  double eta_;
  double margin_;
  ConformalConfig cfg_;
  LinearModel full_;
  std::vector<LinearModel> loo_;
};

// Independently coded leave-one-out cross-conformal set: y is accepted when
// it lies in more than n - (1-alpha)(n+1) of the jackknife intervals
// [d_i - |r_i|, d_i + |r_i|]. Built by probing the elementary regions of the
// interval arrangement, with no shared code with the engines.
inline PredictionSet loo_cross_conformal(const Dataset& data, const Eigen::VectorXd& x_new,
                                         double alpha) {
  const int n = static_cast<int>(data.size());
  std::vector<double> lo(static_cast<std::size_t>(n)), hi(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const LinearModel model = loo_fit(data, static_cast<std::size_t>(i));
    const DataPoint z = data.row(static_cast<std::size_t>(i));
    const double center = model.predict(x_new);
    const double radius = std::abs(z.y - model.predict(z.x));
    lo[static_cast<std::size_t>(i)] = center - radius;
    hi[static_cast<std::size_t>(i)] = center + radius;
  }
  std::vector<double> cuts;
  cuts.insert(cuts.end(), lo.begin(), lo.end());
  cuts.insert(cuts.end(), hi.begin(), hi.end());
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

  const double needed = static_cast<double>(n) - (1.0 - alpha) * (n + 1);
  auto accepted = [&](double y) {
    int containing = 0;
    for (int i = 0; i < n; ++i) {
      if (y >= lo[static_cast<std::size_t>(i)] && y <= hi[static_cast<std::size_t>(i)]) {
        ++containing;
      }
    }
    return static_cast<double>(containing) > needed + 1e-9;
  };

  std::vector<Interval> pieces;
  if (accepted(cuts.front() - 1.0)) pieces.push_back(Interval{-kInf, cuts.front()});
  for (std::size_t j = 0; j < cuts.size(); ++j) {
    if (accepted(cuts[j])) pieces.push_back(Interval{cuts[j], cuts[j]});
    if (j + 1 < cuts.size() && accepted(0.5 * (cuts[j] + cuts[j + 1]))) {
      pieces.push_back(Interval{cuts[j], cuts[j + 1]});
    }
  }
  if (accepted(cuts.back() + 1.0)) pieces.push_back(Interval{cuts.back(), kInf});
  return normalize_union(std::move(pieces));
}

// Endpoint comparison that treats matching infinities as equal.
inline bool endpoints_close(double a, double b, double tol) {
  if (std::isinf(a) || std::isinf(b)) return a == b;
  return std::abs(a - b) <= tol * std::max(1.0, std::abs(a));
}

// Distance from y to the nearest endpoint of the set's intervals.
inline double endpoint_distance(const PredictionSet& set, double y) {
  double best = kInf;
  for (const Interval& iv : set.intervals()) {
    if (std::isfinite(iv.lo)) best = std::min(best, std::abs(y - iv.lo));
    if (std::isfinite(iv.hi)) best = std::min(best, std::abs(y - iv.hi));
  }
  return best;
}

}  // namespace tconf::testing

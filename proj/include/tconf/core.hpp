#pragma once

#include <cstdint>
#include <limits>
#include <vector>

// Foundational pieces shared by every prediction-set engine: closed-interval
// unions, the finite-sample conformal quantile, and the tournament win-count
// decision rule.

namespace tconf {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Closed interval [lo, hi]; endpoints may be +-infinity for unbounded sides.
struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  double length() const { return hi - lo; }
  bool contains(double y) const { return y >= lo && y <= hi; }
};

// Union of disjoint, non-touching, closed intervals sorted by lower endpoint.
// Build one with normalize_union(); the empty set and the whole real line are
// both representable.
class PredictionSet {
 public:
  PredictionSet() = default;

  static PredictionSet all_reals();

  const std::vector<Interval>& intervals() const { return intervals_; }
  bool empty() const { return intervals_.empty(); }
  bool is_all_reals() const;
  bool contains(double y) const;

  // Lebesgue measure; +inf when any member interval is unbounded.
  double total_length() const;

  // True when every point of `other` lies in this set (both normalized).
  bool contains_set(const PredictionSet& other) const;

 private:
  friend PredictionSet normalize_union(std::vector<Interval> raw);
  std::vector<Interval> intervals_;
};

// Sort, merge overlapping/touching intervals, drop nothing else. Throws
// std::invalid_argument on an interval with lo > hi or NaN endpoints.
PredictionSet normalize_union(std::vector<Interval> raw);

// Miscoverage level and training size; the quantile level and win threshold
// are always computed on demand, never cached.
struct ConformalConfig {
  double alpha = 0.1;
  int n = 0;

  double quantile_level() const { return (1.0 - alpha) * (1.0 + 1.0 / static_cast<double>(n)); }
  double win_threshold() const { return (1.0 - alpha) * static_cast<double>(n + 1); }
  void validate() const;
};

// The ceil(tau*n)-th smallest of the n values, tau = (1-alpha)(1+1/n);
// +inf when ceil(tau*n) > n (the prediction set becomes all of R).
double conformal_quantile(std::vector<double> values, const ConformalConfig& config);

// Accept iff the number of games the test point wins is strictly below
// (1-alpha)(n+1). Ties in the underlying score comparison count as losses.
bool tournament_accepts_count(int wins, const ConformalConfig& config);
bool tournament_accepts(const std::vector<bool>& wins, const ConformalConfig& config);

// Binary (n+1)x(n+1) matrix with A[i][j] + A[j][i] <= 1 and zero diagonal.
// Entry A[i][j] = 1 means team i beat team j.
class TournamentMatrix {
 public:
  explicit TournamentMatrix(std::vector<std::vector<int>> entries);

  int size() const { return static_cast<int>(entries_.size()); }
  int entry(int i, int j) const { return entries_[i][j]; }
  int row_wins(int i) const;

 private:
  std::vector<std::vector<int>> entries_;
};

// Number of rows winning at least (1-alpha)(n+1) games. For any valid
// tournament matrix this can never exceed 2*alpha*(n+1); exercised as a
// property test, not used in the prediction path.
int tournament_bound_check(const TournamentMatrix& matrix, double alpha);

namespace detail {
// Tolerance used when comparing an integer count against the real-valued
// threshold (1-alpha)(n+1); absorbs the rounding of alpha itself.
inline constexpr double kThresholdSlack = 1e-9;
}  // namespace detail

}  // namespace tconf

#include "tconf/core.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace tconf {

PredictionSet PredictionSet::all_reals() {
  PredictionSet s;
  s.intervals_.push_back(Interval{-kInf, kInf});
  return s;
}

bool PredictionSet::is_all_reals() const {
  return intervals_.size() == 1 && intervals_[0].lo == -kInf && intervals_[0].hi == kInf;
}

bool PredictionSet::contains(double y) const {
  // First interval with lo > y; the candidate container is its predecessor.
  auto it = std::upper_bound(intervals_.begin(), intervals_.end(), y,
                             [](double v, const Interval& iv) { return v < iv.lo; });
  if (it == intervals_.begin()) return false;
  --it;
  return y <= it->hi;
}

double PredictionSet::total_length() const {
  double total = 0.0;
  for (const Interval& iv : intervals_) {
    if (iv.lo == -kInf || iv.hi == kInf) return kInf;
    total += iv.length();
  }
  return total;
}

bool PredictionSet::contains_set(const PredictionSet& other) const {
  for (const Interval& iv : other.intervals_) {
    auto it = std::upper_bound(intervals_.begin(), intervals_.end(), iv.lo,
                               [](double v, const Interval& c) { return v < c.lo; });
    if (it == intervals_.begin()) return false;
    --it;
    if (iv.hi > it->hi) return false;
  }
  return true;
}

PredictionSet normalize_union(std::vector<Interval> raw) {
  for (const Interval& iv : raw) {
    if (std::isnan(iv.lo) || std::isnan(iv.hi)) {
      throw std::invalid_argument("normalize_union: NaN interval endpoint");
    }
    if (iv.lo > iv.hi) {
      throw std::invalid_argument("normalize_union: interval with lo > hi");
    }
  }
  PredictionSet out;
  if (raw.empty()) return out;
  std::sort(raw.begin(), raw.end(), [](const Interval& a, const Interval& b) {
    return a.lo < b.lo || (a.lo == b.lo && a.hi < b.hi);
  });
  out.intervals_.push_back(raw.front());
  for (std::size_t k = 1; k < raw.size(); ++k) {
    Interval& last = out.intervals_.back();
    if (raw[k].lo <= last.hi) {
      // Overlapping or touching: merge (closed intervals sharing an endpoint
      // form one interval).
      last.hi = std::max(last.hi, raw[k].hi);
    } else {
      out.intervals_.push_back(raw[k]);
    }
  }
  return out;
}

void ConformalConfig::validate() const {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw std::invalid_argument("ConformalConfig: alpha must lie in (0,1)");
  }
  if (n < 1) {
    throw std::invalid_argument("ConformalConfig: n must be positive");
  }
}

double conformal_quantile(std::vector<double> values, const ConformalConfig& config) {
  if (values.empty()) throw std::invalid_argument("empty score list");
  config.validate();
  if (static_cast<int>(values.size()) != config.n) {
    throw std::invalid_argument("conformal_quantile: config.n must equal the number of scores");
  }
  const double target = config.win_threshold();  // tau * n = (1-alpha)(n+1)
  const int k = static_cast<int>(std::ceil(target - detail::kThresholdSlack));
  if (k > config.n) return kInf;
  std::nth_element(values.begin(), values.begin() + (k - 1), values.end());
  return values[static_cast<std::size_t>(k - 1)];
}

bool tournament_accepts_count(int wins, const ConformalConfig& config) {
  config.validate();
  return static_cast<double>(wins) < config.win_threshold() - detail::kThresholdSlack;
}

bool tournament_accepts(const std::vector<bool>& wins, const ConformalConfig& config) {
  if (static_cast<int>(wins.size()) != config.n) {
    throw std::invalid_argument("tournament_accepts: expected one win flag per training point");
  }
  int count = 0;
  for (bool w : wins) count += w ? 1 : 0;
  return tournament_accepts_count(count, config);
}

TournamentMatrix::TournamentMatrix(std::vector<std::vector<int>> entries)
    : entries_(std::move(entries)) {
  const std::size_t m = entries_.size();
  if (m < 2) throw std::invalid_argument("TournamentMatrix: need at least 2 teams");
  for (std::size_t i = 0; i < m; ++i) {
    if (entries_[i].size() != m) {
      throw std::invalid_argument("TournamentMatrix: matrix must be square");
    }
    if (entries_[i][i] != 0) {
      throw std::invalid_argument("TournamentMatrix: diagonal must be zero");
    }
    for (std::size_t j = 0; j < m; ++j) {
      const int a = entries_[i][j];
      if (a != 0 && a != 1) {
        throw std::invalid_argument("TournamentMatrix: entries must be 0 or 1");
      }
      if (i != j && a + entries_[j][i] > 1) {
        throw std::invalid_argument("TournamentMatrix: A[i][j] + A[j][i] must be <= 1");
      }
    }
  }
}

int TournamentMatrix::row_wins(int i) const {
  int wins = 0;
  for (int v : entries_[static_cast<std::size_t>(i)]) wins += v;
  return wins;
}

int tournament_bound_check(const TournamentMatrix& matrix, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw std::invalid_argument("tournament_bound_check: alpha must lie in (0,1)");
  }
  const int m = matrix.size();
  const double threshold = (1.0 - alpha) * static_cast<double>(m);
  int count = 0;
  for (int i = 0; i < m; ++i) {
    if (static_cast<double>(matrix.row_wins(i)) >= threshold - detail::kThresholdSlack) ++count;
  }
  return count;
}

}  // namespace tconf

#include "tconf/engines.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace tconf {
namespace {

// One pairwise game: the test point wins at y when
// |a1*y + b1| > |a2*y + b2| + margin.
struct AbsLinearGame {
  double a1, b1, a2, b2;

  bool win(double y, double margin) const {
    return std::abs(a1 * y + b1) > std::abs(a2 * y + b2) + margin;
  }
};

// All solutions of |a1*y + b1| = |a2*y + b2| + margin lie among the roots of
// the four sign-resolved linear equations; parallel (zero-denominator) cases
// produce no crossing and are skipped. Spurious candidates are harmless: the
// win count is probed between consecutive cuts, and pieces that were split
// without a transition merge back in normalize_union.
void collect_game_breakpoints(const AbsLinearGame& g, double margin, std::vector<double>& out) {
  for (double s1 : {1.0, -1.0}) {
    for (double s2 : {1.0, -1.0}) {
      const double denom = s1 * g.a1 - s2 * g.a2;
      if (denom == 0.0) continue;
      const double y = (s2 * g.b2 - s1 * g.b1 + margin) / denom;
      if (std::isfinite(y)) out.push_back(y);
    }
  }
}

std::vector<double> sort_dedup(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  std::vector<double> out;
  out.reserve(v.size());
  for (double x : v) {
    if (out.empty() || x - out.back() > 1e-12 * std::max(1.0, std::abs(out.back()))) {
      out.push_back(x);
    }
  }
  return out;
}

// Representative interior point of a (possibly unbounded) open segment.
double segment_probe(double lo, double hi) {
  if (lo == -kInf && hi == kInf) return 0.0;
  if (lo == -kInf) return hi - 1.0;
  if (hi == kInf) return lo + 1.0;
  return 0.5 * (lo + hi);
}

// The accepted region of the real line given the sorted cut points between
// which the win count is constant. Cut points are probed individually so that
// isolated accepted points (e.g. a zero-width set at an interpolating fit)
// survive as degenerate closed intervals.
PredictionSet assemble_set(const std::function<bool(double)>& accepted,
                           const std::vector<double>& cuts) {
  std::vector<Interval> pieces;
  if (cuts.empty()) {
    if (accepted(segment_probe(-kInf, kInf))) pieces.push_back(Interval{-kInf, kInf});
    return normalize_union(std::move(pieces));
  }
  if (accepted(segment_probe(-kInf, cuts.front()))) {
    pieces.push_back(Interval{-kInf, cuts.front()});
  }
  for (std::size_t j = 0; j < cuts.size(); ++j) {
    if (accepted(cuts[j])) pieces.push_back(Interval{cuts[j], cuts[j]});
    if (j + 1 < cuts.size() && accepted(segment_probe(cuts[j], cuts[j + 1]))) {
      pieces.push_back(Interval{cuts[j], cuts[j + 1]});
    }
  }
  if (accepted(segment_probe(cuts.back(), kInf))) {
    pieces.push_back(Interval{cuts.back(), kInf});
  }
  return normalize_union(std::move(pieces));
}

template <class TermFn>
double log_sum_exp_over(int K, TermFn term) {
  double m = -kInf;
  for (int k = 0; k < K; ++k) m = std::max(m, term(k));
  if (!std::isfinite(m)) return m;
  double acc = 0.0;
  for (int k = 0; k < K; ++k) acc += std::exp(term(k) - m);
  return m + std::log(acc);
}

}  // namespace

const char* variant_tag(Variant v) {
  return v == Variant::approximate ? "approx" : "tournament";
}

Evaluator default_evaluator(FamilyKind kind) {
  switch (kind) {
    case FamilyKind::deletion:
    case FamilyKind::one_step:
      return Evaluator::exact_breakpoints;
    case FamilyKind::rounding:
      return Evaluator::grid_cells;
    case FamilyKind::bayes_ppd:
      return Evaluator::adaptive_search;
  }
  return Evaluator::exact_breakpoints;
}

void EngineSpec::validate() const {
  config.validate();
  if (inflation_epsilon < 0.0) {
    throw std::invalid_argument("EngineSpec: inflation_epsilon must be >= 0");
  }
  if (evaluator != default_evaluator(family.kind())) {
    throw std::invalid_argument("EngineSpec: evaluator incompatible with score family");
  }
}

struct Engine::Impl {
  EngineSpec spec;
  double margin = 0.0;  // 2 * inflation_epsilon
  std::vector<double> train_y;

  // exact-breakpoints evaluator
  std::vector<AbsLinearGame> games;

  // grid-cells evaluator: games grouped by Voronoi cell
  std::vector<std::vector<AbsLinearGame>> cell_games;

  // adaptive-search evaluator (Bayesian PPD)
  double sigma_lik = 1.0;
  Eigen::MatrixXd bayes_pred;  // n x K (tournament) or 1 x K (approximate) test-point predictions
  Eigen::MatrixXd bayes_logf;  // n x K log-likelihood of training point i under draw k

  int win_count(double y) const;
  bool accepted(double y) const { return tournament_accepts_count(win_count(y), spec.config); }
  std::vector<double> all_cuts() const;
};

int Engine::Impl::win_count(double y) const {
  const int n = spec.config.n;
  int wins = 0;
  switch (spec.evaluator) {
    case Evaluator::exact_breakpoints: {
      for (const AbsLinearGame& g : games) wins += g.win(y, margin) ? 1 : 0;
      return wins;
    }
    case Evaluator::grid_cells: {
      const int cell = spec.family.grid().cell_index(y);
      for (const AbsLinearGame& g : cell_games[static_cast<std::size_t>(cell)]) {
        wins += g.win(y, margin) ? 1 : 0;
      }
      return wins;
    }
    case Evaluator::adaptive_search: {
      const int K = static_cast<int>(bayes_pred.cols());
      std::vector<double> log_test(static_cast<std::size_t>(K));
      if (spec.variant == Variant::approximate) {
        for (int k = 0; k < K; ++k) {
          log_test[static_cast<std::size_t>(k)] = gaussian_log_density(y, bayes_pred(0, k), sigma_lik);
        }
        const double s_test = -std::exp(log_sum_exp_over(
            K, [&](int k) { return 2.0 * log_test[static_cast<std::size_t>(k)]; }));
        for (int i = 0; i < n; ++i) {
          const double s_train = -std::exp(log_sum_exp_over(K, [&](int k) {
            return bayes_logf(i, k) + log_test[static_cast<std::size_t>(k)];
          }));
          wins += (s_test > s_train + margin) ? 1 : 0;
        }
        return wins;
      }
      for (int i = 0; i < n; ++i) {
        for (int k = 0; k < K; ++k) {
          log_test[static_cast<std::size_t>(k)] = gaussian_log_density(y, bayes_pred(i, k), sigma_lik);
        }
        const double s_test = -std::exp(log_sum_exp_over(K, [&](int k) {
          return 2.0 * log_test[static_cast<std::size_t>(k)] + bayes_logf(i, k);
        }));
        const double s_train = -std::exp(log_sum_exp_over(K, [&](int k) {
          return 2.0 * bayes_logf(i, k) + log_test[static_cast<std::size_t>(k)];
        }));
        wins += (s_test > s_train + margin) ? 1 : 0;
      }
      return wins;
    }
  }
  throw std::logic_error("Engine: unknown evaluator");
}

std::vector<double> Engine::Impl::all_cuts() const {
  std::vector<double> cuts;
  if (spec.evaluator == Evaluator::exact_breakpoints) {
    cuts.reserve(games.size() * 4);
    for (const AbsLinearGame& g : games) collect_game_breakpoints(g, margin, cuts);
  } else if (spec.evaluator == Evaluator::grid_cells) {
    const RoundingGrid& grid = spec.family.grid();
    cuts.insert(cuts.end(), grid.cell_boundaries.begin(), grid.cell_boundaries.end());
    for (const auto& cell : cell_games) {
      for (const AbsLinearGame& g : cell) collect_game_breakpoints(g, margin, cuts);
    }
  }
  return sort_dedup(std::move(cuts));
}

namespace {

void build_deletion(Engine::Impl& impl, const Dataset& data, const Eigen::VectorXd& x_new) {
  const int n = static_cast<int>(data.size());
  impl.games.reserve(static_cast<std::size_t>(n));
  if (impl.spec.variant == Variant::approximate) {
    const LinearModel model = fit_ols_pinv(data);
    const double d = model.predict(x_new);
    for (int i = 0; i < n; ++i) {
      const DataPoint z = data.row(static_cast<std::size_t>(i));
      impl.games.push_back(AbsLinearGame{1.0, -d, 0.0, residual_score(model, z)});
    }
    return;
  }
  for (int i = 0; i < n; ++i) {
    const LinearModel model = loo_fit(data, static_cast<std::size_t>(i));
    const DataPoint z = data.row(static_cast<std::size_t>(i));
    const double d_i = model.predict(x_new);
    impl.games.push_back(AbsLinearGame{1.0, -d_i, 0.0, residual_score(model, z)});
  }
}

void build_one_step(Engine::Impl& impl, const Dataset& data, const Eigen::VectorXd& x_new) {
  const int n = static_cast<int>(data.size());
  const double eta = impl.spec.family.one_step_config().eta;
  const double scale = eta / static_cast<double>(n + 1);
  impl.games.reserve(static_cast<std::size_t>(n));
  if (impl.spec.variant == Variant::approximate) {
    const LinearModel model = fit_ols_pinv(data);
    const double d = model.predict(x_new);
    const double kappa_test = scale * x_new.squaredNorm();
    const double a_test = 1.0 - kappa_test;
    for (int i = 0; i < n; ++i) {
      const DataPoint z = data.row(static_cast<std::size_t>(i));
      const double e_i = z.y - model.predict(z.x);
      const double kappa_i = scale * z.x.dot(x_new);
      impl.games.push_back(AbsLinearGame{a_test, -a_test * d, -kappa_i, e_i + kappa_i * d});
    }
    return;
  }
  const double b = scale * x_new.squaredNorm();
  for (int i = 0; i < n; ++i) {
    const LinearModel model = loo_fit(data, static_cast<std::size_t>(i));
    const DataPoint z = data.row(static_cast<std::size_t>(i));
    const double r_i = z.y - model.predict(z.x);
    const double d_i = model.predict(x_new);
    const double a_i = scale * z.x.dot(x_new);
    const double g_i = scale * z.x.squaredNorm();
    impl.games.push_back(AbsLinearGame{1.0 - b, -(1.0 - b) * d_i - a_i * r_i, -a_i,
                                       a_i * d_i + (1.0 - g_i) * r_i});
  }
}

void build_rounding(Engine::Impl& impl, const Dataset& data, const Eigen::VectorXd& x_new) {
  const int n = static_cast<int>(data.size());
  const RoundingGrid& grid = impl.spec.family.grid();
  const int M = grid.size();

  // Every refit shares the same design matrix [X; x_new'] and only the
  // response vector changes, so one pseudoinverse factor serves all of them:
  // predictions are read off the hat matrix H = Xtilde * pinv(Xtilde).
  Eigen::MatrixXd design(n + 1, data.dim());
  design.topRows(n) = data.X();
  design.row(n) = x_new.transpose();
  const PinvFactor factor(design);
  const Eigen::MatrixXd hat = design * factor.pseudoinverse();
  Eigen::VectorXd y_aug(n + 1);
  y_aug.head(n) = data.y();
  y_aug(n) = 0.0;
  const Eigen::VectorXd base_pred = hat * y_aug;

  impl.cell_games.assign(static_cast<std::size_t>(M), {});
  for (int m = 0; m < M; ++m) {
    auto& cell = impl.cell_games[static_cast<std::size_t>(m)];
    cell.reserve(static_cast<std::size_t>(n));
    const double grid_y = grid.points[static_cast<std::size_t>(m)];
    if (impl.spec.variant == Variant::approximate) {
      // Model fit on data plus (x_new, grid point m).
      const double c_m = base_pred(n) + grid_y * hat(n, n);
      for (int i = 0; i < n; ++i) {
        const double pred_i = base_pred(i) + grid_y * hat(i, n);
        cell.push_back(AbsLinearGame{1.0, -c_m, 0.0, std::abs(data.y()(i) - pred_i)});
      }
    } else {
      // Model fit on data with row i's response rounded, plus (x_new, grid
      // point m); the scores compare raw responses against its predictions.
      for (int i = 0; i < n; ++i) {
        const double shift = grid.round(data.y()(i)) - data.y()(i);
        const double c_im = base_pred(n) + shift * hat(n, i) + grid_y * hat(n, n);
        const double pred_i = base_pred(i) + shift * hat(i, i) + grid_y * hat(i, n);
        cell.push_back(AbsLinearGame{1.0, -c_im, 0.0, std::abs(data.y()(i) - pred_i)});
      }
    }
  }
}

void build_bayes(Engine::Impl& impl, const Dataset& data, const Eigen::VectorXd& x_new) {
  const int n = static_cast<int>(data.size());
  const BayesFamilyParams& params = impl.spec.family.bayes();
  const int K = params.K;
  impl.sigma_lik = params.prior.sigma_lik;

  if (impl.spec.variant == Variant::approximate) {
    const GaussianPosterior post = conjugate_posterior(params.prior, data);
    const PosteriorDraws draws = sample_posterior(post, K, params.seed_for_full());
    impl.bayes_pred.resize(1, K);
    impl.bayes_logf.resize(n, K);
    for (int k = 0; k < K; ++k) {
      const Eigen::VectorXd& theta = draws.thetas[static_cast<std::size_t>(k)];
      impl.bayes_pred(0, k) = x_new.dot(theta);
      const Eigen::VectorXd fitted = data.X() * theta;
      for (int i = 0; i < n; ++i) {
        impl.bayes_logf(i, k) = gaussian_log_density(data.y()(i), fitted(i), impl.sigma_lik);
      }
    }
    return;
  }

  // One draw set per leave-one-out posterior; both sides of game i reuse the
  // same draws, with per-index seeds derived from the family seed.
  const Eigen::MatrixXd gram = data.X().transpose() * data.X();
  const Eigen::VectorXd xty = data.X().transpose() * data.y();
  impl.bayes_pred.resize(n, K);
  impl.bayes_logf.resize(n, K);
  for (int i = 0; i < n; ++i) {
    const DataPoint z = data.row(static_cast<std::size_t>(i));
    const GaussianPosterior post =
        conjugate_posterior_loo(params.prior, gram, xty, z.x, z.y);
    const PosteriorDraws draws =
        sample_posterior(post, K, params.seed_for_index(static_cast<std::size_t>(i)));
    for (int k = 0; k < K; ++k) {
      const Eigen::VectorXd& theta = draws.thetas[static_cast<std::size_t>(k)];
      impl.bayes_pred(i, k) = x_new.dot(theta);
      impl.bayes_logf(i, k) = gaussian_log_density(z.y, z.x.dot(theta), impl.sigma_lik);
    }
  }
}

}  // namespace

Engine::Engine(EngineSpec spec, const Dataset& data, const Eigen::VectorXd& x_new)
    : impl_(std::make_unique<Impl>()) {
  spec.validate();
  if (static_cast<int>(data.size()) != spec.config.n) {
    throw std::invalid_argument("Engine: config.n must equal the training size");
  }
  if (data.dim() != x_new.size()) {
    throw std::invalid_argument("Engine: feature dimension mismatch");
  }
  if (spec.variant == Variant::tournament && data.size() < 2) {
    throw std::invalid_argument("Engine: tournament variant needs at least 2 training rows");
  }
  impl_->spec = std::move(spec);
  impl_->margin = 2.0 * impl_->spec.inflation_epsilon;
  impl_->train_y = data.responses();
  switch (impl_->spec.family.kind()) {
    case FamilyKind::deletion:
      build_deletion(*impl_, data, x_new);
      break;
    case FamilyKind::one_step:
      build_one_step(*impl_, data, x_new);
      break;
    case FamilyKind::rounding:
      build_rounding(*impl_, data, x_new);
      break;
    case FamilyKind::bayes_ppd:
      build_bayes(*impl_, data, x_new);
      break;
  }
}

Engine::~Engine() = default;
Engine::Engine(Engine&&) noexcept = default;
Engine& Engine::operator=(Engine&&) noexcept = default;

const EngineSpec& Engine::spec() const { return impl_->spec; }

int Engine::win_count(double y) const { return impl_->win_count(y); }

bool Engine::contains(double y) const { return impl_->accepted(y); }

PredictionSet Engine::set() const {
  if (impl_->spec.evaluator == Evaluator::adaptive_search) {
    const AdaptiveLengthResult result =
        adaptive_length([this](double y) { return impl_->accepted(y); }, impl_->train_y);
    if (!result.endpoints) return PredictionSet{};
    return normalize_union({*result.endpoints});
  }
  const std::vector<double> cuts = impl_->all_cuts();
  return assemble_set([this](double y) { return impl_->accepted(y); }, cuts);
}

PredictionSet split_conformal_set(const Dataset& train_half, const Dataset& cal_half,
                                  const Eigen::VectorXd& x_new, double alpha) {
  if (train_half.size() == 0 || cal_half.size() == 0) {
    throw std::invalid_argument("split_conformal_set: both halves must be non-empty");
  }
  const LinearModel model = fit_ols_pinv(train_half);
  std::vector<double> residuals;
  residuals.reserve(cal_half.size());
  for (std::size_t i = 0; i < cal_half.size(); ++i) {
    residuals.push_back(residual_score(model, cal_half.row(i)));
  }
  const ConformalConfig cfg{alpha, static_cast<int>(cal_half.size())};
  const double q = conformal_quantile(std::move(residuals), cfg);
  if (q == kInf) return PredictionSet::all_reals();
  const double center = model.predict(x_new);
  return normalize_union({Interval{center - q, center + q}});
}

PredictionSet approx_set(const EngineSpec& spec, const Dataset& data, const Eigen::VectorXd& x_new) {
  if (spec.variant != Variant::approximate) {
    throw std::invalid_argument("approx_set: spec.variant must be approximate");
  }
  return Engine(spec, data, x_new).set();
}

PredictionSet tournament_set(const EngineSpec& spec, const Dataset& data,
                             const Eigen::VectorXd& x_new) {
  if (spec.variant != Variant::tournament) {
    throw std::invalid_argument("tournament_set: spec.variant must be tournament");
  }
  return Engine(spec, data, x_new).set();
}

AdaptiveLengthResult adaptive_length(const std::function<bool(double)>& membership,
                                     const std::vector<double>& train_y) {
  if (train_y.empty()) throw std::invalid_argument("adaptive_length: empty response list");
  const auto [min_it, max_it] = std::minmax_element(train_y.begin(), train_y.end());
  const double range = *max_it - *min_it;
  const double lo = *min_it - 0.02 * range;
  const double hi = *max_it + 0.02 * range;

  constexpr int kCoarsePoints = 10;
  constexpr double kFinalResolution = 0.1;
  constexpr double kShrink = 10.0;

  double step = (hi - lo) / static_cast<double>(kCoarsePoints);
  double left = kInf, right = -kInf;
  for (int k = 0; k <= kCoarsePoints; ++k) {
    const double y = (k == kCoarsePoints) ? hi : lo + step * k;
    if (membership(y)) {
      left = std::min(left, y);
      right = std::max(right, y);
    }
  }
  if (!(left <= right)) return AdaptiveLengthResult{0.0, std::nullopt};

  while (step > kFinalResolution + 1e-12) {
    const double fine = std::max(step / kShrink, kFinalResolution);
    // Left endpoint: leftmost accepted point at the finer resolution inside
    // the last uncertain span.
    const double scan_lo = std::max(lo, left - step);
    for (double y = scan_lo; y < left; y += fine) {
      if (membership(y)) {
        left = y;
        break;
      }
    }
    const double scan_hi = std::min(hi, right + step);
    for (double y = scan_hi; y > right; y -= fine) {
      if (membership(y)) {
        right = y;
        break;
      }
    }
    step = fine;
  }
  return AdaptiveLengthResult{right - left, Interval{left, right}};
}

bool coverage_check(const EngineSpec& spec, const Dataset& data, const DataPoint& test) {
  return Engine(spec, data, test.x).contains(test.y);
}

}  // namespace tconf

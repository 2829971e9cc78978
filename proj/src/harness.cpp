#include "tconf/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <ostream>
#include <set>
#include <sstream>

#include "json.hpp"

#include "tconf/parallel.hpp"
#include "tconf/rng.hpp"

namespace tconf {
namespace {

const std::set<std::string> kValidMethods = {"delete", "round", "onestep", "bayes"};
const std::set<std::string> kValidVariants = {"approx", "tournament"};

std::vector<std::string> canonical_unique(std::vector<std::string> names) {
  std::sort(names.begin(), names.end());
  names.erase(std::unique(names.begin(), names.end()), names.end());
  return names;
}

std::string format_double(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

std::string iso_timestamp_utc() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm_utc{};
  gmtime_r(&t, &tm_utc);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
  return buf;
}

Variant parse_variant(const std::string& variant) {
  if (variant == "approx") return Variant::approximate;
  if (variant == "tournament") return Variant::tournament;
  throw UsageError("unknown variant '" + variant + "' (expected approx or tournament)");
}

std::uint64_t family_seed_for(std::uint64_t master, int trial, int p) {
  return rng::derive_seed(master, {rng::kStreamFamilySeed, static_cast<std::uint64_t>(trial),
                                   static_cast<std::uint64_t>(p)});
}

}  // namespace

FamilyKind parse_method(const std::string& method) {
  if (method == "delete") return FamilyKind::deletion;
  if (method == "round") return FamilyKind::rounding;
  if (method == "onestep") return FamilyKind::one_step;
  if (method == "bayes") return FamilyKind::bayes_ppd;
  throw UsageError("unknown method '" + method + "' (expected delete, round, onestep or bayes)");
}

void SimulateArgs::validate() const {
  if (methods.empty()) throw UsageError("at least one method is required");
  for (const auto& m : methods) {
    if (!kValidMethods.count(m)) {
      throw UsageError("unknown method '" + m + "' (expected delete, round, onestep or bayes)");
    }
  }
  if (variants.empty()) throw UsageError("at least one variant is required");
  for (const auto& v : variants) {
    if (!kValidVariants.count(v)) {
      throw UsageError("unknown variant '" + v + "' (expected approx or tournament)");
    }
  }
  if (n < 2) throw UsageError("--n must be >= 2");
  if (p_list.empty()) throw UsageError("at least one dimension p is required");
  for (int p : p_list) {
    if (p < 1) throw UsageError("--p values must be >= 1");
  }
  if (!(alpha > 0.0 && alpha < 1.0)) throw UsageError("--alpha must lie in (0,1)");
  if (trials < 1) throw UsageError("--trials must be >= 1");
  if (workers < 1) throw UsageError("--workers must be >= 1");
  if (inflation < 0.0) throw UsageError("--inflation must be >= 0");
  if (bayes_K < 1) throw UsageError("--bayes-k must be >= 1");
  if (grid_M < 2) throw UsageError("--grid-m must be >= 2");
  if (!(grid_pad >= 0.0)) throw UsageError("--grid-pad must be >= 0");
  if (!(eta > 0.0)) throw UsageError("--eta must be > 0");
}

std::vector<TrialRecord> run_simulate(const SimulateArgs& args) {
  args.validate();
  const std::vector<std::string> methods = canonical_unique(args.methods);
  const std::vector<std::string> variants = canonical_unique(args.variants);
  std::vector<int> p_list = args.p_list;
  std::sort(p_list.begin(), p_list.end());
  p_list.erase(std::unique(p_list.begin(), p_list.end()), p_list.end());

  struct Task {
    std::string method;
    std::string variant;
    int p;
    int trial;
  };
  std::vector<Task> tasks;
  tasks.reserve(methods.size() * variants.size() * p_list.size() *
                static_cast<std::size_t>(args.trials));
  for (const auto& method : methods) {
    for (const auto& variant : variants) {
      for (int p : p_list) {
        for (int trial = 0; trial < args.trials; ++trial) {
          tasks.push_back(Task{method, variant, p, trial});
        }
      }
    }
  }

  std::vector<TrialRecord> records(tasks.size());
  parallel_for_index(tasks.size(), args.workers, [&](std::size_t idx) {
    const Task& task = tasks[idx];
    const auto started = std::chrono::steady_clock::now();

    SimConfig sim;
    sim.n = args.n;
    sim.p = task.p;
    sim.alpha = args.alpha;
    sim.trials = args.trials;
    sim.master_seed = args.seed;
    const TrialData data = generate_trial(sim, task.trial);

    FamilyPreset preset;
    preset.kind = parse_method(task.method);
    preset.grid_M = args.grid_M;
    preset.grid_pad = args.grid_pad;
    preset.one_step = OneStepConfig{args.eta};
    preset.bayes_K = args.bayes_K;
    const ScoreFamily family =
        instantiate_family(preset, data.train, family_seed_for(args.seed, task.trial, task.p));

    EngineSpec spec{family, parse_variant(task.variant), args.inflation,
                    default_evaluator(family.kind()), ConformalConfig{args.alpha, args.n}};
    const Engine engine(std::move(spec), data.train, data.test.x);
    const bool covered = engine.contains(data.test.y);
    const double length = engine.set().total_length();

    TrialRecord rec;
    rec.method = task.method;
    rec.variant = task.variant;
    rec.inflation = args.inflation;
    rec.n = args.n;
    rec.p = task.p;
    rec.trial = task.trial;
    rec.covered = covered ? 1 : 0;
    rec.length = length;
    if (args.timing) {
      rec.wall_seconds =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    }
    records[idx] = std::move(rec);
  });
  return records;
}

void write_simulate_csv(std::ostream& os, const std::vector<TrialRecord>& records) {
  os << "method,variant,inflation,n,p,trial,covered,length,wall_seconds\n";
  char wall[32];
  for (const TrialRecord& r : records) {
    std::snprintf(wall, sizeof(wall), "%.6f", r.wall_seconds);
    os << r.method << ',' << r.variant << ',' << format_double(r.inflation) << ',' << r.n << ','
       << r.p << ',' << r.trial << ',' << r.covered << ',' << format_double(r.length) << ','
       << wall << '\n';
  }
}

std::string simulate_manifest(const SimulateArgs& args) {
  nlohmann::json j;
  j["tool"] = "tconf";
  j["version"] = kToolVersion;
  j["command"] = "simulate";
  j["timestamp"] = iso_timestamp_utc();
  j["seed"] = args.seed;
  j["methods"] = canonical_unique(args.methods);
  j["variants"] = canonical_unique(args.variants);
  j["inflation"] = args.inflation;
  j["n"] = args.n;
  j["p_list"] = args.p_list;
  j["alpha"] = args.alpha;
  j["trials"] = args.trials;
  j["workers"] = args.workers;
  j["timing"] = args.timing;
  j["bayes_K"] = args.bayes_K;
  j["grid_M"] = args.grid_M;
  j["grid_pad"] = args.grid_pad;
  j["eta"] = args.eta;
  j["beta_star_norm"] = std::sqrt(10.0);
  j["noise_sd"] = 1.0;
  return j.dump(2) + "\n";
}

void StabilityArgs::validate() const {
  if (methods.empty()) throw UsageError("at least one method is required");
  for (const auto& m : methods) {
    if (!kValidMethods.count(m)) {
      throw UsageError("unknown method '" + m + "' (expected delete, round, onestep or bayes)");
    }
  }
  if (n < 2) throw UsageError("--n must be >= 2");
  if (p < 1) throw UsageError("--p must be >= 1");
  if (!(alpha > 0.0 && alpha < 1.0)) throw UsageError("--alpha must lie in (0,1)");
  if (trials < 1) throw UsageError("--trials must be >= 1");
  if (workers < 1) throw UsageError("--workers must be >= 1");
  if (bayes_K < 1) throw UsageError("--bayes-k must be >= 1");
  if (grid_M < 2) throw UsageError("--grid-m must be >= 2");
  if (bayes_indices < 1) throw UsageError("--bayes-indices must be >= 1");
  for (double nu : nu_grid) {
    if (!(nu >= 0.0 && nu <= 1.0)) throw UsageError("--nu values must lie in [0,1]");
  }
}

std::vector<double> StabilityArgs::effective_nu_grid() const {
  if (!nu_grid.empty()) return nu_grid;
  std::vector<double> grid;
  grid.reserve(50);
  for (int k = 1; k <= 50; ++k) grid.push_back(0.01 * k);
  return grid;
}

std::vector<StabilityRecord> run_stability(const StabilityArgs& args) {
  args.validate();
  const std::vector<std::string> methods = canonical_unique(args.methods);
  const std::vector<double> nu_grid = args.effective_nu_grid();

  std::vector<StabilityRecord> records;
  for (const auto& method : methods) {
    FamilyPreset preset;
    preset.kind = parse_method(method);
    preset.grid_M = args.grid_M;
    preset.grid_pad = args.grid_pad;
    preset.one_step = OneStepConfig{args.eta};
    preset.bayes_K = args.bayes_K;

    SimConfig cfg;
    cfg.n = args.n;
    cfg.p = args.p;
    cfg.alpha = args.alpha;
    cfg.trials = args.trials;
    cfg.master_seed = args.seed;

    const int per_trial = preset.kind == FamilyKind::bayes_ppd ? args.bayes_indices : 0;
    const StabilityCurve tournament = stability_curve(
        stability_deltas_tournament(preset, cfg, per_trial, args.workers),
        StabilityCondition::tournament);
    const ApproxDeltas approx = stability_deltas_approx(preset, cfg, args.workers);
    const StabilityCurve approx_test =
        stability_curve(approx.test_point, StabilityCondition::approx_test);
    const StabilityCurve approx_train =
        stability_curve(approx.train_point, StabilityCondition::approx_train);

    for (const StabilityCurve* curve : {&tournament, &approx_test, &approx_train}) {
      for (double nu : nu_grid) {
        records.push_back(StabilityRecord{method, condition_tag(curve->condition), nu,
                                          curve->epsilon_at(nu)});
      }
    }
  }
  return records;
}

void write_stability_csv(std::ostream& os, const std::vector<StabilityRecord>& records) {
  os << "method,condition,nu,epsilon\n";
  for (const StabilityRecord& r : records) {
    os << r.method << ',' << r.condition << ',' << format_double(r.nu) << ','
       << format_double(r.epsilon) << '\n';
  }
}

std::string stability_manifest(const StabilityArgs& args) {
  nlohmann::json j;
  j["tool"] = "tconf";
  j["version"] = kToolVersion;
  j["command"] = "stability";
  j["timestamp"] = iso_timestamp_utc();
  j["seed"] = args.seed;
  j["methods"] = canonical_unique(args.methods);
  j["n"] = args.n;
  j["p"] = args.p;
  j["alpha"] = args.alpha;
  j["trials"] = args.trials;
  j["workers"] = args.workers;
  j["bayes_K"] = args.bayes_K;
  j["grid_M"] = args.grid_M;
  j["grid_pad"] = args.grid_pad;
  j["eta"] = args.eta;
  j["bayes_indices"] = args.bayes_indices;
  j["nu_grid"] = args.effective_nu_grid();
  // Deltas are pooled across trials and training indices: one curve per
  // (method, condition) pair.
  j["delta_pooling"] = "pooled";
  return j.dump(2) + "\n";
}

RejectionToy make_rejection_toy(int n, int p, std::uint64_t seed) {
  rng::Stream stream(rng::derive_seed(seed, {rng::kStreamTrialData, 0xb0b}));
  Eigen::MatrixXd X(n, p);
  const double scale = 0.5 / std::sqrt(static_cast<double>(p));
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < p; ++j) X(i, j) = scale * (2.0 * stream.uniform() - 1.0);
  }
  // Low noise keeps the residual at the posterior mean small; the acceptance
  // probability of the worst-case floor decays like exp(-|residual| * radius
  // * sd(x' theta)), so noisy rows would stall the sampler.
  const Eigen::VectorXd beta = Eigen::VectorXd::Ones(p);
  Eigen::VectorXd y = X * beta;
  for (int i = 0; i < n; ++i) y(i) += 0.1 * stream.normal();

  RejectionToy toy;
  toy.data = Dataset(std::move(X), std::move(y));
  toy.prior.mu0 = Eigen::VectorXd::Zero(p);
  toy.prior.Sigma0 = Eigen::MatrixXd::Identity(p, p);
  toy.prior.sigma_lik = 1.0;
  return toy;
}

void DemoRejectionArgs::validate() const {
  if (n < 2) throw UsageError("--n must be >= 2");
  if (p < 1) throw UsageError("--p must be >= 1");
  if (K < 1) throw UsageError("--k must be >= 1");
  if (max_proposals < 1) throw UsageError("--max-proposals must be >= 1");
  if (!(region_radius > 0.0)) throw UsageError("--region-radius must be > 0");
  if (!(floor_scale > 0.0)) throw UsageError("--floor-scale must be > 0");
}

std::string run_demo_rejection(const DemoRejectionArgs& args) {
  args.validate();
  const RejectionToy toy = make_rejection_toy(args.n, args.p, args.seed);
  const Dataset& train = toy.data;
  const GaussianPrior& prior = toy.prior;
  const GaussianPosterior full_post = conjugate_posterior(prior, train);

  LikelihoodFloor floor =
      gaussian_region_floor(full_post, train, prior.sigma_lik, args.region_radius);
  floor.c *= args.floor_scale;

  const LooDrawsResult result = shared_rejection_loo_draws(
      train, prior, args.K, floor, args.seed, args.max_proposals, args.region_radius);

  std::ostringstream os;
  os << "shared rejection sampler demo: n=" << args.n << " p=" << args.p << " K=" << args.K
     << " seed=" << args.seed << "\n";
  os << "total proposals: " << result.diagnostics.total_proposals << "\n";
  for (int i = 0; i < args.n; ++i) {
    const PosteriorDraws& draws = result.per_index[static_cast<std::size_t>(i)];
    const GaussianPosterior loo =
        conjugate_posterior(prior, train.without_row(static_cast<std::size_t>(i)));

    Eigen::VectorXd mean = Eigen::VectorXd::Zero(args.p);
    for (const auto& theta : draws.thetas) mean += theta;
    mean /= static_cast<double>(draws.count());
    double max_mean_gap_se = 0.0;
    for (int j = 0; j < args.p; ++j) {
      const double se = std::sqrt(loo.Sigma_n(j, j) / static_cast<double>(draws.count()));
      max_mean_gap_se = std::max(max_mean_gap_se, std::abs(mean(j) - loo.mu_n(j)) / se);
    }

    // Fresh direct draws from the closed-form leave-one-out posterior for the
    // energy-distance comparison.
    const PosteriorDraws direct = sample_posterior(
        loo, draws.count(),
        rng::derive_seed(args.seed, {rng::kStreamBayesExact, static_cast<std::uint64_t>(i)}));
    const int sub = std::min(200, draws.count());
    std::vector<Eigen::VectorXd> a(draws.thetas.begin(), draws.thetas.begin() + sub);
    std::vector<Eigen::VectorXd> b(direct.thetas.begin(), direct.thetas.begin() + sub);
    const double stat = energy_distance(a, b);
    const double pval = energy_distance_pvalue(
        a, b, 499, rng::derive_seed(args.seed, {11, static_cast<std::uint64_t>(i)}));

    char line[160];
    std::snprintf(line, sizeof(line),
                  "i=%d accept_rate=%.4f mean_gap=%.2fse energy=%.5f perm_p=%.3f\n", i,
                  result.diagnostics.acceptance_rate[static_cast<std::size_t>(i)], max_mean_gap_se,
                  stat, pval);
    os << line;
  }
  return os.str();
}

CoverageSummary summarize(const std::vector<TrialRecord>& records, const std::string& method,
                          const std::string& variant, int p) {
  CoverageSummary s;
  double coverage_sum = 0.0;
  double length_sum = 0.0;
  int length_count = 0;
  for (const TrialRecord& r : records) {
    if (r.method != method || r.variant != variant || r.p != p) continue;
    ++s.count;
    coverage_sum += r.covered;
    if (std::isinf(r.length)) {
      ++s.skipped_unbounded;
    } else {
      length_sum += r.length;
      ++length_count;
    }
  }
  if (s.count > 0) s.mean_coverage = coverage_sum / s.count;
  if (length_count > 0) s.mean_length = length_sum / length_count;
  return s;
}

}  // namespace tconf

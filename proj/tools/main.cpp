#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "tconf/harness.hpp"

namespace {

std::vector<int> parse_int_csv(const std::string& text) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    out.push_back(std::stoi(item));
  }
  return out;
}

// Writes the CSV body to `out` (or stdout when empty) and the manifest to
// <out>.manifest.json.
int emit(const std::string& out_path, const std::string& csv_body, const std::string& manifest) {
  if (out_path.empty()) {
    std::cout << csv_body;
    return 0;
  }
  std::ofstream csv(out_path, std::ios::binary);
  if (!csv) {
    std::cerr << "error: cannot open output file '" << out_path << "'\n";
    return 1;
  }
  csv << csv_body;
  std::ofstream mf(out_path + ".manifest.json", std::ios::binary);
  if (!mf) {
    std::cerr << "error: cannot open manifest file next to '" << out_path << "'\n";
    return 1;
  }
  mf << manifest;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"tconf: tournament-corrected approximate conformal prediction benchmarks"};
  app.require_subcommand(1);

  // simulate
  auto* simulate = app.add_subcommand("simulate", "coverage/length sweep, CSV per trial");
  tconf::SimulateArgs sim_args;
  std::string sim_preset, sim_out, sim_p_csv;
  std::vector<int> sim_p;
  auto* sim_method = simulate->add_option("--method", sim_args.methods,
                                          "score family: delete round onestep bayes (repeatable)");
  auto* sim_variant =
      simulate->add_option("--variant", sim_args.variants, "approx and/or tournament (repeatable)");
  simulate->add_option("--inflation", sim_args.inflation, "stability inflation epsilon (set uses 2*eps)");
  auto* sim_n = simulate->add_option("--n", sim_args.n, "training size");
  auto* sim_p_opt = simulate->add_option("--p", sim_p, "dimension (repeatable)");
  auto* sim_p_list = simulate->add_option("--p-list", sim_p_csv, "comma-separated dimensions");
  auto* sim_alpha = simulate->add_option("--alpha", sim_args.alpha, "miscoverage level");
  auto* sim_trials = simulate->add_option("--trials", sim_args.trials, "trials per cell");
  simulate->add_option("--seed", sim_args.seed, "master seed");
  simulate->add_option("--workers", sim_args.workers, "worker threads");
  simulate->add_option("--out", sim_out, "CSV output path (stdout when omitted)");
  simulate->add_option("--preset", sim_preset, "fig1: n=100 alpha=0.1 p=20..100 step 5, 100 trials");
  simulate->add_flag("--timing", sim_args.timing,
                     "record per-trial wall seconds (breaks byte-reproducibility)");
  simulate->add_option("--bayes-k", sim_args.bayes_K, "posterior draws per score");
  simulate->add_option("--grid-m", sim_args.grid_M, "rounding grid size");
  simulate->add_option("--grid-pad", sim_args.grid_pad, "rounding grid padding fraction");
  simulate->add_option("--eta", sim_args.eta, "one-step learning rate");

  // stability
  auto* stability = app.add_subcommand("stability", "(nu, epsilon) stability curves, CSV");
  tconf::StabilityArgs stab_args;
  std::string stab_preset, stab_out;
  auto* stab_method = stability->add_option("--method", stab_args.methods,
                                            "score family: delete round onestep bayes (repeatable)");
  auto* stab_n = stability->add_option("--n", stab_args.n, "training size");
  auto* stab_p = stability->add_option("--p", stab_args.p, "dimension");
  auto* stab_alpha = stability->add_option("--alpha", stab_args.alpha, "miscoverage level");
  auto* stab_trials = stability->add_option("--trials", stab_args.trials, "number of trials");
  stability->add_option("--seed", stab_args.seed, "master seed");
  stability->add_option("--workers", stab_args.workers, "worker threads");
  stability->add_option("--out", stab_out, "CSV output path (stdout when omitted)");
  stability->add_option("--preset", stab_preset, "fig2: n=100 p=20, 200 trials");
  stability->add_option("--bayes-k", stab_args.bayes_K, "posterior draws per score");
  stability->add_option("--bayes-indices", stab_args.bayes_indices,
                        "per-trial index subsample for the bayes family");
  stability->add_option("--grid-m", stab_args.grid_M, "rounding grid size");
  stability->add_option("--grid-pad", stab_args.grid_pad, "rounding grid padding fraction");
  stability->add_option("--eta", stab_args.eta, "one-step learning rate");

  // demo-rejection
  auto* demo = app.add_subcommand("demo-rejection",
                                  "shared rejection sampler vs closed-form LOO posteriors");
  tconf::DemoRejectionArgs demo_args;
  demo->add_option("--n", demo_args.n, "training size");
  demo->add_option("--p", demo_args.p, "dimension");
  demo->add_option("--k", demo_args.K, "accepted draws per index");
  demo->add_option("--seed", demo_args.seed, "master seed");
  demo->add_option("--max-proposals", demo_args.max_proposals, "proposal budget");
  demo->add_option("--region-radius", demo_args.region_radius, "proposal truncation radius");
  demo->add_option("--floor-scale", demo_args.floor_scale,
                   "multiplier on the likelihood floor (>1 forces a floor violation)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (app.got_subcommand(simulate)) {
      if (!sim_preset.empty()) {
        if (sim_preset != "fig1") throw tconf::UsageError("simulate supports only --preset fig1");
        if (!*sim_n) sim_args.n = 100;
        if (!*sim_alpha) sim_args.alpha = 0.1;
        if (!*sim_trials) sim_args.trials = 100;
        if (!*sim_method) sim_args.methods = {"bayes", "delete", "onestep", "round"};
        if (!*sim_variant) sim_args.variants = {"approx", "tournament"};
        if (!*sim_p_opt && !*sim_p_list) {
          sim_args.p_list.clear();
          for (int p = 20; p <= 100; p += 5) sim_args.p_list.push_back(p);
        }
      }
      if (*sim_p_opt || *sim_p_list) {
        sim_args.p_list = sim_p;
        for (int p : parse_int_csv(sim_p_csv)) sim_args.p_list.push_back(p);
      }
      const auto records = tconf::run_simulate(sim_args);
      std::ostringstream body;
      tconf::write_simulate_csv(body, records);
      return emit(sim_out, body.str(), tconf::simulate_manifest(sim_args));
    }

    if (app.got_subcommand(stability)) {
      if (!stab_preset.empty()) {
        if (stab_preset != "fig2") throw tconf::UsageError("stability supports only --preset fig2");
        if (!*stab_n) stab_args.n = 100;
        if (!*stab_p) stab_args.p = 20;
        if (!*stab_alpha) stab_args.alpha = 0.1;
        if (!*stab_trials) stab_args.trials = 200;
        if (!*stab_method) stab_args.methods = {"bayes", "delete", "onestep", "round"};
      }
      const auto records = tconf::run_stability(stab_args);
      std::ostringstream body;
      tconf::write_stability_csv(body, records);
      return emit(stab_out, body.str(), tconf::stability_manifest(stab_args));
    }

    if (app.got_subcommand(demo)) {
      std::cout << tconf::run_demo_rejection(demo_args);
      return 0;
    }
  } catch (const tconf::UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

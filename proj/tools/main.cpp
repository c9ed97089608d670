// routelearn: batch simulation and analysis of dynamic congestion games with
// distributed hazard learning.
//
// Subcommands: simulate | compare | poa | bounds | fit | threshold

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "routelearn/poa.hpp"

namespace fs = std::filesystem;
using namespace routelearn;

namespace {

constexpr const char* kVersion = "0.1.0";

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct CommonOptions {
  std::string scenario_path;
  std::string preset;
  std::uint64_t seed = 1;
  std::string out_dir = ".";
  bool force = false;
  int jobs = 1;
  std::string flags;  // reconstructed command line for output headers
};

void add_scenario_flags(CLI::App* cmd, CommonOptions& common) {
  cmd->add_option("--scenario", common.scenario_path, "Scenario JSON file");
  cmd->add_option("--preset", common.preset,
                  "Named preset: beijing | theorem1-worst | lemma3-over | lemma3-under");
  cmd->add_option("--seed", common.seed, "Base random seed");
  cmd->add_option("--out", common.out_dir, "Output directory");
  cmd->add_flag("--force", common.force, "Overwrite existing output files");
  cmd->add_option("--jobs", common.jobs, "Worker threads (default 1, sequential)");
}

Scenario resolve_scenario(const CommonOptions& common) {
  if (!common.preset.empty() && !common.scenario_path.empty()) {
    throw ConfigError("give either --scenario or --preset, not both");
  }
  try {
    if (!common.preset.empty()) return make_preset(common.preset);
    if (!common.scenario_path.empty()) return load_scenario(common.scenario_path);
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
  throw ConfigError("a scenario is required (--scenario FILE or --preset NAME)");
}

std::ofstream open_output(const CommonOptions& common, const std::string& filename,
                          const std::string& scenario_id) {
  fs::create_directories(common.out_dir);
  const fs::path path = fs::path(common.out_dir) / filename;
  if (fs::exists(path) && !common.force) {
    throw ConfigError("output file exists (use --force to overwrite): " +
                      path.string());
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "# routelearn v" << kVersion << " scenario=" << scenario_id
      << " seed=" << common.seed << " flags=" << common.flags << "\n";
  out << std::setprecision(17);
  return out;
}

std::unique_ptr<RoutingPolicy> resolve_policy(const std::string& name,
                                              const Scenario& scenario,
                                              const PolicyOptions& options) {
  try {
    return make_policy(name, scenario, options);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

const char* summary_label(HazardSummary y) {
  switch (y) {
    case HazardSummary::kHazard: return "1";
    case HazardSummary::kClear: return "0";
    default: return "NA";
  }
}

void write_trace(std::ofstream& out, const EpisodeTrace& trace) {
  out << "slot,path,flow,y,prior_belief,posterior_belief,exp_latency,"
         "true_latency,immediate_cost\n";
  for (std::size_t t = 0; t < trace.slots.size(); ++t) {
    const SlotRecord& rec = trace.slots[t];
    for (std::size_t p = 0; p < rec.flows.size(); ++p) {
      out << (t + 1) << ',' << p << ',' << rec.flows[p] << ',';
      if (p == 0) {
        out << "NA,,,,," << rec.immediate_cost << "\n";
        continue;
      }
      const std::size_t i = p - 1;
      out << summary_label(rec.summary[i]) << ',' << rec.prior_belief[i] << ','
          << rec.posterior_belief[i] << ',' << rec.exp_latency[i] << ','
          << rec.true_latency[i] << ',' << rec.immediate_cost << "\n";
    }
  }
}

struct CheckpointSummary {
  int horizon = 0;
  double mean = 0.0;
  double std_error = 0.0;
};

// Per-policy episode sweep with prefix costs at each checkpoint.
std::vector<CheckpointSummary> checkpoint_costs(const Scenario& scenario,
                                                const RoutingPolicy& policy,
                                                const std::vector<int>& horizons,
                                                int replications,
                                                std::uint64_t base_seed,
                                                int jobs) {
  const int t_max = *std::max_element(horizons.begin(), horizons.end());
  std::vector<std::vector<double>> costs(
      horizons.size(), std::vector<double>(static_cast<std::size_t>(replications)));
  auto run_range = [&](int lo, int hi) {
    for (int k = lo; k < hi; ++k) {
      Rng seeder = substream(base_seed, static_cast<std::uint64_t>(k), Draw::kGeneric);
      const EpisodeTrace trace =
          run_episode(scenario, policy, t_max, seeder.next_u64());
      for (std::size_t h = 0; h < horizons.size(); ++h) {
        costs[h][static_cast<std::size_t>(k)] =
            discounted_cost_prefix(trace, scenario.rho, horizons[h]);
      }
    }
  };
  const int workers = std::max(1, std::min(jobs, replications));
  if (workers == 1) {
    run_range(0, replications);
  } else {
    std::vector<std::thread> pool;
    const int chunk = (replications + workers - 1) / workers;
    for (int w = 0; w < workers; ++w) {
      const int lo = w * chunk;
      const int hi = std::min(replications, lo + chunk);
      if (lo < hi) pool.emplace_back(run_range, lo, hi);
    }
    for (std::thread& t : pool) t.join();
  }
  std::vector<CheckpointSummary> out;
  for (std::size_t h = 0; h < horizons.size(); ++h) {
    CheckpointSummary s;
    s.horizon = horizons[h];
    double sum = 0.0;
    for (double c : costs[h]) sum += c;
    s.mean = sum / replications;
    if (replications >= 2) {
      double ss = 0.0;
      for (double c : costs[h]) ss += (c - s.mean) * (c - s.mean);
      s.std_error = std::sqrt(ss / (replications - 1.0) / replications);
    }
    out.push_back(s);
  }
  return out;
}

std::string join_args(int argc, char** argv) {
  std::ostringstream out;
  for (int i = 1; i < argc; ++i) {
    if (i > 1) out << ' ';
    out << argv[i];
  }
  return out.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dynamic congestion games with distributed hazard learning"};
  app.require_subcommand(1);

  CommonOptions common;
  common.flags = join_args(argc, argv);

  // --- simulate ---------------------------------------------------------
  CLI::App* simulate = app.add_subcommand("simulate", "Run one policy, write trace and summary");
  std::string policy_name = "myopic";
  int horizon = 600;
  int reps = 50;
  int rollout_depth = 3;
  int char_depth = 2;
  int grid_points = 101;
  std::string receiver_mode = "rational";
  add_scenario_flags(simulate, common);
  simulate->add_option("--policy", policy_name, "myopic | hiding | det-rec | char | optimal | probe-exploit");
  simulate->add_option("--T", horizon, "Horizon (slots)");
  simulate->add_option("--reps", reps, "Replications");
  simulate->add_option("--rollout-depth", rollout_depth, "Rollout depth for the optimal policy");
  simulate->add_option("--char-depth", char_depth, "Evaluator depth inside the char policy");
  simulate->add_option("--grid-points", grid_points, "Value-iteration grid points per axis");
  simulate->add_option("--receiver-mode", receiver_mode, "det-rec receivers: rational | obedient");

  // --- compare ----------------------------------------------------------
  CLI::App* compare = app.add_subcommand("compare", "Cost table across policies and horizons");
  std::vector<std::string> policy_list{"myopic", "hiding", "char", "optimal"};
  std::vector<int> checkpoints;
  add_scenario_flags(compare, common);
  compare->add_option("--policies", policy_list, "Policies to compare")->delimiter(',');
  compare->add_option("--T", checkpoints, "Horizon checkpoints")->delimiter(',');
  compare->add_option("--reps", reps, "Replications");
  compare->add_option("--rollout-depth", rollout_depth, "Rollout depth for the optimal policy");
  compare->add_option("--char-depth", char_depth, "Evaluator depth inside the char policy");
  compare->add_option("--grid-points", grid_points, "Value-iteration grid points per axis");

  // --- poa --------------------------------------------------------------
  CLI::App* poa = app.add_subcommand("poa", "Empirical cost ratio of a policy against a baseline");
  std::string baseline_name = "optimal";
  add_scenario_flags(poa, common);
  poa->add_option("--policy", policy_name, "Numerator policy");
  poa->add_option("--baseline", baseline_name, "Denominator policy (default optimal)");
  poa->add_option("--T", horizon, "Horizon (slots)");
  poa->add_option("--reps", reps, "Replications");
  poa->add_option("--rollout-depth", rollout_depth, "Rollout depth for the optimal policy");
  poa->add_option("--char-depth", char_depth, "Evaluator depth inside the char policy");
  poa->add_option("--grid-points", grid_points, "Value-iteration grid points per axis");

  // --- bounds -----------------------------------------------------------
  CLI::App* bounds = app.add_subcommand("bounds", "Closed-form price-of-anarchy values");
  double rho = 0.98;
  double k_arg = 0.0;
  int m_paths = 0;
  double n_mean = 0.0;
  double v0 = 0.0;
  double alpha_high = 0.0;
  double ell0 = 0.0;
  double n_min = 0.0, n_max = 0.0;
  bounds->add_option("--rho", rho, "Discount factor");
  bounds->add_option("--k", k_arg, "Recovery horizon for the myopic bound");
  bounds->add_option("--M", m_paths, "Stochastic path count (char bound)");
  bounds->add_option("--N", n_mean, "Mean arrivals (char bound)");
  bounds->add_option("--v0", v0, "Base error cost");
  bounds->add_option("--alpha-H", alpha_high, "High-hazard coefficient (derive k)");
  bounds->add_option("--ell0", ell0, "Safe-path latency (derive k)");
  bounds->add_option("--N-min", n_min, "Minimum arrivals (derive k)");
  bounds->add_option("--N-max", n_max, "Maximum arrivals (derive k)");

  // --- fit --------------------------------------------------------------
  CLI::App* fit = app.add_subcommand("fit", "Fit two-state chains from labelled sequences");
  std::string fit_input;
  fit->add_option("--input", fit_input, "CSV with columns road,timestamp_index,label")->required();
  fit->add_option("--out", common.out_dir, "Output directory");
  fit->add_flag("--force", common.force, "Overwrite existing output files");
  fit->add_option("--seed", common.seed, "Seed recorded in output headers");

  // --- threshold --------------------------------------------------------
  CLI::App* threshold = app.add_subcommand("threshold", "Exploration threshold of a scenario");
  double slice_anchor = 0.0;
  bool dump_values = false;
  add_scenario_flags(threshold, common);
  threshold->add_option("--slice", slice_anchor, "Slice anchor (default ell0)");
  threshold->add_option("--grid-points", grid_points, "Value-iteration grid points per axis");
  threshold->add_flag("--dump-values", dump_values, "Export the solved value table");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    std::cerr << e.what() << "\n";
    return 2;
  }

  try {
    PolicyOptions options;
    options.rollout.depth = rollout_depth;
    options.char_eval_depth = char_depth;
    options.grid.belief_points = grid_points;
    options.grid.latency_points = grid_points;
    if (receiver_mode == "obedient") {
      options.receiver_mode = ReceiverMode::kObedient;
    } else if (receiver_mode != "rational") {
      throw ConfigError("--receiver-mode must be rational or obedient");
    }

    if (simulate->parsed()) {
      const Scenario scenario = resolve_scenario(common);
      const std::string id = scenario_hash(scenario);
      const std::unique_ptr<RoutingPolicy> policy =
          resolve_policy(policy_name, scenario, options);
      const CostSummary summary =
          monte_carlo(scenario, *policy, horizon, reps, common.seed, common.jobs);
      Rng seeder = substream(common.seed, 0, Draw::kGeneric);
      const EpisodeTrace trace =
          run_episode(scenario, *policy, horizon, seeder.next_u64());

      std::ofstream trace_out =
          open_output(common, "trace_" + policy_name + ".csv", id);
      write_trace(trace_out, trace);
      std::ofstream summary_out =
          open_output(common, "summary_" + policy_name + ".csv", id);
      summary_out << "policy,mean,stderr,replications,T,seed\n";
      summary_out << policy_name << ',' << summary.mean << ',' << summary.std_error
                  << ',' << reps << ',' << horizon << ',' << common.seed << "\n";
      std::cout << policy_name << ": " << summary.mean << " +/- "
                << summary.std_error << " (discounted social cost, " << reps
                << " reps)\n";
      return 0;
    }

    if (compare->parsed()) {
      const Scenario scenario = resolve_scenario(common);
      const std::string id = scenario_hash(scenario);
      if (checkpoints.empty()) checkpoints = {horizon};
      std::sort(checkpoints.begin(), checkpoints.end());
      std::ofstream out = open_output(common, "compare.csv", id);
      out << "policy,T,mean,stderr,replications,seed\n";
      for (const std::string& name : policy_list) {
        const std::unique_ptr<RoutingPolicy> policy =
            resolve_policy(name, scenario, options);
        const std::vector<CheckpointSummary> rows = checkpoint_costs(
            scenario, *policy, checkpoints, reps, common.seed, common.jobs);
        for (const CheckpointSummary& row : rows) {
          out << name << ',' << row.horizon << ',' << row.mean << ','
              << row.std_error << ',' << reps << ',' << common.seed << "\n";
          std::cout << name << " T=" << row.horizon << ": " << row.mean
                    << " +/- " << row.std_error << "\n";
        }
      }
      return 0;
    }

    if (poa->parsed()) {
      const Scenario scenario = resolve_scenario(common);
      const std::string id = scenario_hash(scenario);
      resolve_policy(policy_name, scenario, options);
      resolve_policy(baseline_name, scenario, options);
      const PoaReport report =
          empirical_poa(scenario, policy_name, baseline_name, horizon, reps,
                        common.seed, common.jobs, options);
      std::ofstream out = open_output(common, "poa_" + policy_name + ".csv", id);
      out << "scenario_id,policy,baseline,ratio,policy_cost,policy_stderr,"
             "baseline_cost,baseline_stderr,bound,k,T,replications,seed\n";
      std::string bound_str, k_str;
      try {
        const MyopicPoaBound b = myopic_poa_bound(
            scenario.rho, scenario.hazard.alpha_high, scenario.num_paths(),
            scenario.ell0, scenario.arrivals.n_min, scenario.arrivals.n_max,
            scenario.err);
        bound_str = std::to_string(b.bound);
        k_str = std::to_string(b.k);
      } catch (const std::exception&) {
        // geometry admits no closed-form bound; leave the columns blank
      }
      out << report.scenario_id << ',' << report.policy << ',' << report.baseline
          << ',' << report.ratio << ',' << report.policy_cost << ','
          << report.policy_std_error << ',' << report.baseline_cost << ','
          << report.baseline_std_error << ',' << bound_str << ',' << k_str << ','
          << horizon << ',' << reps << ',' << common.seed << "\n";
      std::cout << report.policy << "/" << report.baseline
                << " cost ratio: " << report.ratio << "\n";
      return 0;
    }

    if (bounds->parsed()) {
      std::cout << std::setprecision(5);
      bool printed = false;
      if (k_arg > 0.0) {
        std::cout << "myopic_poa_bound(rho=" << rho << ", k=" << k_arg
                  << ") = " << myopic_poa_bound_value(rho, k_arg) << "\n";
        printed = true;
      }
      if (alpha_high > 0.0 && ell0 > 0.0 && n_min > 0.0 && n_max > 0.0) {
        const MyopicPoaBound b = myopic_poa_bound(
            rho, alpha_high, std::max(1, m_paths), ell0, n_min, n_max,
            ErrorCostModel{v0});
        std::cout << "derived k = " << b.k << ", myopic_poa_bound = " << b.bound
                  << "\n";
        printed = true;
      }
      if (m_paths > 0 && n_mean > 0.0) {
        std::cout << "char_poa(M=" << m_paths << ", N=" << n_mean
                  << ", v0=" << v0 << ") = "
                  << char_poa(m_paths, n_mean, ErrorCostModel{v0}) << "\n";
        printed = true;
      }
      if (!printed) {
        throw ConfigError("bounds: give --k (myopic bound), --M/--N (char bound), "
                          "or --alpha-H/--ell0/--N-min/--N-max (derived k)");
      }
      return 0;
    }

    if (fit->parsed()) {
      std::vector<LabeledSequence> sequences;
      try {
        sequences = load_labeled_sequences(fit_input);
      } catch (const std::exception& e) {
        throw ConfigError(e.what());
      }
      std::ofstream out = open_output(common, "fit.csv", "none");
      out << "road,p_LH,p_HL,stationary,low_row_defaulted,high_row_defaulted\n";
      for (const LabeledSequence& seq : sequences) {
        const ChainFit f = fit_two_state_chain(seq);
        const bool has_stat = f.chain.has_stationary();
        out << seq.road << ',' << f.chain.p_low_to_high << ','
            << f.chain.p_high_to_low << ','
            << (has_stat ? std::to_string(f.chain.stationary()) : "NA") << ','
            << f.low_row_defaulted << ',' << f.high_row_defaulted << "\n";
        std::cout << seq.road << ": p_LH=" << f.chain.p_low_to_high
                  << " p_HL=" << f.chain.p_high_to_low;
        if (has_stat) std::cout << " stationary=" << f.chain.stationary();
        if (f.low_row_defaulted || f.high_row_defaulted) {
          std::cout << " (warning: unvisited state row kept as self-loop)";
        }
        std::cout << "\n";
      }
      return 0;
    }

    if (threshold->parsed()) {
      const Scenario scenario = resolve_scenario(common);
      const std::string id = scenario_hash(scenario);
      const Scenario restricted = single_path_restriction(scenario);
      const ValueFunction vf = value_iteration(
          restricted, options.grid, 1e-3, 4000, common.jobs);
      const double anchor = slice_anchor > 0.0 ? slice_anchor : restricted.ell0;
      const ThresholdResult result = exploration_threshold(restricted, anchor, vf);
      if (dump_values) {
        fs::create_directories(common.out_dir);
        const fs::path path = fs::path(common.out_dir) / "value_function.csv";
        if (fs::exists(path) && !common.force) {
          throw ConfigError("output file exists (use --force to overwrite): " +
                            path.string());
        }
        export_value_function(vf, path.string(),
                              "routelearn v" + std::string(kVersion) +
                                  " scenario=" + id + " seed=" +
                                  std::to_string(common.seed));
      }
      if (result.crossed) {
        std::cout << "x_th = " << result.x_threshold
                  << " (value-iteration residual " << vf.residual << ", "
                  << vf.sweeps << " sweeps)\n";
      } else {
        std::cout << "no crossing; boundary = " << result.x_threshold << "\n";
      }
      return 0;
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "runtime error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}

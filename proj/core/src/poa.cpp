#include "routelearn/poa.hpp"

#include <cmath>
#include <stdexcept>

namespace routelearn {

double myopic_poa_bound_value(double rho, double k) {
  if (rho <= 0.0 || rho >= 1.0) {
    throw std::domain_error("poa bound: rho must be in (0, 1)");
  }
  if (k < 1.0) throw std::domain_error("poa bound: k must be >= 1");
  const double rho_k = std::pow(rho, k);
  return 2.0 * (1.0 - rho_k) / (2.0 - rho - rho_k);
}

MyopicPoaBound myopic_poa_bound(double rho, double alpha_high, int num_paths,
                                double ell0, double n_min, double n_max,
                                const ErrorCostModel& err) {
  if (alpha_high <= 1.0) {
    throw std::domain_error("poa bound: alpha_H must exceed 1 (logarithm base)");
  }
  const double per_path = n_min / num_paths;
  const double slack = ell0 - per_path - err(per_path);
  if (slack <= 0.0) {
    throw std::domain_error(
        "poa bound: requires ell0 > N_min/M + V(N_min/M)");
  }
  const double inner =
      num_paths * slack * (alpha_high - 1.0) / (alpha_high * n_max) + 1.0;
  MyopicPoaBound out;
  out.k = 1.0 + std::log(inner) / std::log(alpha_high);
  out.bound = myopic_poa_bound_value(rho, out.k);
  return out;
}

double char_poa(int num_paths, double mean_arrivals, const ErrorCostModel& err) {
  if (num_paths < 1 || mean_arrivals < 1.0) {
    throw std::domain_error("char poa: need M >= 1 and N >= 1");
  }
  const double m = num_paths;
  const double n = mean_arrivals;
  const double v = err(n * (2.0 * m + 1.0) / (2.0 * m * (m + 1.0)));
  const double value = 1.0 + 1.0 / (2.0 * (m + 1.0) * (1.0 + (m / n) * v));
  if (value >= 1.25 + 1e-12) {
    throw std::logic_error("char poa exceeded 5/4; inputs violate the model");
  }
  return value;
}

Scenario worst_case_myopic_scenario(const WorstCaseParams& params) {
  if (params.alpha_high <= 1.0) {
    throw std::domain_error("worst case: alpha_H must exceed 1");
  }
  Scenario s;
  s.ell0 = params.ell0;
  s.hazard.alpha_high = params.alpha_high;
  s.hazard.alpha_low = 0.0;
  s.rho = params.rho;
  s.err.v0 = params.v0;
  s.obs = {ObsVariant::kMajorityVote, params.obs_accuracy, 0.6};
  s.arrivals = {params.arrivals, params.arrivals,
                static_cast<double>(params.arrivals), ArrivalDist::kUniform, 0.0};

  PathSpec p;
  p.name = "worst";
  p.chain.p_low_to_high = params.p_low_to_high;
  p.chain.p_high_to_low = params.p_high_to_low;
  // Expected alpha exactly 1 freezes the published latency while nobody
  // travels; the zero-flow cost matches the safe path at peak arrivals.
  p.initial_belief = 1.0 / params.alpha_high;
  p.initial_exp_latency = params.ell0 + params.arrivals - params.v0;
  if (p.initial_exp_latency < 0.0) {
    throw std::domain_error("worst case: v0 too large for the geometry");
  }
  s.paths = {p};
  s.prior_xbar.support = {p.chain.stationary()};
  s.prior_xbar.weights = {1.0};
  return s;
}

HidingWorstPair hiding_worst_scenarios(double over_scale) {
  if (over_scale <= 1.0) {
    throw std::domain_error("hiding worst case: scale must exceed 1");
  }
  HidingWorstPair pair;

  // Over-exploration: the prior promises near-clear steady states, so the
  // hiding split saturates the path cap, but the road starts and stays badly
  // congested.
  Scenario& over = pair.over;
  over.ell0 = 30.0;
  over.hazard = {1.3, 0.3};
  over.rho = 0.98;
  over.err.v0 = 2.0;
  over.obs = {ObsVariant::kMajorityVote, 0.9, 0.6};
  over.arrivals = {10, 10, 10.0, ArrivalDist::kUniform, 0.0};
  {
    PathSpec p;
    p.name = "over";
    p.chain.p_low_to_high = 0.36;
    p.chain.p_high_to_low = 0.04;  // steady state 0.9
    p.initial_belief = 0.9;
    p.initial_exp_latency = over_scale * over.ell0;
    over.paths = {p};
  }
  over.prior_xbar.support = {0.05, 0.15};
  over.prior_xbar.weights = {0.5, 0.5};
  over.latency_cap = 200.0 * over.ell0;

  // Under-exploration: the prior promises congestion, so the hiding split is
  // clamped to zero, but the road is actually nearly free.
  Scenario& under = pair.under;
  under.ell0 = 30.0;
  under.hazard = {1.3, 0.3};
  under.rho = 0.98;
  under.err.v0 = 2.0;
  under.obs = {ObsVariant::kMajorityVote, 0.9, 0.6};
  under.arrivals = {10, 10, 10.0, ArrivalDist::kUniform, 0.0};
  {
    PathSpec p;
    p.name = "under";
    p.chain.p_low_to_high = 0.02;
    p.chain.p_high_to_low = 0.38;  // steady state 0.05
    p.initial_belief = 0.05;
    p.initial_exp_latency = 1.0;
    under.paths = {p};
  }
  under.prior_xbar.support = {0.9, 0.95};
  under.prior_xbar.weights = {0.5, 0.5};
  return pair;
}

Scenario make_preset(const std::string& name) {
  if (name == "beijing") return beijing_preset();
  if (name == "theorem1-worst") return worst_case_myopic_scenario();
  if (name == "lemma3-over") return hiding_worst_scenarios().over;
  if (name == "lemma3-under") return hiding_worst_scenarios().under;
  std::string known;
  for (const std::string& n : preset_names()) {
    if (!known.empty()) known += ", ";
    known += n;
  }
  throw std::invalid_argument("unknown preset \"" + name + "\"; valid names: " + known);
}

std::vector<std::string> preset_names() {
  return {"beijing", "theorem1-worst", "lemma3-over", "lemma3-under"};
}

PoaReport empirical_poa(const Scenario& scenario, const std::string& policy,
                        const std::string& baseline, int horizon,
                        int replications, std::uint64_t seed, int jobs,
                        const PolicyOptions& options) {
  const std::unique_ptr<RoutingPolicy> policy_impl =
      make_policy(policy, scenario, options);
  const std::unique_ptr<RoutingPolicy> baseline_impl =
      make_policy(baseline, scenario, options);
  // Paired seeds: both sides consume the identical episode substreams.
  const CostSummary policy_cost =
      monte_carlo(scenario, *policy_impl, horizon, replications, seed, jobs);
  const CostSummary baseline_cost =
      monte_carlo(scenario, *baseline_impl, horizon, replications, seed, jobs);
  if (baseline_cost.mean <= 0.0) {
    throw std::runtime_error("empirical_poa: baseline cost is not positive");
  }
  PoaReport report;
  report.scenario_id = scenario_hash(scenario);
  report.policy = policy;
  report.baseline = baseline;
  report.policy_cost = policy_cost.mean;
  report.baseline_cost = baseline_cost.mean;
  report.policy_std_error = policy_cost.std_error;
  report.baseline_std_error = baseline_cost.std_error;
  report.ratio = policy_cost.mean / baseline_cost.mean;
  report.horizon = horizon;
  report.replications = replications;
  report.seed = seed;
  return report;
}

}  // namespace routelearn

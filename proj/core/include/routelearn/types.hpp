#pragma once

#include <string>
#include <vector>

#include "routelearn/rng.hpp"

namespace routelearn {

// Congestion regimes of a stochastic path. The coefficient multiplies
// (latency + flow) when the next slot's latency forms, so alpha_high >= 1
// compounds congestion and alpha_low < 1 drains it.
struct HazardParams {
  double alpha_high = 1.3;
  double alpha_low = 0.3;

  void validate() const;
};

// Per-slot two-state Markov chain over {low, high} hazard.
struct TwoStateChain {
  double p_low_to_high = 0.0;
  double p_high_to_low = 0.0;

  bool has_stationary() const { return p_low_to_high + p_high_to_low > 0.0; }
  // Long-run probability of the high state.
  double stationary() const;
  void validate() const;
};

enum class ObsVariant { kMajorityVote, kParametric };

// Group observation channel. Majority vote aggregates n i.i.d. reporters with
// the given per-user accuracy (ties count as hazard); the parametric variant
// uses q_high(n) = 1 - 0.5*decay^n, q_low(n) = 0.5*decay^n.
struct ObservationModel {
  ObsVariant variant = ObsVariant::kMajorityVote;
  double per_user_accuracy = 0.8;  // majority vote; (0.5, 1]
  double decay = 0.6;              // parametric; (0, 1)

  void validate() const;
};

struct GroupObsProbs {
  double q_high = 0.0;
  double q_low = 0.0;
};

// Extra cost from imperfect fused observations: v0 / (1 + n_prev).
struct ErrorCostModel {
  double v0 = 0.0;

  double operator()(double n_prev) const { return v0 / (1.0 + n_prev); }
  void validate() const;
};

enum class HazardSummary : int { kClear = 0, kHazard = 1, kNone = 2 };

// Public (published) and hidden state of one stochastic path.
struct PathState {
  double exp_latency = 0.0;   // published E[latency | history]
  double belief = 0.0;        // published P(high hazard)
  bool truth_high = false;    // hidden
  double true_latency = 0.0;  // hidden
};

enum class ArrivalDist { kUniform, kTruncNormal };

struct ArrivalModel {
  int n_min = 1;
  int n_max = 1;
  double mean = 1.0;
  ArrivalDist dist = ArrivalDist::kUniform;
  double stddev = 0.0;  // truncated normal only

  void validate() const;
  // Probability mass over {n_min, ..., n_max}.
  std::vector<double> pmf() const;
  int sample(Rng& rng) const;
};

// Discrete prior over a path's unknown steady-state hazard probability.
struct PriorXbar {
  std::vector<double> support;
  std::vector<double> weights;

  double mass_below(double threshold) const;
  double mean() const;
  void validate() const;
};

struct PathSpec {
  std::string name;
  TwoStateChain chain;
  double initial_belief = 0.5;
  double initial_exp_latency = 0.0;
};

// Full game specification.
struct Scenario {
  int schema_version = 1;
  double ell0 = 1.0;  // safe-path latency
  HazardParams hazard;
  std::vector<PathSpec> paths;
  ObservationModel obs;
  bool obs_defaulted = false;  // observation block was filled from defaults
  ErrorCostModel err;
  ArrivalModel arrivals;
  double rho = 0.9;
  PriorXbar prior_xbar;
  // Saturation ceiling for simulated latencies (gridlock cap); 0 means
  // 100 * ell0.
  double latency_cap = 0.0;

  int num_paths() const { return static_cast<int>(paths.size()); }
  // Cap used by planning grids and prior-based steady estimates.
  double planning_latency_cap() const { return 4.0 * ell0; }
  double simulation_latency_cap() const {
    return latency_cap > 0.0 ? latency_cap : 100.0 * ell0;
  }
  void validate() const;
};

// Flow split over paths; index 0 is the safe path, 1..M the stochastic ones.
struct FlowAllocation {
  std::vector<double> flows;

  double total() const;
  double safe() const { return flows.at(0); }
  // Largest-remainder rounding preserving the total; ties favor the safe
  // path, then lower indices.
  std::vector<int> rounded() const;
};

// Per-path zero-flow cost: [ell0, exp_latency_i + V(prev_flow_i), ...].
std::vector<double> cost_intercepts(const Scenario& scenario,
                                    const std::vector<PathState>& state,
                                    const std::vector<int>& prev_flows);

// Sum of per-user costs with unit congestion slopes: each user on path i pays
// intercept_i + flow_i.
double immediate_social_cost(const std::vector<double>& intercepts,
                             const std::vector<double>& flows);

}  // namespace routelearn

#pragma once

#include <functional>
#include <vector>

#include "routelearn/dynamics.hpp"
#include "routelearn/types.hpp"

namespace routelearn {

// Nash split of `total_flow` users across paths with the given zero-flow
// costs and unit congestion slopes: water-fill until every used path sits at
// a common cost level; unused paths have intercepts at or above it.
FlowAllocation myopic_allocation(const std::vector<double>& intercepts,
                                 double total_flow);

// Integer Nash split by best-response dynamics: users move one at a time to a
// strictly cheaper path until no move helps. Independent of the water-filling
// route; kept as an oracle for it.
std::vector<int> best_response_allocation(const std::vector<double>& intercepts,
                                          int total_flow);

// Prior-only estimate of each stochastic path's zero-flow cost: the expected
// steady latency under the prior over steady states, plus the worst-case
// observation error V(0). Steady latencies are the fixed point of the linear
// dynamics at per-path flow N/M, capped at the planning latency cap.
std::vector<double> hiding_cost_estimate(const Scenario& scenario);

// Constant split played by users who see nothing but the prior; the interior
// formula is clamped to [0, total_flow / M] per stochastic path.
FlowAllocation hiding_allocation(const Scenario& scenario, double total_flow,
                                 const std::vector<double>& exp_cost_at_xbar);

enum class ReceiverMode { kRational, kObedient };

// Allocation induced by deterministic path recommendations. Rational
// receivers ignore the uninformative signal and reproduce the hiding split;
// the obedient mode (diagnostic only) sends everyone to the path with the
// lowest prior-estimated cost.
FlowAllocation deterministic_recommendation_allocation(
    const Scenario& scenario, double total_flow,
    const std::vector<double>& exp_cost_at_xbar,
    ReceiverMode mode = ReceiverMode::kRational);

struct CharParams {
  double p_low = 0.0;   // recommendation probability for below-threshold paths
  double p_high = 0.0;  // for at/above-threshold paths
  double x_threshold = 0.5;
  double prob_below_threshold = 0.5;  // prior mass below x_threshold

  bool feasible() const {
    return p_low * prob_below_threshold >=
           p_high * (1.0 - prob_below_threshold);
  }
  void validate(int num_paths) const;
};

// Picks a feasible (p_low, p_high) pair: p_low near the proper-distribution
// cap min(1/M, 0.9) and p_high at half the feasibility bound, capped at
// p_low. Throws when the prior puts no mass on one side of the threshold.
CharParams choose_char_probs(const PriorXbar& prior, double x_threshold,
                             int num_paths);

// Per-stochastic-path recommendation probability at the current beliefs.
std::vector<double> char_recommend_probs(const std::vector<double>& beliefs,
                                         const CharParams& params);

struct CharDecision {
  FlowAllocation allocation;  // expected split at the chosen group sizes
  int hide_count = 0;         // users shown nothing
};

using AllocationCost = std::function<double(const FlowAllocation&)>;

// Enumerates every hiding-group size, scores the induced expected allocation
// with the supplied long-run cost oracle, and returns the cheapest.
CharDecision char_step(const std::vector<PathState>& state, int total_flow,
                       const CharParams& params, const Scenario& scenario,
                       const AllocationCost& long_run_cost);

// Draws one recommendation; 0 means the safe path. Throws if the per-path
// probabilities sum above 1.
int sample_recommendation(const std::vector<double>& beliefs,
                          const CharParams& params, Rng& rng);

}  // namespace routelearn

#pragma once

#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "routelearn/planner.hpp"

namespace routelearn {

// Samples the next hazard state from the chain's transition row.
bool evolve_truth(const TwoStateChain& chain, bool currently_high, Rng& rng);

struct SlotRecord {
  int arrivals = 0;
  std::vector<int> flows;  // index 0 = safe path
  std::vector<HazardSummary> summary;
  std::vector<double> prior_belief;
  std::vector<double> posterior_belief;
  std::vector<double> exp_latency;   // published at slot start
  std::vector<double> true_latency;  // ground truth at slot start
  std::vector<char> degenerate_update;
  double immediate_cost = 0.0;
};

struct EpisodeTrace {
  std::uint64_t seed = 0;
  std::string scenario_hash;
  std::vector<SlotRecord> slots;
};

// A routing behaviour: maps the published state to a split of the arrivals.
// Implementations must be safe to call concurrently from multiple episodes.
class RoutingPolicy {
 public:
  virtual ~RoutingPolicy() = default;
  virtual FlowAllocation decide(const std::vector<PathState>& state,
                                const std::vector<int>& prev_flows,
                                int arrivals, std::uint64_t slot,
                                Rng& rng) const = 0;
  virtual std::string_view name() const = 0;
};

struct PolicyOptions {
  RolloutConfig rollout;
  std::optional<CharParams> char_params;  // derived from the scenario if unset
  ReceiverMode receiver_mode = ReceiverMode::kRational;
  int char_eval_depth = 2;
  // Solved value table shared across episodes (single-path scenarios). When
  // unset, policies that need one solve it at construction.
  std::shared_ptr<const ValueFunction> value;
  GridSpec grid;
};

// Known policy names: myopic | hiding | det-rec | char | optimal, plus the
// probe-exploit reference behaviour used in worst-case studies.
std::vector<std::string> policy_names();
std::unique_ptr<RoutingPolicy> make_policy(const std::string& name,
                                           const Scenario& scenario,
                                           const PolicyOptions& options = {});

// Runs one episode: publish, allocate, evolve truth, observe, update.
// Deterministic in (scenario, policy, horizon, seed).
EpisodeTrace run_episode(const Scenario& scenario, const RoutingPolicy& policy,
                         int horizon, std::uint64_t seed);

struct DiscountedCost {
  double cost = 0.0;
  // rho^T * c_max / (1 - rho): what the dropped tail could still add.
  double truncation_bound = 0.0;
};
DiscountedCost discounted_cost(const EpisodeTrace& trace, double rho);

struct GapSeries {
  std::vector<double> gap;  // |belief - stationary| per slot
  double terminal_mean = 0.0;  // mean over the final 10% of slots
};
GapSeries convergence_diagnostic(const EpisodeTrace& trace,
                                 const TwoStateChain& chain, int path_index);

struct CostSummary {
  double mean = 0.0;
  double std_error = 0.0;
  std::vector<double> per_episode;
  int horizon = 0;
  std::uint64_t base_seed = 0;
};

// Independent seeded episodes; episode k uses substream(base_seed, k).
CostSummary monte_carlo(const Scenario& scenario, const RoutingPolicy& policy,
                        int horizon, int replications, std::uint64_t base_seed,
                        int jobs = 1);

// Discounted cost of the trace truncated to the first `horizon` slots.
double discounted_cost_prefix(const EpisodeTrace& trace, double rho,
                              int horizon);

}  // namespace routelearn

#include "routelearn/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <thread>

#include "routelearn/dynamics.hpp"
#include "routelearn/scenario_io.hpp"

namespace routelearn {

bool evolve_truth(const TwoStateChain& chain, bool currently_high, Rng& rng) {
  const double p_flip =
      currently_high ? chain.p_high_to_low : chain.p_low_to_high;
  return rng.bernoulli(p_flip) ? !currently_high : currently_high;
}

namespace {

class MyopicPolicy final : public RoutingPolicy {
 public:
  explicit MyopicPolicy(const Scenario& scenario) : scenario_(scenario) {}
  FlowAllocation decide(const std::vector<PathState>& state,
                        const std::vector<int>& prev_flows, int arrivals,
                        std::uint64_t, Rng&) const override {
    std::vector<double> prev(prev_flows.begin(), prev_flows.end());
    std::vector<double> intercepts(state.size() + 1, scenario_.ell0);
    for (std::size_t i = 0; i < state.size(); ++i) {
      const double p = prev.empty() ? 0.0 : prev[i + 1];
      intercepts[i + 1] = state[i].exp_latency + scenario_.err(p);
    }
    return myopic_allocation(intercepts, arrivals);
  }
  std::string_view name() const override { return "myopic"; }

 private:
  Scenario scenario_;
};

class HidingPolicy final : public RoutingPolicy {
 public:
  explicit HidingPolicy(const Scenario& scenario)
      : scenario_(scenario), estimate_(hiding_cost_estimate(scenario)) {}
  FlowAllocation decide(const std::vector<PathState>&, const std::vector<int>&,
                        int arrivals, std::uint64_t, Rng&) const override {
    return hiding_allocation(scenario_, arrivals, estimate_);
  }
  std::string_view name() const override { return "hiding"; }

 private:
  Scenario scenario_;
  std::vector<double> estimate_;
};

class DeterministicRecommendationPolicy final : public RoutingPolicy {
 public:
  DeterministicRecommendationPolicy(const Scenario& scenario, ReceiverMode mode)
      : scenario_(scenario),
        estimate_(hiding_cost_estimate(scenario)),
        mode_(mode) {}
  FlowAllocation decide(const std::vector<PathState>&, const std::vector<int>&,
                        int arrivals, std::uint64_t, Rng&) const override {
    return deterministic_recommendation_allocation(scenario_, arrivals,
                                                   estimate_, mode_);
  }
  std::string_view name() const override { return "det-rec"; }

 private:
  Scenario scenario_;
  std::vector<double> estimate_;
  ReceiverMode mode_;
};

class OptimalPolicy final : public RoutingPolicy {
 public:
  OptimalPolicy(const Scenario& scenario, const PolicyOptions& options)
      : scenario_(scenario), rollout_(options.rollout), value_(options.value) {
    if (scenario.num_paths() == 1 && !value_) {
      value_ = std::make_shared<ValueFunction>(
          value_iteration(scenario, options.grid));
    }
    rollout_.value = value_ ? value_.get() : nullptr;
  }
  FlowAllocation decide(const std::vector<PathState>& state,
                        const std::vector<int>& prev_flows, int arrivals,
                        std::uint64_t, Rng&) const override {
    std::vector<double> prev(prev_flows.begin(), prev_flows.end());
    return optimal_allocation(state, prev, arrivals, scenario_, rollout_);
  }
  std::string_view name() const override { return "optimal"; }

 private:
  Scenario scenario_;
  RolloutConfig rollout_;
  std::shared_ptr<const ValueFunction> value_;
};

class CharPolicy final : public RoutingPolicy {
 public:
  CharPolicy(const Scenario& scenario, const PolicyOptions& options)
      : scenario_(scenario), eval_depth_(options.char_eval_depth) {
    if (options.char_params) {
      params_ = *options.char_params;
    } else {
      const Scenario restricted = single_path_restriction(scenario);
      const ValueFunction vf = value_iteration(restricted, options.grid);
      const ThresholdResult th =
          exploration_threshold(restricted, restricted.ell0, vf);
      params_ = choose_char_probs(scenario.prior_xbar, th.x_threshold,
                                  scenario.num_paths());
    }
    params_.validate(scenario.num_paths());
  }

  const CharParams& params() const { return params_; }

  FlowAllocation decide(const std::vector<PathState>& state,
                        const std::vector<int>& prev_flows, int arrivals,
                        std::uint64_t, Rng& rng) const override {
    std::vector<double> prev(prev_flows.begin(), prev_flows.end());
    const AllocationCost evaluate = [&](const FlowAllocation& alloc) {
      return rollout_cost(state, prev, alloc, arrivals, scenario_, eval_depth_);
    };
    const CharDecision decision =
        char_step(state, arrivals, params_, scenario_, evaluate);

    // Realize the split: the hiding group plays its split deterministically,
    // every recommended user samples a path.
    const int m = scenario_.num_paths();
    FlowAllocation hiding_part =
        hiding_allocation(scenario_, decision.hide_count,
                          hiding_cost_estimate(scenario_));
    std::vector<int> counts = hiding_part.rounded();
    std::vector<double> beliefs(static_cast<std::size_t>(m));
    for (int i = 0; i < m; ++i) {
      beliefs[static_cast<std::size_t>(i)] = state[static_cast<std::size_t>(i)].belief;
    }
    for (int u = decision.hide_count; u < arrivals; ++u) {
      counts[static_cast<std::size_t>(sample_recommendation(beliefs, params_, rng))] += 1;
    }
    FlowAllocation out;
    out.flows.assign(counts.begin(), counts.end());
    return out;
  }
  std::string_view name() const override { return "char"; }

 private:
  Scenario scenario_;
  CharParams params_;
  int eval_depth_;
};

// Reference behaviour for worst-case studies: every arrival exploits the
// single stochastic path while its published cost beats the safe path, and
// probes it after any silent slot; otherwise everyone stays safe.
class ProbeExploitPolicy final : public RoutingPolicy {
 public:
  explicit ProbeExploitPolicy(const Scenario& scenario) : scenario_(scenario) {
    if (scenario.num_paths() != 1) {
      throw std::invalid_argument("probe-exploit: single-path scenarios only");
    }
  }
  FlowAllocation decide(const std::vector<PathState>& state,
                        const std::vector<int>& prev_flows, int arrivals,
                        std::uint64_t, Rng&) const override {
    const double prev = prev_flows.empty() ? 0.0 : prev_flows[1];
    const double intercept = state[0].exp_latency + scenario_.err(prev);
    const bool go = intercept <= scenario_.ell0 || prev == 0.0;
    FlowAllocation out;
    out.flows = go ? std::vector<double>{0.0, static_cast<double>(arrivals)}
                   : std::vector<double>{static_cast<double>(arrivals), 0.0};
    return out;
  }
  std::string_view name() const override { return "probe-exploit"; }

 private:
  Scenario scenario_;
};

}  // namespace

std::vector<std::string> policy_names() {
  return {"myopic", "hiding", "det-rec", "char", "optimal", "probe-exploit"};
}

std::unique_ptr<RoutingPolicy> make_policy(const std::string& name,
                                           const Scenario& scenario,
                                           const PolicyOptions& options) {
  if (name == "myopic") return std::make_unique<MyopicPolicy>(scenario);
  if (name == "hiding") return std::make_unique<HidingPolicy>(scenario);
  if (name == "det-rec") {
    return std::make_unique<DeterministicRecommendationPolicy>(
        scenario, options.receiver_mode);
  }
  if (name == "char") return std::make_unique<CharPolicy>(scenario, options);
  if (name == "optimal") return std::make_unique<OptimalPolicy>(scenario, options);
  if (name == "probe-exploit") return std::make_unique<ProbeExploitPolicy>(scenario);
  std::string known;
  for (const std::string& n : policy_names()) {
    if (!known.empty()) known += ", ";
    known += n;
  }
  throw std::invalid_argument("unknown policy \"" + name + "\"; valid names: " + known);
}

EpisodeTrace run_episode(const Scenario& scenario, const RoutingPolicy& policy,
                         int horizon, std::uint64_t seed) {
  if (horizon < 1) throw std::invalid_argument("run_episode: horizon must be >= 1");
  scenario.validate();
  const int m = scenario.num_paths();
  const double cap = scenario.simulation_latency_cap();

  std::vector<PathState> state(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) {
    const PathSpec& spec = scenario.paths[static_cast<std::size_t>(i)];
    PathState& p = state[static_cast<std::size_t>(i)];
    p.exp_latency = spec.initial_exp_latency;
    p.true_latency = spec.initial_exp_latency;
    p.belief = spec.initial_belief;
    Rng init = substream(seed, 0, Draw::kInit, static_cast<std::uint64_t>(i));
    const double stationary =
        spec.chain.has_stationary() ? spec.chain.stationary() : spec.initial_belief;
    p.truth_high = init.bernoulli(stationary);
  }

  EpisodeTrace trace;
  trace.seed = seed;
  trace.scenario_hash = scenario_hash(scenario);
  trace.slots.reserve(static_cast<std::size_t>(horizon));
  std::vector<int> prev_flows(static_cast<std::size_t>(m) + 1, 0);

  for (int t = 1; t <= horizon; ++t) {
    const std::uint64_t slot = static_cast<std::uint64_t>(t);
    SlotRecord rec;
    rec.prior_belief.resize(static_cast<std::size_t>(m));
    rec.exp_latency.resize(static_cast<std::size_t>(m));
    rec.true_latency.resize(static_cast<std::size_t>(m));
    for (int i = 0; i < m; ++i) {
      rec.prior_belief[static_cast<std::size_t>(i)] = state[static_cast<std::size_t>(i)].belief;
      rec.exp_latency[static_cast<std::size_t>(i)] = state[static_cast<std::size_t>(i)].exp_latency;
    }

    Rng arrivals_rng = substream(seed, slot, Draw::kArrivals);
    rec.arrivals = scenario.arrivals.sample(arrivals_rng);

    Rng policy_rng = substream(seed, slot, Draw::kRecommendation);
    FlowAllocation alloc;
    try {
      alloc = policy.decide(state, prev_flows, rec.arrivals, slot, policy_rng);
    } catch (const std::exception& e) {
      throw std::runtime_error("policy \"" + std::string(policy.name()) +
                               "\" failed at slot " + std::to_string(t) + ": " +
                               e.what());
    }
    rec.flows = alloc.rounded();

    // Truth evolves before observation: travellers see this slot's state.
    for (int i = 0; i < m; ++i) {
      Rng truth_rng = substream(seed, slot, Draw::kTruth, static_cast<std::uint64_t>(i));
      PathState& p = state[static_cast<std::size_t>(i)];
      p.truth_high = evolve_truth(scenario.paths[static_cast<std::size_t>(i)].chain,
                                  p.truth_high, truth_rng);
      rec.true_latency[static_cast<std::size_t>(i)] = p.true_latency;
    }

    std::vector<double> intercepts(static_cast<std::size_t>(m) + 1, scenario.ell0);
    for (int i = 0; i < m; ++i) {
      intercepts[static_cast<std::size_t>(i) + 1] =
          state[static_cast<std::size_t>(i)].exp_latency +
          scenario.err(prev_flows[static_cast<std::size_t>(i) + 1]);
    }
    std::vector<double> flows_real(rec.flows.begin(), rec.flows.end());
    rec.immediate_cost = immediate_social_cost(intercepts, flows_real);

    rec.summary.resize(static_cast<std::size_t>(m));
    rec.posterior_belief.resize(static_cast<std::size_t>(m));
    rec.degenerate_update.assign(static_cast<std::size_t>(m), 0);
    for (int i = 0; i < m; ++i) {
      PathState& p = state[static_cast<std::size_t>(i)];
      const int flow = rec.flows[static_cast<std::size_t>(i) + 1];
      Rng obs_rng = substream(seed, slot, Draw::kObservation, static_cast<std::uint64_t>(i));
      const HazardSummary y =
          fuse_observations(p.truth_high, flow, scenario.obs, obs_rng);
      rec.summary[static_cast<std::size_t>(i)] = y;
      const PosteriorResult post = posterior_belief(p.belief, y, flow, scenario.obs);
      rec.posterior_belief[static_cast<std::size_t>(i)] = post.belief;
      rec.degenerate_update[static_cast<std::size_t>(i)] = post.degenerate ? 1 : 0;

      p.exp_latency = std::min(
          expected_latency_update(p.exp_latency, flow, post.belief, scenario.hazard),
          cap);
      const double alpha =
          p.truth_high ? scenario.hazard.alpha_high : scenario.hazard.alpha_low;
      p.true_latency = std::min(latency_step(p.true_latency, flow, alpha), cap);
      p.belief = post.belief;
    }

    prev_flows = rec.flows;
    trace.slots.push_back(std::move(rec));
  }
  return trace;
}

DiscountedCost discounted_cost(const EpisodeTrace& trace, double rho) {
  if (rho <= 0.0 || rho >= 1.0) {
    throw std::invalid_argument("discounted_cost: rho must be in (0, 1)");
  }
  DiscountedCost out;
  double weight = 1.0;
  double c_max = 0.0;
  for (const SlotRecord& rec : trace.slots) {
    out.cost += weight * rec.immediate_cost;
    weight *= rho;
    c_max = std::max(c_max, rec.immediate_cost);
  }
  out.truncation_bound = weight * c_max / (1.0 - rho);
  return out;
}

double discounted_cost_prefix(const EpisodeTrace& trace, double rho, int horizon) {
  double cost = 0.0;
  double weight = 1.0;
  const int limit = std::min<int>(horizon, static_cast<int>(trace.slots.size()));
  for (int t = 0; t < limit; ++t) {
    cost += weight * trace.slots[static_cast<std::size_t>(t)].immediate_cost;
    weight *= rho;
  }
  return cost;
}

GapSeries convergence_diagnostic(const EpisodeTrace& trace,
                                 const TwoStateChain& chain, int path_index) {
  const double target = chain.stationary();
  GapSeries out;
  out.gap.reserve(trace.slots.size());
  for (const SlotRecord& rec : trace.slots) {
    out.gap.push_back(
        std::abs(rec.posterior_belief.at(static_cast<std::size_t>(path_index)) - target));
  }
  const std::size_t tail =
      std::max<std::size_t>(1, out.gap.size() / 10);
  out.terminal_mean =
      std::accumulate(out.gap.end() - static_cast<std::ptrdiff_t>(tail),
                      out.gap.end(), 0.0) /
      static_cast<double>(tail);
  return out;
}

CostSummary monte_carlo(const Scenario& scenario, const RoutingPolicy& policy,
                        int horizon, int replications, std::uint64_t base_seed,
                        int jobs) {
  if (replications < 1) {
    throw std::invalid_argument("monte_carlo: replications must be >= 1");
  }
  CostSummary summary;
  summary.horizon = horizon;
  summary.base_seed = base_seed;
  summary.per_episode.assign(static_cast<std::size_t>(replications), 0.0);

  auto run_range = [&](int lo, int hi) {
    for (int k = lo; k < hi; ++k) {
      Rng seeder = substream(base_seed, static_cast<std::uint64_t>(k), Draw::kGeneric);
      const std::uint64_t seed = seeder.next_u64();
      const EpisodeTrace trace = run_episode(scenario, policy, horizon, seed);
      summary.per_episode[static_cast<std::size_t>(k)] =
          discounted_cost(trace, scenario.rho).cost;
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

  const double n = static_cast<double>(replications);
  summary.mean = std::accumulate(summary.per_episode.begin(),
                                 summary.per_episode.end(), 0.0) / n;
  if (replications >= 2) {
    double ss = 0.0;
    for (double c : summary.per_episode) {
      ss += (c - summary.mean) * (c - summary.mean);
    }
    summary.std_error = std::sqrt(ss / (n - 1.0) / n);
  }
  return summary;
}

}  // namespace routelearn

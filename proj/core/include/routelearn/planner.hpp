#pragma once

#include <string>
#include <vector>

#include "routelearn/policies.hpp"
#include "routelearn/types.hpp"

namespace routelearn {

struct GridSpec {
  int belief_points = 101;
  int latency_points = 101;
  double latency_max = 0.0;  // 0 -> scenario planning cap (4 * ell0)
};

// Uniform (latency x belief) grid with clamped bilinear interpolation.
class BeliefLatencyGrid {
 public:
  BeliefLatencyGrid(int belief_points, int latency_points, double latency_max);

  int belief_points() const { return nb_; }
  int latency_points() const { return nl_; }
  double latency_max() const { return lmax_; }
  double belief_at(int i) const { return static_cast<double>(i) / (nb_ - 1); }
  double latency_at(int j) const {
    return lmax_ * static_cast<double>(j) / (nl_ - 1);
  }
  std::size_t index(int lat_idx, int belief_idx) const {
    return static_cast<std::size_t>(lat_idx) * static_cast<std::size_t>(nb_) +
           static_cast<std::size_t>(belief_idx);
  }
  double interpolate(const std::vector<double>& table, double latency,
                     double belief) const;

 private:
  int nb_;
  int nl_;
  double lmax_;
};

// Converged long-run cost table for a single stochastic path, with the
// greedy flow at mean arrivals per grid point.
struct ValueFunction {
  BeliefLatencyGrid grid;
  std::vector<double> values;
  std::vector<double> greedy;
  double residual = 0.0;
  int sweeps = 0;

  double value_at(double latency, double belief) const {
    return grid.interpolate(values, latency, belief);
  }
};

// One Bellman evaluation at a single-path state: immediate social cost of
// sending `flow` of `arrivals` users to the stochastic path plus the
// discounted expected continuation over the fused-summary branches.
// The error cost inside the backup is V evaluated at the candidate flow
// itself (the stationary proxy keeping the state two-dimensional).
double bellman_backup(double exp_latency, double belief, double flow,
                      int arrivals, const Scenario& scenario,
                      const ValueFunction& value);

// Synchronous value iteration for a one-stochastic-path scenario. Stops when
// the sup-norm residual drops below tol * (1 - rho) / rho or at the sweep
// cap. Arrival supports wider than 21 values are collapsed to the mean.
ValueFunction value_iteration(const Scenario& scenario,
                              const GridSpec& spec = {}, double tol = 1e-3,
                              int max_sweeps = 4000, int jobs = 1);

// Greedy flow at one state / arrival count; enumerates candidate flows at
// `resolution` spacing, ties toward the smaller flow.
double greedy_flow(double exp_latency, double belief, int arrivals,
                   const Scenario& scenario, const ValueFunction& value,
                   double resolution = 1.0);

struct RolloutConfig {
  int depth = 3;  // decision slots evaluated; 1 = immediate cost only
  const ValueFunction* value = nullptr;  // used when M == 1
};

// Long-run cost of playing `alloc` now and the myopic base policy for the
// remaining depth-1 slots, branching over every fused-summary outcome; the
// tail beyond the horizon repeats the final slot's base-policy cost.
double rollout_cost(const std::vector<PathState>& state,
                    const std::vector<double>& prev_flows,
                    const FlowAllocation& alloc, int arrivals,
                    const Scenario& scenario, int depth);

// Socially optimal split at the current state: grid-greedy when a solved
// value function is supplied (M == 1), otherwise rollout-scored local search
// seeded at the one-shot social optimum. Ties prefer less stochastic flow.
FlowAllocation optimal_allocation(const std::vector<PathState>& state,
                                  const std::vector<double>& prev_flows,
                                  int arrivals, const Scenario& scenario,
                                  const RolloutConfig& config = {});

// One-shot social optimum with unit slopes: equalizes marginal costs
// intercept_i + 2 n_i across used paths.
FlowAllocation social_one_shot_allocation(const std::vector<double>& intercepts,
                                          double total_flow);

struct ThresholdResult {
  double x_threshold = 0.0;
  bool crossed = false;  // false: no sign change; threshold set to a boundary
};

// Belief where the planner's flow overtakes the myopic flow along the slice
// exp_latency(x) = expected_alpha(x) * slice_anchor, located by bisection to
// 1e-3. Requires a one-stochastic-path scenario and its solved value table.
ThresholdResult exploration_threshold(const Scenario& scenario,
                                      double slice_anchor,
                                      const ValueFunction& value);

// Myopic flow on the threshold slice at belief x (self-consistent error
// term), exposed for structural tests.
double myopic_flow_on_slice(const Scenario& scenario, double slice_anchor,
                            double belief, int arrivals);

// One-stochastic-path reduction used for threshold solves on multi-path
// scenarios: same costs, observation and discounting, arrivals scaled 1/M.
Scenario single_path_restriction(const Scenario& scenario);

// One row per grid point: belief, latency, value, greedy flow.
void export_value_function(const ValueFunction& value, const std::string& path,
                           const std::string& header_comment = {});

}  // namespace routelearn

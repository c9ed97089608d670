#include <doctest.h>

#include <stdexcept>

#include <cmath>
#include <limits>

#include "routelearn/dynamics.hpp"
#include "routelearn/planner.hpp"
#include "test_scenarios.hpp"

using namespace routelearn;
using routelearn::testing::desk_scenario;

namespace {

ValueFunction zero_value(const Scenario& s, int points = 21) {
  BeliefLatencyGrid grid(points, points, s.planning_latency_cap());
  ValueFunction vf{grid, {}, {}, 0.0, 0};
  vf.values.assign(static_cast<std::size_t>(points) * points, 0.0);
  vf.greedy.assign(vf.values.size(), 0.0);
  return vf;
}

// One-shot social cost minimizer by brute force, the independent oracle for
// the quadratic structure.
int one_shot_argmin(double c_safe, double c_stoch, int arrivals) {
  int best_n = 0;
  double best = std::numeric_limits<double>::infinity();
  for (int n = 0; n <= arrivals; ++n) {
    const double cost =
        n * (c_stoch + n) + (arrivals - n) * (c_safe + arrivals - n);
    if (cost < best) {
      best = cost;
      best_n = n;
    }
  }
  return best_n;
}

}  // namespace

TEST_CASE("bellman_backup: zero-flow branch keeps the belief") {
  Scenario s = desk_scenario(25.0, 0.0, 10);
  // Linear table interpolates exactly: value = latency + 1000 * belief.
  ValueFunction vf = zero_value(s, 31);
  const BeliefLatencyGrid& g = vf.grid;
  for (int j = 0; j < g.latency_points(); ++j) {
    for (int i = 0; i < g.belief_points(); ++i) {
      vf.values[g.index(j, i)] = g.latency_at(j) + 1000.0 * g.belief_at(i);
    }
  }
  const double ell = 12.0, x = 0.4;
  const double immediate = 10.0 * (s.ell0 + 10.0);
  const double next_ell = expected_alpha(x, s.hazard) * ell;
  const double expected = immediate + s.rho * (next_ell + 1000.0 * x);
  CHECK(bellman_backup(ell, x, 0.0, 10, s, vf) ==
        doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("bellman_backup: one-shot minimizer has the quarter coefficient") {
  // With a zero continuation the backup is the one-shot quadratic; at
  // intercept gap 4 the social argmin is 6 while the myopic split is 7.
  Scenario s = desk_scenario(24.0, 0.0, 10);
  const ValueFunction vf = zero_value(s);
  const double exp_ell = 20.0;  // gap c0 - c1 = 4

  CHECK(one_shot_argmin(24.0, 20.0, 10) == 6);
  double best_flow = -1.0;
  double best = std::numeric_limits<double>::infinity();
  for (int n = 0; n <= 10; ++n) {
    const double c = bellman_backup(exp_ell, 0.5, n, 10, s, vf);
    if (c < best) {
      best = c;
      best_flow = n;
    }
  }
  CHECK(best_flow == doctest::Approx(6.0));

  const FlowAllocation myopic = myopic_allocation({24.0, 20.0}, 10.0);
  CHECK(myopic.flows[1] == doctest::Approx(7.0));
}

TEST_CASE("one-shot greedy slope on the intercept gap is 1/4, myopic is 1/2") {
  Scenario s = desk_scenario(30.0, 0.0, 40);
  const ValueFunction vf = zero_value(s);
  // Sweep the gap and regress both responses on it.
  double sum_g = 0.0, sum_gg = 0.0, sum_gp = 0.0, sum_p = 0.0;
  double sum_gm = 0.0, sum_m = 0.0;
  int count = 0;
  for (double gap = -8.0; gap <= 8.0; gap += 0.5) {
    const double exp_ell = s.ell0 - gap;
    const double planner = greedy_flow(exp_ell, 0.5, 40, s, vf, 0.05);
    const double myopic = myopic_allocation({s.ell0, exp_ell}, 40.0).flows[1];
    sum_g += gap;
    sum_gg += gap * gap;
    sum_gp += gap * planner;
    sum_p += planner;
    sum_gm += gap * myopic;
    sum_m += myopic;
    ++count;
  }
  const double denom = count * sum_gg - sum_g * sum_g;
  const double slope_planner = (count * sum_gp - sum_g * sum_p) / denom;
  const double slope_myopic = (count * sum_gm - sum_g * sum_m) / denom;
  CHECK(slope_planner == doctest::Approx(0.25).epsilon(0.02));
  CHECK(slope_myopic == doctest::Approx(0.5).epsilon(1e-9));
}

TEST_CASE("value_iteration: converges, monotone, and self-consistent") {
  Scenario s = desk_scenario(25.0, 2.0, 10);
  const GridSpec spec{41, 41, 0.0};
  const double tol = 1e-3;
  const ValueFunction vf = value_iteration(s, spec, tol);
  const double stop = tol * (1.0 - s.rho) / s.rho;
  CHECK(vf.residual < stop);

  // Re-applying one backup moves no grid value beyond the contraction bound.
  double max_change = 0.0;
  for (int j = 0; j < vf.grid.latency_points(); ++j) {
    for (int i = 0; i < vf.grid.belief_points(); ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (int n = 0; n <= 10; ++n) {
        best = std::min(best, bellman_backup(vf.grid.latency_at(j),
                                             vf.grid.belief_at(i), n, 10, s, vf));
      }
      max_change = std::max(max_change,
                            std::abs(best - vf.values[vf.grid.index(j, i)]));
    }
  }
  CHECK(max_change <= tol * (1.0 + s.rho) / (1.0 - s.rho));

  // Values rise with latency and with hazard belief.
  for (int j = 0; j < vf.grid.latency_points(); ++j) {
    for (int i = 0; i + 1 < vf.grid.belief_points(); ++i) {
      CHECK(vf.values[vf.grid.index(j, i + 1)] >=
            vf.values[vf.grid.index(j, i)] - 1e-6);
    }
  }
  for (int j = 0; j + 1 < vf.grid.latency_points(); ++j) {
    for (int i = 0; i < vf.grid.belief_points(); ++i) {
      CHECK(vf.values[vf.grid.index(j + 1, i)] >=
            vf.values[vf.grid.index(j, i)] - 1e-6);
    }
  }

  // Positive values, greedy within range.
  for (std::size_t k = 0; k < vf.values.size(); ++k) {
    CHECK(vf.values[k] >= 0.0);
    CHECK(vf.greedy[k] >= 0.0);
    CHECK(vf.greedy[k] <= 10.0);
  }
}

TEST_CASE("value_iteration: near-degenerate hazard gives the symmetric split") {
  // alpha_H == alpha_L is ruled out by the type invariants; the closest
  // admissible pair makes learning worthless and the greedy split symmetric
  // at states with equal intercepts.
  Scenario s = desk_scenario(25.0, 0.0, 10);
  s.hazard = {1.0, 0.999999};
  const ValueFunction vf = value_iteration(s, GridSpec{41, 41, 0.0});
  for (double x : {0.0, 0.25, 0.5, 0.75, 1.0}) {
    const double flow = greedy_flow(s.ell0, x, 10, s, vf);
    CHECK(flow == doctest::Approx(5.0).epsilon(0.11));
  }
}

TEST_CASE("value_iteration: grid refinement self-consistency") {
  Scenario s = desk_scenario(25.0, 2.0, 10);
  const ValueFunction coarse = value_iteration(s, GridSpec{51, 51, 0.0});
  const ValueFunction fine = value_iteration(s, GridSpec{101, 101, 0.0});
  const double at_coarse = coarse.value_at(20.0, 0.4);
  const double at_fine = fine.value_at(20.0, 0.4);
  CHECK(std::abs(at_fine - at_coarse) / at_fine < 0.02);
}

TEST_CASE("optimal_allocation: explores where myopic stays home") {
  // High published latency, tiny error cost: myopic sends nobody, the
  // planner still probes (the stochastic path may be in the cheap state).
  Scenario s = desk_scenario(25.0, 0.5, 10);
  s.hazard = {1.3, 0.0};
  const ValueFunction vf = value_iteration(s, GridSpec{61, 61, 0.0});
  const double exp_ell = 60.0;  // well above ell0 + N
  const double x = 0.6;
  const FlowAllocation myopic =
      myopic_allocation({s.ell0, exp_ell + s.err(0.0)}, 10.0);
  CHECK(myopic.flows[1] == doctest::Approx(0.0));
  const double planner = greedy_flow(exp_ell, x, 10, s, vf);
  CHECK(planner > 0.0);
}

TEST_CASE("optimal_allocation: certain free path takes the capped split") {
  Scenario s = desk_scenario(30.0, 0.0, 10);
  s.hazard = {1.3, 0.0};
  const ValueFunction vf = value_iteration(s, GridSpec{61, 61, 0.0});
  // x = 0 and alpha_L = 0: the path costs nothing and stays free.
  const double planner = greedy_flow(0.0, 0.0, 10, s, vf);
  const double myopic = myopic_allocation({s.ell0, 0.0}, 10.0).flows[1];
  CHECK(myopic == doctest::Approx(10.0));  // ell0 >= N: all-in
  CHECK(planner <= myopic + 1e-9);
  CHECK(planner == doctest::Approx(10.0));
}

TEST_CASE("rollout depth 1 returns a local one-shot optimum") {
  Scenario s = testing::desk_scenario_m(2, 25.0, 2.0, 12);
  std::vector<PathState> state(2);
  state[0] = {12.0, 0.3, false, 12.0};
  state[1] = {18.0, 0.6, false, 18.0};
  const std::vector<double> prev{0.0, 0.0, 0.0};
  RolloutConfig config;
  config.depth = 1;
  const FlowAllocation alloc = optimal_allocation(state, prev, 12, s, config);
  CHECK(alloc.total() == doctest::Approx(12.0));

  const std::vector<double> intercepts{
      s.ell0, state[0].exp_latency + s.err(0.0), state[1].exp_latency + s.err(0.0)};
  const double base_cost = immediate_social_cost(intercepts, alloc.flows);
  for (std::size_t from = 0; from < alloc.flows.size(); ++from) {
    if (alloc.flows[from] < 1.0) continue;
    for (std::size_t to = 0; to < alloc.flows.size(); ++to) {
      if (to == from) continue;
      FlowAllocation moved = alloc;
      moved.flows[from] -= 1.0;
      moved.flows[to] += 1.0;
      CHECK(immediate_social_cost(intercepts, moved.flows) >= base_cost - 1e-9);
    }
  }
}

TEST_CASE("exploration threshold: sign change, monotone difference, v0 shift") {
  Scenario low_error = desk_scenario(30.0, 5.0, 10);
  low_error.hazard = {1.3, 0.1};
  const GridSpec spec{81, 81, 0.0};
  const ValueFunction vf_low = value_iteration(low_error, spec);

  const double anchor = low_error.ell0;
  const ThresholdResult th_low = exploration_threshold(low_error, anchor, vf_low);
  CHECK(th_low.crossed);
  CHECK(th_low.x_threshold > 0.0);
  CHECK(th_low.x_threshold < 1.0);

  // Difference planner - myopic is nondecreasing along the slice and changes
  // sign exactly once (tolerating sub-resolution wiggle).
  const int arrivals = 10;
  const double resolution = 0.2;
  double previous = -1e9;
  int sign_changes = 0;
  bool positive_seen = false;
  for (int k = 0; k <= 50; ++k) {
    const double x = k / 50.0;
    const double exp_ell = expected_alpha(x, low_error.hazard) * anchor;
    const double diff =
        greedy_flow(exp_ell, x, arrivals, low_error, vf_low, resolution) -
        myopic_flow_on_slice(low_error, anchor, x, arrivals);
    CHECK(diff >= previous - 1.2 * resolution);
    if (positive_seen && diff <= -1.2 * resolution) ++sign_changes;
    if (!positive_seen && diff > 0.0) {
      positive_seen = true;
      ++sign_changes;
    }
    previous = std::max(previous, diff);
  }
  CHECK(sign_changes == 1);

  // Pricier observations push the threshold up.
  Scenario high_error = low_error;
  high_error.err.v0 = 20.0;
  const ValueFunction vf_high = value_iteration(high_error, spec);
  const ThresholdResult th_high = exploration_threshold(high_error, anchor, vf_high);
  CHECK(th_high.crossed);
  CHECK(th_high.x_threshold > th_low.x_threshold);

  // Degenerate hazard: policies coincide, no crossing.
  Scenario degenerate = desk_scenario(25.0, 0.0, 10);
  degenerate.hazard = {1.0, 0.999999};
  const ValueFunction vf_degen = value_iteration(degenerate, GridSpec{41, 41, 0.0});
  const ThresholdResult th_degen =
      exploration_threshold(degenerate, degenerate.ell0, vf_degen);
  CHECK_FALSE(th_degen.crossed);
}

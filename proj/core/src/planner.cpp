#include "routelearn/planner.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <thread>

#include "routelearn/dynamics.hpp"

namespace routelearn {

BeliefLatencyGrid::BeliefLatencyGrid(int belief_points, int latency_points,
                                     double latency_max)
    : nb_(belief_points), nl_(latency_points), lmax_(latency_max) {
  if (nb_ < 2 || nl_ < 2 || lmax_ <= 0.0) {
    throw std::invalid_argument("grid: need >= 2 points per axis and a positive cap");
  }
}

double BeliefLatencyGrid::interpolate(const std::vector<double>& table,
                                      double latency, double belief) const {
  const double lx = std::clamp(latency, 0.0, lmax_) / lmax_ * (nl_ - 1);
  const double bx = std::clamp(belief, 0.0, 1.0) * (nb_ - 1);
  const int j0 = std::min(static_cast<int>(lx), nl_ - 2);
  const int i0 = std::min(static_cast<int>(bx), nb_ - 2);
  const double tj = lx - j0;
  const double ti = bx - i0;
  const double v00 = table[index(j0, i0)];
  const double v01 = table[index(j0, i0 + 1)];
  const double v10 = table[index(j0 + 1, i0)];
  const double v11 = table[index(j0 + 1, i0 + 1)];
  return (1.0 - tj) * ((1.0 - ti) * v00 + ti * v01) +
         tj * ((1.0 - ti) * v10 + ti * v11);
}

namespace {

struct Posteriors {
  double p_hazard = 0.0;  // model probability of a hazard summary
  double post_hazard = 0.0;
  double post_clear = 0.0;
};

Posteriors branch_posteriors(double belief, double flow,
                             const ObservationModel& obs) {
  const GroupObsProbs q = group_obs_probs_real(flow, obs);
  Posteriors b;
  b.p_hazard = belief * q.q_high + (1.0 - belief) * q.q_low;
  const double d1 = belief * q.q_high + (1.0 - belief) * q.q_low;
  b.post_hazard = d1 > 0.0 ? belief * q.q_high / d1 : belief;
  const double d0 = belief * (1.0 - q.q_high) + (1.0 - belief) * (1.0 - q.q_low);
  b.post_clear = d0 > 0.0 ? belief * (1.0 - q.q_high) / d0 : belief;
  return b;
}

}  // namespace

double bellman_backup(double exp_latency, double belief, double flow,
                      int arrivals, const Scenario& scenario,
                      const ValueFunction& value) {
  const double safe_flow = arrivals - flow;
  const double immediate =
      flow * (exp_latency + flow + scenario.err(flow)) +
      safe_flow * (scenario.ell0 + safe_flow);
  double future;
  if (flow <= 0.0) {
    const double next_ell = expected_alpha(belief, scenario.hazard) * exp_latency;
    future = value.value_at(next_ell, belief);
  } else {
    const Posteriors b = branch_posteriors(belief, flow, scenario.obs);
    const double base = exp_latency + flow;
    const double ell_hazard = expected_alpha(b.post_hazard, scenario.hazard) * base;
    const double ell_clear = expected_alpha(b.post_clear, scenario.hazard) * base;
    future = b.p_hazard * value.value_at(ell_hazard, b.post_hazard) +
             (1.0 - b.p_hazard) * value.value_at(ell_clear, b.post_clear);
  }
  return immediate + scenario.rho * future;
}

namespace {

// Arrival support for grid solves; wide supports collapse to the mean.
std::vector<std::pair<int, double>> solve_arrivals(const ArrivalModel& a) {
  const int span = a.n_max - a.n_min + 1;
  if (span > 21) {
    return {{static_cast<int>(std::lround(a.mean)), 1.0}};
  }
  std::vector<std::pair<int, double>> out;
  const std::vector<double> pmf = a.pmf();
  out.reserve(pmf.size());
  for (int k = 0; k < span; ++k) {
    out.emplace_back(a.n_min + k, pmf[static_cast<std::size_t>(k)]);
  }
  return out;
}

}  // namespace

ValueFunction value_iteration(const Scenario& scenario, const GridSpec& spec,
                              double tol, int max_sweeps, int jobs) {
  if (scenario.num_paths() != 1) {
    throw std::invalid_argument("value_iteration: requires exactly one stochastic path");
  }
  if (tol <= 0.0) throw std::invalid_argument("value_iteration: tol must be > 0");
  const double lmax =
      spec.latency_max > 0.0 ? spec.latency_max : scenario.planning_latency_cap();
  BeliefLatencyGrid grid(spec.belief_points, spec.latency_points, lmax);
  ValueFunction vf{grid,
                   std::vector<double>(grid.index(grid.latency_points() - 1,
                                                  grid.belief_points() - 1) +
                                           1,
                                       0.0),
                   {},
                   0.0,
                   0};
  vf.greedy.assign(vf.values.size(), 0.0);

  const std::vector<std::pair<int, double>> arrivals = solve_arrivals(scenario.arrivals);
  const double stop = tol * (1.0 - scenario.rho) / scenario.rho;
  std::vector<double> next(vf.values.size(), 0.0);

  const int rows = grid.latency_points();
  const int cols = grid.belief_points();
  const int workers = std::max(1, jobs);

  for (int sweep = 1; sweep <= max_sweeps; ++sweep) {
    auto run_rows = [&](int row_begin, int row_end) {
      for (int j = row_begin; j < row_end; ++j) {
        const double ell = grid.latency_at(j);
        for (int i = 0; i < cols; ++i) {
          const double x = grid.belief_at(i);
          double expected = 0.0;
          for (const auto& [n_total, weight] : arrivals) {
            double best = std::numeric_limits<double>::infinity();
            for (int n = 0; n <= n_total; ++n) {
              const double c = bellman_backup(ell, x, n, n_total, scenario, vf);
              if (c < best) best = c;
            }
            expected += weight * best;
          }
          next[grid.index(j, i)] = expected;
        }
      }
    };
    if (workers == 1) {
      run_rows(0, rows);
    } else {
      std::vector<std::thread> pool;
      const int chunk = (rows + workers - 1) / workers;
      for (int w = 0; w < workers; ++w) {
        const int lo = w * chunk;
        const int hi = std::min(rows, lo + chunk);
        if (lo < hi) pool.emplace_back(run_rows, lo, hi);
      }
      for (std::thread& t : pool) t.join();
    }

    double residual = 0.0;
    for (std::size_t k = 0; k < next.size(); ++k) {
      residual = std::max(residual, std::abs(next[k] - vf.values[k]));
      if (!std::isfinite(next[k])) {
        const int j = static_cast<int>(k) / cols;
        const int i = static_cast<int>(k) % cols;
        throw std::runtime_error(
            "value_iteration: non-finite value at latency index " +
            std::to_string(j) + ", belief index " + std::to_string(i));
      }
    }
    vf.values.swap(next);
    vf.residual = residual;
    vf.sweeps = sweep;
    if (residual < stop) break;
  }

  const int n_mean = static_cast<int>(std::lround(scenario.arrivals.mean));
  for (int j = 0; j < rows; ++j) {
    const double ell = grid.latency_at(j);
    for (int i = 0; i < cols; ++i) {
      vf.greedy[grid.index(j, i)] =
          greedy_flow(ell, grid.belief_at(i), n_mean, scenario, vf);
    }
  }
  return vf;
}

double greedy_flow(double exp_latency, double belief, int arrivals,
                   const Scenario& scenario, const ValueFunction& value,
                   double resolution) {
  double best_flow = 0.0;
  double best = std::numeric_limits<double>::infinity();
  const double step = std::max(resolution, 1e-6);
  for (double n = 0.0; n <= arrivals + 1e-9; n += step) {
    const double flow = std::min(n, static_cast<double>(arrivals));
    const double c =
        bellman_backup(exp_latency, belief, flow, arrivals, scenario, value);
    if (c < best - 1e-12) {
      best = c;
      best_flow = flow;
    }
  }
  return best_flow;
}

FlowAllocation social_one_shot_allocation(const std::vector<double>& intercepts,
                                          double total_flow) {
  const std::size_t m = intercepts.size();
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), 0u);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return intercepts[a] < intercepts[b];
  });
  double level = 0.0;
  std::size_t active = 0;
  double intercept_sum = 0.0;
  for (std::size_t k = 0; k < m; ++k) {
    intercept_sum += intercepts[order[k]];
    active = k + 1;
    level = (2.0 * total_flow + intercept_sum) / static_cast<double>(active);
    if (!(k + 1 < m && intercepts[order[k + 1]] < level)) break;
  }
  FlowAllocation out;
  out.flows.assign(m, 0.0);
  for (std::size_t k = 0; k < active; ++k) {
    out.flows[order[k]] = std::max(0.0, 0.5 * (level - intercepts[order[k]]));
  }
  return out;
}

namespace {

struct Branch {
  double probability = 1.0;
  std::vector<PathState> state;
};

// Expands the fused-summary outcomes of one slot and applies the belief and
// expected-latency updates. Fractional flows below one user observe with
// probability equal to the flow.
std::vector<Branch> expand_branches(const std::vector<PathState>& state,
                                    const std::vector<double>& flows,
                                    const Scenario& scenario) {
  const double cap = scenario.simulation_latency_cap();
  std::vector<Branch> branches{{1.0, state}};
  for (std::size_t i = 0; i < state.size(); ++i) {
    const double flow = flows[i + 1];
    auto updated = [&](const PathState& p, double posterior) {
      PathState n = p;
      n.belief = posterior;
      n.exp_latency = std::min(
          expected_alpha(posterior, scenario.hazard) * (p.exp_latency + flow),
          cap);
      return n;
    };
    if (flow <= 0.0) {
      for (Branch& b : branches) b.state[i] = updated(b.state[i], b.state[i].belief);
      continue;
    }
    const double p_observe = std::min(flow, 1.0);
    const Posteriors post =
        branch_posteriors(state[i].belief, std::max(flow, 1.0), scenario.obs);
    std::vector<Branch> grown;
    grown.reserve(branches.size() * 3);
    for (const Branch& b : branches) {
      const double outcomes[3] = {p_observe * post.p_hazard,
                                  p_observe * (1.0 - post.p_hazard),
                                  1.0 - p_observe};
      const double posteriors[3] = {post.post_hazard, post.post_clear,
                                    b.state[i].belief};
      for (int y = 0; y < 3; ++y) {
        if (outcomes[y] <= 0.0) continue;
        Branch nb = b;
        nb.probability *= outcomes[y];
        nb.state[i] = updated(nb.state[i], posteriors[y]);
        grown.push_back(std::move(nb));
      }
    }
    branches.swap(grown);
  }
  return branches;
}

}  // namespace

double rollout_cost(const std::vector<PathState>& state,
                    const std::vector<double>& prev_flows,
                    const FlowAllocation& alloc, int arrivals,
                    const Scenario& scenario, int depth) {
  std::vector<double> intercepts(state.size() + 1, scenario.ell0);
  for (std::size_t i = 0; i < state.size(); ++i) {
    const double prev = prev_flows.empty() ? 0.0 : prev_flows[i + 1];
    intercepts[i + 1] = state[i].exp_latency + scenario.err(prev);
  }
  const double immediate = immediate_social_cost(intercepts, alloc.flows);
  if (depth <= 1) {
    // Tail: the last slot's cost repeats forever.
    return immediate / (1.0 - scenario.rho);
  }
  const std::vector<Branch> branches = expand_branches(state, alloc.flows, scenario);
  const int next_arrivals = static_cast<int>(std::lround(scenario.arrivals.mean));
  double future = 0.0;
  for (const Branch& b : branches) {
    std::vector<double> next_intercepts(b.state.size() + 1, scenario.ell0);
    for (std::size_t i = 0; i < b.state.size(); ++i) {
      next_intercepts[i + 1] = b.state[i].exp_latency + scenario.err(alloc.flows[i + 1]);
    }
    const FlowAllocation base =
        myopic_allocation(next_intercepts, next_arrivals);
    future += b.probability * rollout_cost(b.state, alloc.flows, base,
                                           next_arrivals, scenario, depth - 1);
  }
  return immediate + scenario.rho * future;
}

FlowAllocation optimal_allocation(const std::vector<PathState>& state,
                                  const std::vector<double>& prev_flows,
                                  int arrivals, const Scenario& scenario,
                                  const RolloutConfig& config) {
  const int m = scenario.num_paths();
  if (m == 1 && config.value != nullptr) {
    const double flow =
        greedy_flow(state[0].exp_latency, state[0].belief, arrivals, scenario,
                    *config.value);
    FlowAllocation out;
    out.flows = {arrivals - flow, flow};
    return out;
  }

  std::vector<double> intercepts(state.size() + 1, scenario.ell0);
  for (std::size_t i = 0; i < state.size(); ++i) {
    const double prev = prev_flows.empty() ? 0.0 : prev_flows[i + 1];
    intercepts[i + 1] = state[i].exp_latency + scenario.err(prev);
  }

  auto stochastic_total = [](const FlowAllocation& a) {
    return a.total() - a.flows[0];
  };
  auto evaluate = [&](const FlowAllocation& a) {
    return rollout_cost(state, prev_flows, a, arrivals, scenario, config.depth);
  };

  // Integer seeds: one-shot social optimum, myopic, all-safe.
  std::vector<FlowAllocation> seeds;
  auto to_integer = [&](FlowAllocation a) {
    const std::vector<int> r = a.rounded();
    for (std::size_t i = 0; i < a.flows.size(); ++i) a.flows[i] = r[i];
    return a;
  };
  seeds.push_back(to_integer(social_one_shot_allocation(intercepts, arrivals)));
  seeds.push_back(to_integer(myopic_allocation(intercepts, arrivals)));
  FlowAllocation all_safe;
  all_safe.flows.assign(static_cast<std::size_t>(m) + 1, 0.0);
  all_safe.flows[0] = arrivals;
  seeds.push_back(all_safe);

  FlowAllocation best;
  double best_cost = std::numeric_limits<double>::infinity();
  auto consider = [&](const FlowAllocation& a, double cost) {
    if (cost < best_cost - 1e-12 ||
        (std::abs(cost - best_cost) <= 1e-12 &&
         stochastic_total(a) < stochastic_total(best) - 1e-12)) {
      best_cost = cost;
      best = a;
    }
  };
  for (const FlowAllocation& s : seeds) consider(s, evaluate(s));

  // Local search: shift one user between path pairs while it helps.
  bool improved = true;
  int guard = 16 * (arrivals + 1);
  while (improved && guard-- > 0) {
    improved = false;
    FlowAllocation current = best;
    for (std::size_t from = 0; from < current.flows.size(); ++from) {
      if (current.flows[from] < 1.0) continue;
      for (std::size_t to = 0; to < current.flows.size(); ++to) {
        if (to == from) continue;
        FlowAllocation moved = current;
        moved.flows[from] -= 1.0;
        moved.flows[to] += 1.0;
        const double cost = evaluate(moved);
        if (cost < best_cost - 1e-12) {
          consider(moved, cost);
          improved = true;
        }
      }
    }
  }
  return best;
}

double myopic_flow_on_slice(const Scenario& scenario, double slice_anchor,
                            double belief, int arrivals) {
  const double exp_ell =
      expected_alpha(belief, scenario.hazard) * slice_anchor;
  // Self-consistent error term: yesterday's myopic flow resembles today's.
  double n = 0.5 * arrivals;
  for (int iter = 0; iter < 200; ++iter) {
    const double target = std::clamp(
        0.5 * arrivals + 0.5 * (scenario.ell0 - exp_ell - scenario.err(n)), 0.0,
        static_cast<double>(arrivals));
    n = 0.5 * n + 0.5 * target;
  }
  return n;
}

ThresholdResult exploration_threshold(const Scenario& scenario,
                                      double slice_anchor,
                                      const ValueFunction& value) {
  if (scenario.num_paths() != 1) {
    throw std::invalid_argument("exploration_threshold: requires one stochastic path");
  }
  const int arrivals = static_cast<int>(std::lround(scenario.arrivals.mean));
  const double resolution = std::max(0.2, arrivals / 50.0);
  auto difference = [&](double x) {
    const double exp_ell = expected_alpha(x, scenario.hazard) * slice_anchor;
    const double planner =
        greedy_flow(exp_ell, x, arrivals, scenario, value, resolution);
    return planner - myopic_flow_on_slice(scenario, slice_anchor, x, arrivals);
  };

  const int scan_points = 101;
  double lo = 0.0;
  double hi = -1.0;
  double previous = difference(0.0);
  for (int k = 1; k < scan_points; ++k) {
    const double x = static_cast<double>(k) / (scan_points - 1);
    const double d = difference(x);
    if (previous <= 0.0 && d > 0.0) {
      lo = static_cast<double>(k - 1) / (scan_points - 1);
      hi = x;
      break;
    }
    previous = d;
  }
  if (hi < 0.0) {
    // No crossing: everything over- or under-explores.
    const bool always_under = difference(0.0) > 0.0;
    return {always_under ? 0.0 : 1.0, false};
  }
  while (hi - lo > 1e-3) {
    const double mid = 0.5 * (lo + hi);
    if (difference(mid) > 0.0) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return {0.5 * (lo + hi), true};
}

Scenario single_path_restriction(const Scenario& scenario) {
  Scenario out = scenario;
  const int m = scenario.num_paths();
  if (m == 1) return out;
  PathSpec representative = scenario.paths.front();
  double mean_latency = 0.0;
  double mean_belief = 0.0;
  for (const PathSpec& p : scenario.paths) {
    mean_latency += p.initial_exp_latency;
    mean_belief += p.initial_belief;
  }
  representative.initial_exp_latency = mean_latency / m;
  representative.initial_belief = mean_belief / m;
  out.paths = {representative};
  out.arrivals.n_min = std::max(1, scenario.arrivals.n_min / m);
  out.arrivals.n_max = std::max(out.arrivals.n_min, scenario.arrivals.n_max / m);
  out.arrivals.mean = std::clamp(scenario.arrivals.mean / m,
                                 static_cast<double>(out.arrivals.n_min),
                                 static_cast<double>(out.arrivals.n_max));
  return out;
}

void export_value_function(const ValueFunction& value, const std::string& path,
                           const std::string& header_comment) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("export_value_function: cannot open " + path);
  if (!header_comment.empty()) out << "# " << header_comment << "\n";
  out << "belief,latency,value,greedy_flow\n";
  const BeliefLatencyGrid& g = value.grid;
  for (int j = 0; j < g.latency_points(); ++j) {
    for (int i = 0; i < g.belief_points(); ++i) {
      out << g.belief_at(i) << ',' << g.latency_at(j) << ','
          << value.values[g.index(j, i)] << ',' << value.greedy[g.index(j, i)]
          << '\n';
    }
  }
}

}  // namespace routelearn

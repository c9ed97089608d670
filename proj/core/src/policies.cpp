#include "routelearn/policies.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace routelearn {

FlowAllocation myopic_allocation(const std::vector<double>& intercepts,
                                 double total_flow) {
  if (intercepts.empty()) throw std::invalid_argument("myopic_allocation: no paths");
  if (total_flow < 0.0) throw std::invalid_argument("myopic_allocation: negative flow");
  const std::size_t m = intercepts.size();
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), 0u);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return intercepts[a] < intercepts[b];
  });
  // Raise the common cost level until the budget is spent. With k active
  // paths the level is (flow + sum of their intercepts) / k.
  double level = 0.0;
  std::size_t active = 0;
  double intercept_sum = 0.0;
  for (std::size_t k = 0; k < m; ++k) {
    intercept_sum += intercepts[order[k]];
    active = k + 1;
    level = (total_flow + intercept_sum) / static_cast<double>(active);
    const bool next_joins =
        k + 1 < m && intercepts[order[k + 1]] < level;
    if (!next_joins) break;
  }
  FlowAllocation out;
  out.flows.assign(m, 0.0);
  for (std::size_t k = 0; k < active; ++k) {
    out.flows[order[k]] = std::max(0.0, level - intercepts[order[k]]);
  }
  return out;
}

std::vector<int> best_response_allocation(const std::vector<double>& intercepts,
                                          int total_flow) {
  const std::size_t m = intercepts.size();
  std::vector<int> n(m, 0);
  n[0] = total_flow;  // everyone starts on the safe path
  const double eps = 1e-9;
  bool moved = true;
  long safety = static_cast<long>(total_flow) * static_cast<long>(m) * 64 + 64;
  while (moved && safety-- > 0) {
    moved = false;
    for (std::size_t from = 0; from < m; ++from) {
      if (n[from] == 0) continue;
      const double cost_here = intercepts[from] + n[from];
      std::size_t best = from;
      double best_cost = cost_here - eps;
      for (std::size_t to = 0; to < m; ++to) {
        if (to == from) continue;
        const double cost_there = intercepts[to] + n[to] + 1.0;
        if (cost_there < best_cost) {
          best = to;
          best_cost = cost_there;
        }
      }
      if (best != from) {
        n[from] -= 1;
        n[best] += 1;
        moved = true;
      }
    }
  }
  return n;
}

std::vector<double> hiding_cost_estimate(const Scenario& scenario) {
  const double cap = scenario.planning_latency_cap();
  const double nominal_flow = scenario.arrivals.mean / scenario.num_paths();
  double expected_steady = 0.0;
  for (std::size_t j = 0; j < scenario.prior_xbar.support.size(); ++j) {
    const double a = expected_alpha(scenario.prior_xbar.support[j], scenario.hazard);
    const double steady =
        a < 1.0 ? std::min(cap, a * nominal_flow / (1.0 - a)) : cap;
    expected_steady += scenario.prior_xbar.weights[j] * steady;
  }
  // The prior is shared across paths, so every stochastic path gets the same
  // estimate. V(0): users shown nothing assume no previous reporters.
  const double est = expected_steady + scenario.err(0.0);
  return std::vector<double>(static_cast<std::size_t>(scenario.num_paths()), est);
}

FlowAllocation hiding_allocation(const Scenario& scenario, double total_flow,
                                 const std::vector<double>& exp_cost_at_xbar) {
  const int m = scenario.num_paths();
  if (static_cast<int>(exp_cost_at_xbar.size()) != m) {
    throw std::invalid_argument("hiding_allocation: estimate size mismatch");
  }
  FlowAllocation out;
  out.flows.assign(static_cast<std::size_t>(m) + 1, 0.0);
  const double per_path_cap = total_flow / m;
  double stochastic_total = 0.0;
  for (int i = 0; i < m; ++i) {
    const double interior = (scenario.arrivals.mean + scenario.ell0 -
                             exp_cost_at_xbar[static_cast<std::size_t>(i)]) /
                            (m + 1);
    const double f = std::clamp(std::min(per_path_cap, interior), 0.0, per_path_cap);
    out.flows[static_cast<std::size_t>(i) + 1] = f;
    stochastic_total += f;
  }
  out.flows[0] = total_flow - stochastic_total;
  return out;
}

FlowAllocation deterministic_recommendation_allocation(
    const Scenario& scenario, double total_flow,
    const std::vector<double>& exp_cost_at_xbar, ReceiverMode mode) {
  if (mode == ReceiverMode::kRational) {
    // A deterministic signal only tells a receiver that someone was sent to
    // the path, which does not move the posterior; rational receivers fall
    // back to the hiding split.
    return hiding_allocation(scenario, total_flow, exp_cost_at_xbar);
  }
  FlowAllocation out;
  out.flows.assign(static_cast<std::size_t>(scenario.num_paths()) + 1, 0.0);
  std::size_t best = 0;
  double best_cost = scenario.ell0;
  for (std::size_t i = 0; i < exp_cost_at_xbar.size(); ++i) {
    if (exp_cost_at_xbar[i] < best_cost) {
      best_cost = exp_cost_at_xbar[i];
      best = i + 1;
    }
  }
  out.flows[best] = total_flow;
  return out;
}

void CharParams::validate(int num_paths) const {
  if (p_low < 0.0 || p_low > 1.0 || p_high < 0.0 || p_high > 1.0) {
    throw std::invalid_argument("char: p_L and p_H must be in [0, 1]");
  }
  if (num_paths * p_low > 1.0 + 1e-12 || num_paths * p_high > 1.0 + 1e-12) {
    throw std::invalid_argument("char: M*p must be <= 1 for a proper distribution");
  }
  if (!feasible()) {
    throw std::invalid_argument("char: infeasible (p_L*P(x_th) < p_H*(1-P(x_th)))");
  }
}

CharParams choose_char_probs(const PriorXbar& prior, double x_threshold,
                             int num_paths) {
  const double mass = prior.mass_below(x_threshold);
  if (mass <= 0.0 || mass >= 1.0) {
    throw std::domain_error(
        "char: prior mass entirely on one side of the threshold; "
        "recommendations carry no information");
  }
  CharParams params;
  params.x_threshold = x_threshold;
  params.prob_below_threshold = mass;
  params.p_low = std::min(1.0 / num_paths, 0.9);
  params.p_high =
      std::min(0.5 * params.p_low * mass / (1.0 - mass), params.p_low);
  return params;
}

std::vector<double> char_recommend_probs(const std::vector<double>& beliefs,
                                         const CharParams& params) {
  std::vector<double> p(beliefs.size(), 0.0);
  for (std::size_t i = 0; i < beliefs.size(); ++i) {
    p[i] = beliefs[i] < params.x_threshold ? params.p_low : params.p_high;
  }
  return p;
}

CharDecision char_step(const std::vector<PathState>& state, int total_flow,
                       const CharParams& params, const Scenario& scenario,
                       const AllocationCost& long_run_cost) {
  const int m = scenario.num_paths();
  std::vector<double> beliefs(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) beliefs[static_cast<std::size_t>(i)] = state[static_cast<std::size_t>(i)].belief;
  const std::vector<double> rec_probs = char_recommend_probs(beliefs, params);
  const FlowAllocation hiding =
      hiding_allocation(scenario, total_flow, hiding_cost_estimate(scenario));

  CharDecision best;
  double best_cost = std::numeric_limits<double>::infinity();
  for (int hide = 0; hide <= total_flow; ++hide) {
    FlowAllocation candidate;
    candidate.flows.assign(static_cast<std::size_t>(m) + 1, 0.0);
    const double hide_frac = static_cast<double>(hide) / total_flow;
    const double rec_count = total_flow - hide;
    double stochastic = 0.0;
    for (int i = 1; i <= m; ++i) {
      const double f = hide_frac * hiding.flows[static_cast<std::size_t>(i)] +
                       rec_count * rec_probs[static_cast<std::size_t>(i) - 1];
      candidate.flows[static_cast<std::size_t>(i)] = f;
      stochastic += f;
    }
    candidate.flows[0] = total_flow - stochastic;
    const double cost = long_run_cost(candidate);
    if (cost < best_cost) {
      best_cost = cost;
      best.allocation = candidate;
      best.hide_count = hide;
    }
  }
  return best;
}

int sample_recommendation(const std::vector<double>& beliefs,
                          const CharParams& params, Rng& rng) {
  const std::vector<double> p = char_recommend_probs(beliefs, params);
  const double total = std::accumulate(p.begin(), p.end(), 0.0);
  if (total > 1.0 + 1e-12) {
    throw std::logic_error("sample_recommendation: probabilities sum above 1");
  }
  double u = rng.uniform01();
  for (std::size_t i = 0; i < p.size(); ++i) {
    u -= p[i];
    if (u < 0.0) return static_cast<int>(i) + 1;
  }
  return 0;
}

}  // namespace routelearn

#include "routelearn/types.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace routelearn {

namespace {

void require(bool ok, const std::string& message) {
  if (!ok) throw std::invalid_argument(message);
}

}  // namespace

void HazardParams::validate() const {
  require(alpha_high >= 1.0, "alpha.H: must be >= 1");
  require(alpha_low >= 0.0 && alpha_low < 1.0, "alpha.L: must be in [0, 1)");
}

double TwoStateChain::stationary() const {
  if (!has_stationary()) {
    throw std::domain_error("chain: stationary distribution undefined (both rates zero)");
  }
  return p_low_to_high / (p_low_to_high + p_high_to_low);
}

void TwoStateChain::validate() const {
  require(p_low_to_high >= 0.0 && p_low_to_high <= 1.0, "chain.p_LH: must be in [0, 1]");
  require(p_high_to_low >= 0.0 && p_high_to_low <= 1.0, "chain.p_HL: must be in [0, 1]");
}

void ObservationModel::validate() const {
  if (variant == ObsVariant::kMajorityVote) {
    require(per_user_accuracy > 0.5 && per_user_accuracy <= 1.0,
            "observation.p_user: must be in (0.5, 1]");
  } else {
    require(decay > 0.0 && decay < 1.0, "observation.decay: must be in (0, 1)");
  }
}

void ErrorCostModel::validate() const {
  require(v0 >= 0.0, "error_cost.v0: must be >= 0");
}

void ArrivalModel::validate() const {
  require(n_min >= 1, "arrivals.min: must be >= 1");
  require(n_min <= n_max, "arrivals.min: must be <= arrivals.max");
  require(mean >= n_min && mean <= n_max, "arrivals.mean: must lie in [min, max]");
  if (dist == ArrivalDist::kTruncNormal) {
    require(stddev > 0.0, "arrivals.stddev: must be > 0 for truncated normal");
  }
}

std::vector<double> ArrivalModel::pmf() const {
  const int span = n_max - n_min + 1;
  std::vector<double> p(static_cast<std::size_t>(span), 0.0);
  if (dist == ArrivalDist::kUniform) {
    std::fill(p.begin(), p.end(), 1.0 / span);
    return p;
  }
  double total = 0.0;
  for (int k = 0; k < span; ++k) {
    const double z = (n_min + k - mean) / stddev;
    p[static_cast<std::size_t>(k)] = std::exp(-0.5 * z * z);
    total += p[static_cast<std::size_t>(k)];
  }
  for (double& v : p) v /= total;
  return p;
}

int ArrivalModel::sample(Rng& rng) const {
  if (n_min == n_max) return n_min;
  if (dist == ArrivalDist::kUniform) {
    return static_cast<int>(rng.uniform_int(n_min, n_max));
  }
  const std::vector<double> p = pmf();
  double u = rng.uniform01();
  for (std::size_t k = 0; k < p.size(); ++k) {
    u -= p[k];
    if (u < 0.0) return n_min + static_cast<int>(k);
  }
  return n_max;
}

double PriorXbar::mass_below(double threshold) const {
  double mass = 0.0;
  for (std::size_t i = 0; i < support.size(); ++i) {
    if (support[i] < threshold) mass += weights[i];
  }
  return mass;
}

double PriorXbar::mean() const {
  double m = 0.0;
  for (std::size_t i = 0; i < support.size(); ++i) m += support[i] * weights[i];
  return m;
}

void PriorXbar::validate() const {
  require(!support.empty(), "prior_xbar.support: must be non-empty");
  require(support.size() == weights.size(),
          "prior_xbar.weights: must match support size");
  double total = 0.0;
  for (std::size_t i = 0; i < support.size(); ++i) {
    require(support[i] >= 0.0 && support[i] <= 1.0,
            "prior_xbar.support: entries must be in [0, 1]");
    require(weights[i] >= 0.0, "prior_xbar.weights: entries must be >= 0");
    total += weights[i];
  }
  require(std::abs(total - 1.0) <= 1e-9, "prior_xbar.weights: must sum to 1");
}

void Scenario::validate() const {
  require(ell0 > 0.0, "ell0: must be > 0");
  require(rho > 0.0 && rho < 1.0, "rho: must be in (0, 1)");
  require(!paths.empty(), "paths: at least one stochastic path required");
  hazard.validate();
  for (const PathSpec& p : paths) {
    p.chain.validate();
    require(p.initial_belief >= 0.0 && p.initial_belief <= 1.0,
            "paths.initial_belief: must be in [0, 1]");
    require(p.initial_exp_latency >= 0.0,
            "paths.initial_exp_latency: must be >= 0");
  }
  obs.validate();
  err.validate();
  arrivals.validate();
  prior_xbar.validate();
  require(latency_cap >= 0.0, "latency_cap: must be >= 0");
}

double FlowAllocation::total() const {
  return std::accumulate(flows.begin(), flows.end(), 0.0);
}

std::vector<int> FlowAllocation::rounded() const {
  const std::size_t n = flows.size();
  std::vector<int> out(n, 0);
  std::vector<double> remainder(n, 0.0);
  double floor_sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double f = std::floor(flows[i] + 1e-12);
    out[i] = static_cast<int>(f);
    remainder[i] = flows[i] - f;
    floor_sum += f;
  }
  int leftover = static_cast<int>(std::llround(total() - floor_sum));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0u);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (remainder[a] != remainder[b]) return remainder[a] > remainder[b];
    return a < b;  // safe path first on ties
  });
  for (std::size_t k = 0; leftover > 0 && k < n; ++k, --leftover) {
    out[order[k]] += 1;
  }
  return out;
}

std::vector<double> cost_intercepts(const Scenario& scenario,
                                    const std::vector<PathState>& state,
                                    const std::vector<int>& prev_flows) {
  std::vector<double> c(state.size() + 1, scenario.ell0);
  for (std::size_t i = 0; i < state.size(); ++i) {
    const double prev = prev_flows.empty() ? 0.0 : prev_flows.at(i + 1);
    c[i + 1] = state[i].exp_latency + scenario.err(prev);
  }
  return c;
}

double immediate_social_cost(const std::vector<double>& intercepts,
                             const std::vector<double>& flows) {
  double cost = 0.0;
  for (std::size_t i = 0; i < flows.size(); ++i) {
    cost += flows[i] * (intercepts[i] + flows[i]);
  }
  return cost;
}

}  // namespace routelearn

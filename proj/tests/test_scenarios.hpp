#pragma once

#include "routelearn/types.hpp"

namespace routelearn::testing {

// Small single-path scenario with adjustable knobs; defaults keep every
// invariant satisfied.
inline Scenario desk_scenario(double ell0 = 25.0, double v0 = 2.0,
                              int arrivals = 10, double rho = 0.98) {
  Scenario s;
  s.ell0 = ell0;
  s.hazard = {1.3, 0.3};
  s.rho = rho;
  s.err = {v0};
  s.obs = {ObsVariant::kMajorityVote, 0.8, 0.6};
  s.arrivals = {arrivals, arrivals, static_cast<double>(arrivals),
                ArrivalDist::kUniform, 0.0};
  PathSpec p;
  p.name = "stochastic";
  p.chain = {0.1, 0.3};
  p.initial_belief = 0.5;
  p.initial_exp_latency = ell0;
  s.paths = {p};
  s.prior_xbar.support = {0.1, 0.6};
  s.prior_xbar.weights = {0.5, 0.5};
  return s;
}

inline Scenario desk_scenario_m(int m, double ell0 = 25.0, double v0 = 2.0,
                                int arrivals = 12) {
  Scenario s = desk_scenario(ell0, v0, arrivals);
  PathSpec base = s.paths[0];
  s.paths.assign(static_cast<std::size_t>(m), base);
  for (int i = 0; i < m; ++i) {
    s.paths[static_cast<std::size_t>(i)].name = "p" + std::to_string(i + 1);
  }
  return s;
}

}  // namespace routelearn::testing

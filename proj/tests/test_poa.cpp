#include <doctest.h>

#include <stdexcept>

#include <cmath>

#include "routelearn/poa.hpp"

using namespace routelearn;

TEST_CASE("myopic_poa_bound_value: pinned values and limits") {
  CHECK(myopic_poa_bound_value(0.98, 50.0) == doctest::Approx(1.939).epsilon(1e-3));
  CHECK(myopic_poa_bound_value(1.0 - 1e-6, 1e6) == doctest::Approx(2.0).epsilon(1e-3));
  CHECK(myopic_poa_bound_value(0.7, 1.0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK_THROWS_AS(myopic_poa_bound_value(1.5, 10.0), std::domain_error);
  CHECK_THROWS_AS(myopic_poa_bound_value(0.9, 0.5), std::domain_error);
}

TEST_CASE("myopic_poa_bound_value: in (1,2) and monotone in rho and k") {
  for (int ri = 0; ri < 20; ++ri) {
    const double rho = 0.05 + 0.9 * ri / 19.0;
    for (int ki = 0; ki < 20; ++ki) {
      const double k = 1.5 + 10.0 * ki;
      const double b = myopic_poa_bound_value(rho, k);
      CHECK(b > 1.0);
      CHECK(b < 2.0);
      CHECK(myopic_poa_bound_value(std::min(rho + 0.04, 0.9999), k) >= b - 1e-12);
      CHECK(myopic_poa_bound_value(rho, k + 5.0) >= b - 1e-12);
    }
  }
}

TEST_CASE("myopic_poa_bound: derived k and domain errors") {
  const ErrorCostModel err{1.0};
  const MyopicPoaBound b = myopic_poa_bound(0.98, 1.3, 1, 160.0, 10, 10, err);
  const double slack = 160.0 - 10.0 - 1.0 / 11.0;
  const double expected_k = 1.0 + std::log(slack * 0.3 / 13.0 + 1.0) / std::log(1.3);
  CHECK(b.k == doctest::Approx(expected_k).epsilon(1e-12));
  CHECK(b.bound == doctest::Approx(myopic_poa_bound_value(0.98, expected_k)));

  CHECK_THROWS_AS(myopic_poa_bound(0.98, 1.0, 1, 100.0, 10, 10, err),
                  std::domain_error);
  CHECK_THROWS_AS(myopic_poa_bound(0.98, 1.3, 1, 5.0, 10, 10, ErrorCostModel{0.0}),
                  std::domain_error);
}

TEST_CASE("char_poa: pinned value, limits, monotonicity, 5/4 ceiling") {
  const double at_preset = char_poa(1, 121.0, ErrorCostModel{10.0});
  CHECK(at_preset == doctest::Approx(1.2498).epsilon(1e-3));

  // Zero error cost hits the N -> infinity expression exactly.
  CHECK(char_poa(1, 1e9, ErrorCostModel{0.0}) == doctest::Approx(1.25).epsilon(1e-9));
  CHECK(char_poa(3, 1e9, ErrorCostModel{0.0}) ==
        doctest::Approx(1.0 + 1.0 / 8.0).epsilon(1e-9));

  // Many paths drive the ratio to 1.
  CHECK(char_poa(10000, 121.0, ErrorCostModel{10.0}) ==
        doctest::Approx(1.0).epsilon(1e-3));

  // Strictly below 5/4 whenever v0 > 0, never below 1; decreasing in M,
  // increasing in N.
  for (int m = 1; m <= 20; ++m) {
    double previous_in_n = 1.0;
    for (double n = 10.0; n <= 1000.0; n += 55.0) {
      const double value = char_poa(m, n, ErrorCostModel{5.0});
      CHECK(value < 1.25);
      CHECK(value >= 1.0);
      CHECK(value > previous_in_n - 1e-12);
      previous_in_n = value;
    }
  }
  for (double n : {15.0, 121.0, 800.0}) {
    for (int m = 1; m < 20; ++m) {
      CHECK(char_poa(m + 1, n, ErrorCostModel{5.0}) <
            char_poa(m, n, ErrorCostModel{5.0}) + 1e-12);
    }
  }
}

TEST_CASE("worst_case_myopic_scenario: construction facts") {
  const Scenario s = worst_case_myopic_scenario();
  CHECK(s.paths[0].initial_belief == doctest::Approx(1.0 / 1.3).epsilon(1e-12));
  CHECK(expected_alpha(s.paths[0].initial_belief, s.hazard) ==
        doctest::Approx(1.0).epsilon(1e-12));
  CHECK(s.hazard.alpha_low == 0.0);
  // Zero-flow stochastic cost equals the safe cost at peak arrivals.
  const double intercept = s.paths[0].initial_exp_latency + s.err(0.0);
  CHECK(intercept == doctest::Approx(s.ell0 + s.arrivals.n_max).epsilon(1e-12));
}

TEST_CASE("hiding worst cases: saturated and starved splits") {
  const HidingWorstPair pair = hiding_worst_scenarios();

  const std::vector<double> over_est = hiding_cost_estimate(pair.over);
  const FlowAllocation over = hiding_allocation(pair.over, 10.0, over_est);
  CHECK(over.flows[1] == doctest::Approx(10.0));

  const std::vector<double> under_est = hiding_cost_estimate(pair.under);
  const FlowAllocation under = hiding_allocation(pair.under, 10.0, under_est);
  CHECK(under.flows[1] == doctest::Approx(0.0));
}

TEST_CASE("empirical_poa: identity and degenerate baseline") {
  const Scenario s = hiding_worst_scenarios().under;
  const PoaReport self = empirical_poa(s, "myopic", "myopic", 120, 6, 21);
  CHECK(self.ratio == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(self.policy_cost == self.baseline_cost);
}

TEST_CASE("hiding over-exploration ratio grows with the latency scale") {
  // Quick two-point check of the unbounded-growth rendering; the acceptance
  // suite runs the full version.
  PolicyOptions options;
  options.rollout.depth = 2;
  const Scenario small = hiding_worst_scenarios(10.0).over;
  const Scenario large = hiding_worst_scenarios(50.0).over;
  const PoaReport r_small =
      empirical_poa(small, "hiding", "optimal", 150, 8, 31, 1, options);
  const PoaReport r_large =
      empirical_poa(large, "hiding", "optimal", 150, 8, 31, 1, options);
  CHECK(r_small.ratio > 2.0);
  CHECK(r_large.ratio > r_small.ratio);
}

TEST_CASE("preset registry") {
  for (const std::string& name : preset_names()) {
    const Scenario s = make_preset(name);
    CHECK_NOTHROW(s.validate());
  }
  CHECK_THROWS_AS(make_preset("nowhere"), std::invalid_argument);
}

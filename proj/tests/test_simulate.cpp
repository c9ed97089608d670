#include <doctest.h>

#include <stdexcept>

#include <cmath>

#include "routelearn/poa.hpp"
#include "routelearn/simulate.hpp"
#include "test_scenarios.hpp"

using namespace routelearn;
using routelearn::testing::desk_scenario;

TEST_CASE("evolve_truth: absorbing, alternating, stationary frequency") {
  Rng rng(3);
  const TwoStateChain frozen{0.0, 0.0};
  CHECK(evolve_truth(frozen, false, rng) == false);
  CHECK(evolve_truth(frozen, true, rng) == true);

  const TwoStateChain flip{1.0, 1.0};
  CHECK(evolve_truth(flip, false, rng) == true);
  CHECK(evolve_truth(flip, true, rng) == false);

  const TwoStateChain chain{0.1, 0.3};
  bool high = false;
  long highs = 0;
  const int steps = 1000000;
  for (int t = 0; t < steps; ++t) {
    high = evolve_truth(chain, high, rng);
    if (high) ++highs;
  }
  CHECK(static_cast<double>(highs) / steps == doctest::Approx(0.25).epsilon(0.02));
}

TEST_CASE("run_episode: determinism") {
  const Scenario s = desk_scenario();
  const auto policy = make_policy("myopic", s);
  const EpisodeTrace a = run_episode(s, *policy, 200, 42);
  const EpisodeTrace b = run_episode(s, *policy, 200, 42);
  REQUIRE(a.slots.size() == b.slots.size());
  for (std::size_t t = 0; t < a.slots.size(); ++t) {
    CHECK(a.slots[t].arrivals == b.slots[t].arrivals);
    CHECK(a.slots[t].flows == b.slots[t].flows);
    CHECK(a.slots[t].immediate_cost == b.slots[t].immediate_cost);
    CHECK(a.slots[t].posterior_belief == b.slots[t].posterior_belief);
  }
}

TEST_CASE("run_episode: never-explored paths keep their beliefs") {
  const Scenario s = worst_case_myopic_scenario();
  const auto policy = make_policy("myopic", s);
  const EpisodeTrace trace = run_episode(s, *policy, 300, 9);
  const double x0 = s.paths[0].initial_belief;
  for (const SlotRecord& rec : trace.slots) {
    CHECK(rec.flows[1] == 0);
    CHECK(rec.summary[0] == HazardSummary::kNone);
    CHECK(rec.posterior_belief[0] == doctest::Approx(x0).epsilon(1e-12));
    CHECK(rec.exp_latency[0] ==
          doctest::Approx(s.paths[0].initial_exp_latency).epsilon(1e-9));
  }
}

TEST_CASE("run_episode: perfect observers pin the posterior to the truth") {
  Scenario s = desk_scenario(25.0, 1.0, 10);
  s.obs.per_user_accuracy = 1.0;
  s.paths[0].initial_exp_latency = 1.0;  // keep everyone exploring
  s.hazard = {1.0, 0.0};
  const auto policy = make_policy("probe-exploit", s);
  const EpisodeTrace trace = run_episode(s, *policy, 100, 5);
  for (const SlotRecord& rec : trace.slots) {
    if (rec.flows[1] == 0) continue;
    const bool posterior_high = rec.posterior_belief[0] > 0.5;
    CHECK((rec.posterior_belief[0] == doctest::Approx(0.0) ||
           rec.posterior_belief[0] == doctest::Approx(1.0)));
    CHECK(posterior_high == (rec.summary[0] == HazardSummary::kHazard));
  }
}

TEST_CASE("trace self-consistency: updates recompute from raw events") {
  const Scenario s = desk_scenario(20.0, 2.0, 8);
  const auto policy = make_policy("myopic", s);
  const EpisodeTrace trace = run_episode(s, *policy, 250, 77);
  const double cap = s.simulation_latency_cap();

  std::vector<int> prev(static_cast<std::size_t>(s.num_paths()) + 1, 0);
  for (std::size_t t = 0; t < trace.slots.size(); ++t) {
    const SlotRecord& rec = trace.slots[t];
    double flow_total = 0.0;
    for (int f : rec.flows) flow_total += f;
    CHECK(flow_total == doctest::Approx(rec.arrivals).epsilon(1e-9));

    // Belief update from the recorded summary.
    for (int i = 0; i < s.num_paths(); ++i) {
      const std::size_t ui = static_cast<std::size_t>(i);
      const PosteriorResult redo = posterior_belief(
          rec.prior_belief[ui], rec.summary[ui], rec.flows[ui + 1], s.obs);
      CHECK(redo.belief == doctest::Approx(rec.posterior_belief[ui]).epsilon(1e-9));
    }

    // Immediate cost from intercepts of the published state.
    std::vector<double> intercepts(static_cast<std::size_t>(s.num_paths()) + 1, s.ell0);
    for (int i = 0; i < s.num_paths(); ++i) {
      intercepts[static_cast<std::size_t>(i) + 1] =
          rec.exp_latency[static_cast<std::size_t>(i)] +
          s.err(prev[static_cast<std::size_t>(i) + 1]);
    }
    std::vector<double> flows_real(rec.flows.begin(), rec.flows.end());
    CHECK(immediate_social_cost(intercepts, flows_real) ==
          doctest::Approx(rec.immediate_cost).epsilon(1e-9));

    // Published latency of the next slot follows the expected update.
    if (t + 1 < trace.slots.size()) {
      const SlotRecord& next = trace.slots[t + 1];
      for (int i = 0; i < s.num_paths(); ++i) {
        const std::size_t ui = static_cast<std::size_t>(i);
        const double expected = std::min(
            expected_latency_update(rec.exp_latency[ui], rec.flows[ui + 1],
                                    rec.posterior_belief[ui], s.hazard),
            cap);
        CHECK(next.exp_latency[ui] == doctest::Approx(expected).epsilon(1e-9));
        // True latency moved by one of the two hazard coefficients.
        const double from = rec.true_latency[ui];
        const double to = next.true_latency[ui];
        const double via_high =
            std::min(latency_step(from, rec.flows[ui + 1], s.hazard.alpha_high), cap);
        const double via_low =
            std::min(latency_step(from, rec.flows[ui + 1], s.hazard.alpha_low), cap);
        const bool matches = std::abs(to - via_high) <= 1e-9 ||
                             std::abs(to - via_low) <= 1e-9;
        CHECK(matches);
        // Next slot's prior is this slot's posterior.
        CHECK(next.prior_belief[ui] ==
              doctest::Approx(rec.posterior_belief[ui]).epsilon(1e-12));
      }
    }
    prev = rec.flows;
  }
}

TEST_CASE("discounted_cost: geometric series and truncation bound") {
  EpisodeTrace trace;
  trace.slots.resize(400);
  for (SlotRecord& rec : trace.slots) rec.immediate_cost = 7.0;
  const double rho = 0.9;
  const DiscountedCost dc = discounted_cost(trace, rho);
  CHECK(dc.cost == doctest::Approx(7.0 / (1.0 - rho)).epsilon(1e-6));
  CHECK(dc.truncation_bound < 1e-6);
  CHECK(dc.truncation_bound == doctest::Approx(std::pow(rho, 400) * 7.0 / 0.1));

  EpisodeTrace zero;
  zero.slots.resize(50);
  CHECK(discounted_cost(zero, 0.5).cost == 0.0);

  CHECK(std::pow(0.98, 600) < 5.4e-6);
}

TEST_CASE("convergence_diagnostic: frozen beliefs keep their gap") {
  const Scenario s = worst_case_myopic_scenario();
  const auto policy = make_policy("myopic", s);
  const EpisodeTrace trace = run_episode(s, *policy, 400, 11);
  const GapSeries gaps =
      convergence_diagnostic(trace, s.paths[0].chain, 0);
  const double initial =
      std::abs(s.paths[0].initial_belief - s.paths[0].chain.stationary());
  for (double g : gaps.gap) CHECK(g == doctest::Approx(initial).epsilon(1e-12));
  CHECK(gaps.terminal_mean == doctest::Approx(initial).epsilon(1e-12));
}

TEST_CASE("monte_carlo: determinism, zero variance, stderr scaling") {
  // Fully deterministic scenario: frozen low chain, perfect observers,
  // constant arrivals.
  Scenario det = desk_scenario(20.0, 1.0, 6);
  det.paths[0].chain = {0.0, 0.0};
  det.paths[0].initial_belief = 0.0;
  det.obs.per_user_accuracy = 1.0;
  const auto myopic = make_policy("myopic", det);
  const CostSummary s1 = monte_carlo(det, *myopic, 100, 8, 123);
  CHECK(s1.std_error == doctest::Approx(0.0));

  const Scenario noisy = desk_scenario();
  const auto policy = make_policy("myopic", noisy);
  const CostSummary a = monte_carlo(noisy, *policy, 150, 40, 9);
  const CostSummary b = monte_carlo(noisy, *policy, 150, 40, 9);
  CHECK(a.mean == b.mean);
  CHECK(a.std_error == b.std_error);

  const CostSummary doubled = monte_carlo(noisy, *policy, 150, 80, 9);
  const double expected_shrink = 1.0 / std::sqrt(2.0);
  CHECK(doubled.std_error / a.std_error ==
        doctest::Approx(expected_shrink).epsilon(0.2));

  // Parallel execution reproduces the sequential summary.
  const CostSummary parallel = monte_carlo(noisy, *policy, 150, 40, 9, 4);
  CHECK(parallel.mean == a.mean);
}

TEST_CASE("policy registry") {
  const Scenario s = desk_scenario();
  for (const std::string& name : {"myopic", "hiding", "det-rec"}) {
    CHECK(make_policy(name, s)->name() == name);
  }
  CHECK_THROWS_AS(make_policy("nonsense", s), std::invalid_argument);
}

#pragma once

#include "routelearn/rng.hpp"
#include "routelearn/types.hpp"

namespace routelearn {

// Latency carried into the next slot: f(latency, flow, alpha).
// Pluggable; linear_correlation is the shipped default.
using CorrelationFn = double (*)(double latency, double flow, double alpha);

// alpha * (latency + flow)
double linear_correlation(double latency, double flow, double alpha);

// Next-slot latency under the default linear dynamics. Throws on negative
// inputs.
double latency_step(double latency, double flow, double alpha);

// Probability that the fused summary reports a hazard given n >= 1 reporters,
// under a true high / true low state respectively. Throws for n < 1.
GroupObsProbs group_obs_probs(int n, const ObservationModel& obs);

// Same probabilities at fractional reporter counts (linear blend between
// adjacent integers for the majority-vote variant). Used by planners that
// enumerate flows at sub-integer resolution.
GroupObsProbs group_obs_probs_real(double n, const ObservationModel& obs);

// One pass through the observation channel; n == 0 yields kNone.
HazardSummary fuse_observations(bool truth_high, int n,
                                const ObservationModel& obs, Rng& rng);

struct PosteriorResult {
  double belief = 0.0;
  // Bayes denominator vanished (degenerate prior with perfect observers);
  // the prior was returned unchanged.
  bool degenerate = false;
};

// Bayes update of the hazard belief from one fused summary. y == kNone keeps
// the prior.
PosteriorResult posterior_belief(double prior, HazardSummary y, int n,
                                 const ObservationModel& obs);

// belief * alpha_high + (1 - belief) * alpha_low
double expected_alpha(double belief, const HazardParams& hazard);

// E[f(exp_latency, flow, alpha)] with alpha drawn from the posterior
// two-point distribution.
double expected_latency_update(double exp_latency, double flow,
                               double posterior, const HazardParams& hazard,
                               CorrelationFn f = &linear_correlation);

double error_cost(double n_prev, const ErrorCostModel& err);

// Exact upper tail P(X >= m) for X ~ Binomial(n, p).
double binomial_tail(int n, double p, int m);

}  // namespace routelearn

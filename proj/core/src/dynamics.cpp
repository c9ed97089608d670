#include "routelearn/dynamics.hpp"

#include <cmath>
#include <stdexcept>

namespace routelearn {

double linear_correlation(double latency, double flow, double alpha) {
  return alpha * (latency + flow);
}

double latency_step(double latency, double flow, double alpha) {
  if (latency < 0.0 || flow < 0.0 || alpha < 0.0) {
    throw std::domain_error("latency_step: negative input");
  }
  return linear_correlation(latency, flow, alpha);
}

double binomial_tail(int n, double p, int m) {
  if (m <= 0) return 1.0;
  if (m > n) return 0.0;
  if (p <= 0.0) return 0.0;
  if (p >= 1.0) return 1.0;
  const double logp = std::log(p);
  const double logq = std::log1p(-p);
  double tail = 0.0;
  for (int k = m; k <= n; ++k) {
    const double logc = std::lgamma(n + 1.0) - std::lgamma(k + 1.0) -
                        std::lgamma(n - k + 1.0);
    tail += std::exp(logc + k * logp + (n - k) * logq);
  }
  return std::min(tail, 1.0);
}

GroupObsProbs group_obs_probs(int n, const ObservationModel& obs) {
  if (n < 1) {
    throw std::domain_error("group_obs_probs: n must be >= 1 (no observation exists)");
  }
  if (obs.variant == ObsVariant::kParametric) {
    const double half_decay = 0.5 * std::pow(obs.decay, n);
    return {1.0 - half_decay, half_decay};
  }
  // Majority vote over n i.i.d. reporters; a tie (even n) counts as hazard,
  // so the summary is hazard iff at least ceil(n/2) reporters say so.
  const int threshold = (n + 1) / 2;
  const double p = obs.per_user_accuracy;
  return {binomial_tail(n, p, threshold), binomial_tail(n, 1.0 - p, threshold)};
}

GroupObsProbs group_obs_probs_real(double n, const ObservationModel& obs) {
  if (n < 1.0) {
    throw std::domain_error("group_obs_probs_real: n must be >= 1");
  }
  if (obs.variant == ObsVariant::kParametric) {
    const double half_decay = 0.5 * std::pow(obs.decay, n);
    return {1.0 - half_decay, half_decay};
  }
  const int lo = static_cast<int>(std::floor(n));
  const int hi = lo + 1;
  const GroupObsProbs a = group_obs_probs(lo, obs);
  const double t = n - lo;
  if (t <= 0.0) return a;
  const GroupObsProbs b = group_obs_probs(hi, obs);
  return {(1.0 - t) * a.q_high + t * b.q_high,
          (1.0 - t) * a.q_low + t * b.q_low};
}

HazardSummary fuse_observations(bool truth_high, int n,
                                const ObservationModel& obs, Rng& rng) {
  if (n <= 0) return HazardSummary::kNone;
  const GroupObsProbs q = group_obs_probs(n, obs);
  const double p_hazard = truth_high ? q.q_high : q.q_low;
  return rng.bernoulli(p_hazard) ? HazardSummary::kHazard
                                 : HazardSummary::kClear;
}

PosteriorResult posterior_belief(double prior, HazardSummary y, int n,
                                 const ObservationModel& obs) {
  if (prior < 0.0 || prior > 1.0) {
    throw std::domain_error("posterior_belief: prior must be in [0, 1]");
  }
  if (y == HazardSummary::kNone) return {prior, false};
  const GroupObsProbs q = group_obs_probs(n, obs);
  const double like_high =
      (y == HazardSummary::kHazard) ? q.q_high : 1.0 - q.q_high;
  const double like_low =
      (y == HazardSummary::kHazard) ? q.q_low : 1.0 - q.q_low;
  const double numer = prior * like_high;
  const double denom = numer + (1.0 - prior) * like_low;
  if (denom <= 0.0) return {prior, true};
  return {numer / denom, false};
}

double expected_alpha(double belief, const HazardParams& hazard) {
  return belief * hazard.alpha_high + (1.0 - belief) * hazard.alpha_low;
}

double expected_latency_update(double exp_latency, double flow,
                               double posterior, const HazardParams& hazard,
                               CorrelationFn f) {
  // Two-point enumeration of alpha under the posterior; collapses to
  // expected_alpha(posterior) * (exp_latency + flow) for the linear form.
  return posterior * f(exp_latency, flow, hazard.alpha_high) +
         (1.0 - posterior) * f(exp_latency, flow, hazard.alpha_low);
}

double error_cost(double n_prev, const ErrorCostModel& err) {
  if (n_prev < 0.0) {
    throw std::domain_error("error_cost: n_prev must be >= 0");
  }
  return err(n_prev);
}

}  // namespace routelearn

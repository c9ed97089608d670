#pragma once

#include <string>
#include <utility>

#include "routelearn/scenario_io.hpp"
#include "routelearn/simulate.hpp"

namespace routelearn {

// Closed-form lower bound on the myopic price of anarchy at discount rho and
// cost-recovery horizon k: 2(1 - rho^k) / (2 - rho - rho^k). Approaches 2 as
// rho -> 1 and k -> infinity; equals 1 at k = 1.
double myopic_poa_bound_value(double rho, double k);

struct MyopicPoaBound {
  double k = 0.0;
  double bound = 0.0;
};

// k derived from scenario geometry: the number of slots a freshly cleared
// path takes to congest back to cost parity with the safe path.
MyopicPoaBound myopic_poa_bound(double rho, double alpha_high, int num_paths,
                                double ell0, double n_min, double n_max,
                                const ErrorCostModel& err);

// Closed-form CHAR price of anarchy; strictly below 5/4 for any v0 > 0,
// decreasing in the path count and increasing in the mean arrivals.
double char_poa(int num_paths, double mean_arrivals, const ErrorCostModel& err);

struct WorstCaseParams {
  double alpha_high = 1.3;
  double ell0 = 160.0;
  int arrivals = 10;
  double v0 = 1.0;
  double rho = 0.98;
  double p_low_to_high = 0.1;
  double p_high_to_low = 0.3;
  double obs_accuracy = 0.9;
};

// Single-path scenario in which myopic routing never explores: the initial
// expected alpha is exactly 1 (so the published latency freezes) and the
// path's zero-flow cost equals the safe path's cost at peak arrivals.
Scenario worst_case_myopic_scenario(const WorstCaseParams& params = {});

struct HidingWorstPair {
  Scenario over;   // prior says cheap, reality is congested: hiding floods it
  Scenario under;  // prior says congested, reality is cheap: hiding avoids it
};

// Scenario pair on which the constant hiding split lands at the per-path cap
// and at zero respectively. `over_scale` multiplies the over case's initial
// true latency relative to ell0.
HidingWorstPair hiding_worst_scenarios(double over_scale = 10.0);

// Presets addressable by name: beijing | theorem1-worst | lemma3-over |
// lemma3-under.
Scenario make_preset(const std::string& name);
std::vector<std::string> preset_names();

struct PoaReport {
  std::string scenario_id;
  std::string policy;
  std::string baseline;
  double policy_cost = 0.0;
  double baseline_cost = 0.0;
  double policy_std_error = 0.0;
  double baseline_std_error = 0.0;
  double ratio = 0.0;
  int horizon = 0;
  int replications = 0;
  std::uint64_t seed = 0;
};

// Ratio of mean discounted costs (policy over baseline) with paired seeds.
// Throws when the baseline cost is not strictly positive.
PoaReport empirical_poa(const Scenario& scenario, const std::string& policy,
                        const std::string& baseline, int horizon,
                        int replications, std::uint64_t seed, int jobs = 1,
                        const PolicyOptions& options = {});

}  // namespace routelearn

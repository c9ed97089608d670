#pragma once

#include <string>
#include <vector>

#include "routelearn/types.hpp"

namespace routelearn {

// One road's labelled congestion history; labels are 1 (good) or 2 (bad).
struct LabeledSequence {
  std::string road;
  std::vector<int> labels;
  double interval_minutes = 5.0;
};

struct ChainFit {
  TwoStateChain chain;
  // A state never visited as a transition source keeps a self-loop row; the
  // flags mark which rows were defaulted that way.
  bool low_row_defaulted = false;
  bool high_row_defaulted = false;
};

// Maximum-likelihood transition frequencies from a fully observed two-state
// sequence. Throws on sequences shorter than 2 or labels outside {1, 2}.
ChainFit fit_two_state_chain(const LabeledSequence& seq);

// Long-run high-state probability; throws when both rates are zero.
double stationary(const TwoStateChain& chain);

// Samples a label sequence from the chain, starting at the stationary state.
LabeledSequence generate_labels(const TwoStateChain& chain, int steps,
                                std::uint64_t seed,
                                const std::string& road = "synthetic");

// Four-path preset fitted from Beijing peak-hour congestion sequences:
// published steady states (0.3883, 0.1064, 0.1915, 0.9362), alpha 1.3 / 0.3,
// discount 0.98, arrivals ~ truncated normal(121, 12.33). Everything else is
// a documented default of this implementation.
Scenario beijing_preset();

// JSON scenario file round trip. Parse errors name the offending field.
Scenario load_scenario(const std::string& path);
void save_scenario(const Scenario& scenario, const std::string& path);
Scenario scenario_from_json_text(const std::string& text);
std::string scenario_to_json_text(const Scenario& scenario);

// Labelled-sequence CSV: columns road, timestamp_index, label.
std::vector<LabeledSequence> load_labeled_sequences(const std::string& path);

// Stable content hash used to stamp output files.
std::string scenario_hash(const Scenario& scenario);

bool scenario_equal(const Scenario& a, const Scenario& b, double real_tol = 1e-12);

}  // namespace routelearn

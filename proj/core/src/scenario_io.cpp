#include "routelearn/scenario_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "routelearn/rng.hpp"

namespace routelearn {

using nlohmann::json;

ChainFit fit_two_state_chain(const LabeledSequence& seq) {
  if (seq.labels.size() < 2) {
    throw std::invalid_argument("fit: sequence \"" + seq.road +
                                "\" needs at least 2 labels");
  }
  long counts[2][2] = {{0, 0}, {0, 0}};
  auto state_of = [&](int label) {
    if (label != 1 && label != 2) {
      throw std::invalid_argument("fit: sequence \"" + seq.road +
                                  "\" has label outside {1, 2}");
    }
    return label - 1;  // 0 = low/good, 1 = high/bad
  };
  for (std::size_t t = 0; t + 1 < seq.labels.size(); ++t) {
    counts[state_of(seq.labels[t])][state_of(seq.labels[t + 1])] += 1;
  }
  ChainFit fit;
  const long from_low = counts[0][0] + counts[0][1];
  const long from_high = counts[1][0] + counts[1][1];
  if (from_low > 0) {
    fit.chain.p_low_to_high = static_cast<double>(counts[0][1]) / from_low;
  } else {
    fit.chain.p_low_to_high = 0.0;  // self-loop row
    fit.low_row_defaulted = true;
  }
  if (from_high > 0) {
    fit.chain.p_high_to_low = static_cast<double>(counts[1][0]) / from_high;
  } else {
    fit.chain.p_high_to_low = 0.0;  // self-loop row
    fit.high_row_defaulted = true;
  }
  return fit;
}

double stationary(const TwoStateChain& chain) { return chain.stationary(); }

LabeledSequence generate_labels(const TwoStateChain& chain, int steps,
                                std::uint64_t seed, const std::string& road) {
  LabeledSequence seq;
  seq.road = road;
  seq.labels.reserve(static_cast<std::size_t>(steps));
  Rng rng(seed);
  bool high = chain.has_stationary() ? rng.bernoulli(chain.stationary()) : false;
  for (int t = 0; t < steps; ++t) {
    seq.labels.push_back(high ? 2 : 1);
    const double p_flip = high ? chain.p_high_to_low : chain.p_low_to_high;
    if (rng.bernoulli(p_flip)) high = !high;
  }
  return seq;
}

Scenario beijing_preset() {
  Scenario s;
  s.schema_version = 1;
  s.ell0 = 35.0;
  s.hazard = {1.3, 0.3};
  s.rho = 0.98;
  s.err = {10.0};
  s.obs = {ObsVariant::kMajorityVote, 0.8, 0.6};
  s.arrivals = {85, 157, 121.0, ArrivalDist::kTruncNormal, 12.33};

  const double mixing = 0.4;
  struct Road {
    const char* name;
    double steady;
    double initial_belief;
  };
  const Road roads[4] = {{"Donghuamen", 0.3883, 0.5},
                         {"Beiheyuan", 0.1064, 0.2},
                         {"Beichizi", 0.1915, 0.3},
                         {"Jianxiang", 0.9362, 0.8}};
  s.prior_xbar.support.clear();
  s.prior_xbar.weights.clear();
  for (const Road& r : roads) {
    PathSpec p;
    p.name = r.name;
    p.chain.p_low_to_high = mixing * r.steady;
    p.chain.p_high_to_low = mixing * (1.0 - r.steady);
    p.initial_belief = r.initial_belief;
    // Default: pessimistic start well above the safe-path cost, so learning
    // the good states matters.
    p.initial_exp_latency = 150.0;
    s.paths.push_back(p);
    s.prior_xbar.support.push_back(r.steady);
    s.prior_xbar.weights.push_back(0.25);
  }
  return s;
}

namespace {

[[noreturn]] void parse_fail(const std::string& field, const std::string& what) {
  throw std::runtime_error("scenario parse error at \"" + field + "\": " + what);
}

template <typename T>
T get_field(const json& j, const std::string& field) {
  if (!j.contains(field)) parse_fail(field, "missing");
  try {
    return j.at(field).get<T>();
  } catch (const json::exception& e) {
    parse_fail(field, e.what());
  }
}

template <typename T>
T get_field_or(const json& j, const std::string& field, T fallback) {
  if (!j.contains(field)) return fallback;
  try {
    return j.at(field).get<T>();
  } catch (const json::exception& e) {
    parse_fail(field, e.what());
  }
}

TwoStateChain chain_from_json(const json& j, const std::string& context) {
  TwoStateChain chain;
  if (j.contains("p_LH") || j.contains("p_HL")) {
    chain.p_low_to_high = get_field<double>(j, "p_LH");
    chain.p_high_to_low = get_field<double>(j, "p_HL");
  } else if (j.contains("stationary")) {
    const double steady = get_field<double>(j, "stationary");
    const double mixing = get_field_or<double>(j, "mixing", 0.4);
    if (steady < 0.0 || steady > 1.0) parse_fail(context + ".stationary", "must be in [0, 1]");
    chain.p_low_to_high = mixing * steady;
    chain.p_high_to_low = mixing * (1.0 - steady);
  } else {
    parse_fail(context, "needs either {p_LH, p_HL} or {stationary[, mixing]}");
  }
  return chain;
}

}  // namespace

Scenario scenario_from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw std::runtime_error(std::string("scenario parse error: ") + e.what());
  }
  Scenario s;
  s.schema_version = get_field<int>(j, "schema_version");
  s.ell0 = get_field<double>(j, "ell0");
  const json alpha = get_field<json>(j, "alpha");
  s.hazard.alpha_high = get_field<double>(alpha, "H");
  s.hazard.alpha_low = get_field<double>(alpha, "L");
  s.rho = get_field<double>(j, "rho");
  s.latency_cap = get_field_or<double>(j, "latency_cap", 0.0);

  const json paths = get_field<json>(j, "paths");
  if (!paths.is_array() || paths.empty()) parse_fail("paths", "must be a non-empty array");
  int index = 0;
  for (const json& pj : paths) {
    const std::string context = "paths[" + std::to_string(index) + "]";
    PathSpec p;
    p.name = get_field_or<std::string>(pj, "name", "path" + std::to_string(index + 1));
    if (!pj.contains("chain")) parse_fail(context + ".chain", "missing");
    p.chain = chain_from_json(pj.at("chain"), context + ".chain");
    p.initial_belief = get_field<double>(pj, "initial_belief");
    p.initial_exp_latency = get_field<double>(pj, "initial_exp_latency");
    s.paths.push_back(p);
    ++index;
  }

  if (j.contains("observation")) {
    const json oj = j.at("observation");
    const std::string variant = get_field<std::string>(oj, "variant");
    if (variant == "majority-vote") {
      s.obs.variant = ObsVariant::kMajorityVote;
      s.obs.per_user_accuracy = get_field<double>(oj, "p_user");
      s.obs.decay = get_field_or<double>(oj, "decay", 0.6);
    } else if (variant == "parametric") {
      s.obs.variant = ObsVariant::kParametric;
      s.obs.decay = get_field<double>(oj, "decay");
      s.obs.per_user_accuracy = get_field_or<double>(oj, "p_user", 0.8);
    } else {
      parse_fail("observation.variant", "must be \"majority-vote\" or \"parametric\"");
    }
    s.obs_defaulted = get_field_or<bool>(oj, "defaulted", false);
  } else {
    s.obs = ObservationModel{};
    s.obs_defaulted = true;
  }

  const json ej = get_field<json>(j, "error_cost");
  s.err.v0 = get_field<double>(ej, "v0");

  const json aj = get_field<json>(j, "arrivals");
  s.arrivals.n_min = get_field<int>(aj, "min");
  s.arrivals.n_max = get_field<int>(aj, "max");
  s.arrivals.mean = get_field<double>(aj, "mean");
  const std::string dist = get_field_or<std::string>(aj, "dist", "uniform");
  if (dist == "uniform") {
    s.arrivals.dist = ArrivalDist::kUniform;
  } else if (dist == "trunc-normal") {
    s.arrivals.dist = ArrivalDist::kTruncNormal;
    s.arrivals.stddev = get_field<double>(aj, "stddev");
  } else {
    parse_fail("arrivals.dist", "must be \"uniform\" or \"trunc-normal\"");
  }

  const json xj = get_field<json>(j, "prior_xbar");
  s.prior_xbar.support = get_field<std::vector<double>>(xj, "support");
  s.prior_xbar.weights = get_field<std::vector<double>>(xj, "weights");

  try {
    s.validate();
  } catch (const std::invalid_argument& e) {
    throw std::runtime_error(std::string("scenario validation error: ") + e.what());
  }
  return s;
}

std::string scenario_to_json_text(const Scenario& s) {
  json j;
  j["schema_version"] = s.schema_version;
  j["ell0"] = s.ell0;
  j["alpha"] = {{"H", s.hazard.alpha_high}, {"L", s.hazard.alpha_low}};
  j["rho"] = s.rho;
  if (s.latency_cap > 0.0) j["latency_cap"] = s.latency_cap;
  json paths = json::array();
  for (const PathSpec& p : s.paths) {
    json pj;
    pj["name"] = p.name;
    pj["chain"] = {{"p_LH", p.chain.p_low_to_high}, {"p_HL", p.chain.p_high_to_low}};
    pj["initial_belief"] = p.initial_belief;
    pj["initial_exp_latency"] = p.initial_exp_latency;
    paths.push_back(pj);
  }
  j["paths"] = paths;
  json oj;
  oj["variant"] =
      s.obs.variant == ObsVariant::kMajorityVote ? "majority-vote" : "parametric";
  oj["p_user"] = s.obs.per_user_accuracy;
  oj["decay"] = s.obs.decay;
  if (s.obs_defaulted) oj["defaulted"] = true;
  j["observation"] = oj;
  j["error_cost"] = {{"v0", s.err.v0}};
  json aj;
  aj["min"] = s.arrivals.n_min;
  aj["max"] = s.arrivals.n_max;
  aj["mean"] = s.arrivals.mean;
  aj["dist"] = s.arrivals.dist == ArrivalDist::kUniform ? "uniform" : "trunc-normal";
  if (s.arrivals.dist == ArrivalDist::kTruncNormal) aj["stddev"] = s.arrivals.stddev;
  j["arrivals"] = aj;
  j["prior_xbar"] = {{"support", s.prior_xbar.support},
                     {"weights", s.prior_xbar.weights}};
  return j.dump(2);
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open scenario file: " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return scenario_from_json_text(buffer.str());
}

void save_scenario(const Scenario& scenario, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write scenario file: " + path);
  out << scenario_to_json_text(scenario) << '\n';
}

std::vector<LabeledSequence> load_labeled_sequences(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open sequence file: " + path);
  std::vector<LabeledSequence> out;
  std::string line;
  bool header_seen = false;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream row(line);
    std::string road, index_str, label_str;
    if (!std::getline(row, road, ',') || !std::getline(row, index_str, ',') ||
        !std::getline(row, label_str)) {
      throw std::runtime_error("sequence file line " + std::to_string(line_no) +
                               ": expected road,timestamp_index,label");
    }
    if (!header_seen && road == "road") {
      header_seen = true;
      continue;
    }
    int label = 0;
    try {
      label = std::stoi(label_str);
    } catch (const std::exception&) {
      throw std::runtime_error("sequence file line " + std::to_string(line_no) +
                               ": label must be an integer");
    }
    auto it = std::find_if(out.begin(), out.end(),
                           [&](const LabeledSequence& s) { return s.road == road; });
    if (it == out.end()) {
      out.push_back(LabeledSequence{road, {}, 5.0});
      it = out.end() - 1;
    }
    it->labels.push_back(label);
  }
  if (out.empty()) throw std::runtime_error("sequence file has no data rows");
  return out;
}

std::string scenario_hash(const Scenario& scenario) {
  const std::string canonical = scenario_to_json_text(scenario);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : canonical) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  std::ostringstream out;
  out << std::hex << h;
  return out.str();
}

bool scenario_equal(const Scenario& a, const Scenario& b, double real_tol) {
  auto close = [&](double x, double y) { return std::abs(x - y) <= real_tol; };
  if (a.schema_version != b.schema_version) return false;
  if (a.num_paths() != b.num_paths()) return false;
  if (!close(a.ell0, b.ell0) || !close(a.rho, b.rho)) return false;
  if (!close(a.hazard.alpha_high, b.hazard.alpha_high) ||
      !close(a.hazard.alpha_low, b.hazard.alpha_low)) {
    return false;
  }
  if (!close(a.latency_cap, b.latency_cap)) return false;
  for (int i = 0; i < a.num_paths(); ++i) {
    const PathSpec& pa = a.paths[static_cast<std::size_t>(i)];
    const PathSpec& pb = b.paths[static_cast<std::size_t>(i)];
    if (pa.name != pb.name) return false;
    if (!close(pa.chain.p_low_to_high, pb.chain.p_low_to_high) ||
        !close(pa.chain.p_high_to_low, pb.chain.p_high_to_low) ||
        !close(pa.initial_belief, pb.initial_belief) ||
        !close(pa.initial_exp_latency, pb.initial_exp_latency)) {
      return false;
    }
  }
  if (a.obs.variant != b.obs.variant ||
      !close(a.obs.per_user_accuracy, b.obs.per_user_accuracy) ||
      !close(a.obs.decay, b.obs.decay)) {
    return false;
  }
  if (!close(a.err.v0, b.err.v0)) return false;
  if (a.arrivals.n_min != b.arrivals.n_min || a.arrivals.n_max != b.arrivals.n_max ||
      !close(a.arrivals.mean, b.arrivals.mean) || a.arrivals.dist != b.arrivals.dist ||
      !close(a.arrivals.stddev, b.arrivals.stddev)) {
    return false;
  }
  if (a.prior_xbar.support.size() != b.prior_xbar.support.size()) return false;
  for (std::size_t i = 0; i < a.prior_xbar.support.size(); ++i) {
    if (!close(a.prior_xbar.support[i], b.prior_xbar.support[i]) ||
        !close(a.prior_xbar.weights[i], b.prior_xbar.weights[i])) {
      return false;
    }
  }
  return true;
}

}  // namespace routelearn

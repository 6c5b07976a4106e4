#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "happymine/attacks.hpp"
#include "happymine/core.hpp"
#include "happymine/equilibrium.hpp"
#include "happymine/verifier.hpp"

namespace happymine {

inline constexpr const char* kToolName = "happymine";
inline constexpr const char* kToolVersion = "0.1.0";
inline constexpr std::uint64_t kDefaultSeed = 42;

using json = nlohmann::json;

/// Malformed or invalid scenario input.
class ScenarioError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Scenario {
  std::vector<double> costs;
  double Q = 1.0;
  double delta = 0.0;
  std::vector<std::string> labels;
  std::optional<std::uint64_t> seed;
  std::optional<double> tol;

  [[nodiscard]] CostProfile cost_profile() const { return CostProfile(costs); }
  [[nodiscard]] RewardParams params() const { return RewardParams(Q, delta); }

  /// Label of the miner at input position i.
  [[nodiscard]] std::string label(std::size_t i) const {
    return i < labels.size() ? labels[i] : "m" + std::to_string(i + 1);
  }

  bool operator==(const Scenario&) const = default;
};

namespace detail {

inline double number_field(const json& j, const char* key) {
  const auto& v = j.at(key);
  if (!v.is_number()) throw ScenarioError(std::string("field '") + key + "' must be a number");
  return v.get<double>();
}

}  // namespace detail

/// Validates and converts a parsed scenario object. The resulting costs and
/// parameters are guaranteed to build a CostProfile and RewardParams.
inline Scenario scenario_from_json(const json& j) {
  if (!j.is_object()) throw ScenarioError("scenario must be a JSON object");
  for (const auto& [key, _] : j.items()) {
    if (key != "costs" && key != "Q" && key != "delta" && key != "labels" && key != "seed" &&
        key != "tol") {
      throw ScenarioError("unknown field '" + key + "'");
    }
  }
  for (const char* required : {"costs", "Q", "delta"}) {
    if (!j.contains(required)) throw ScenarioError(std::string("missing field '") + required + "'");
  }
  Scenario s;
  const auto& costs = j.at("costs");
  if (!costs.is_array()) throw ScenarioError("field 'costs' must be an array");
  for (std::size_t i = 0; i < costs.size(); ++i) {
    if (!costs[i].is_number()) {
      throw ScenarioError("field 'costs[" + std::to_string(i) + "]' must be a number");
    }
    s.costs.push_back(costs[i].get<double>());
  }
  s.Q = detail::number_field(j, "Q");
  s.delta = detail::number_field(j, "delta");
  if (j.contains("labels")) {
    const auto& labels = j.at("labels");
    if (!labels.is_array() || labels.size() != s.costs.size()) {
      throw ScenarioError("field 'labels' must be an array with one string per cost");
    }
    for (const auto& l : labels) {
      if (!l.is_string()) throw ScenarioError("field 'labels' must contain strings");
      s.labels.push_back(l.get<std::string>());
    }
  }
  if (j.contains("seed")) {
    if (!j.at("seed").is_number_unsigned()) {
      throw ScenarioError("field 'seed' must be a non-negative integer");
    }
    s.seed = j.at("seed").get<std::uint64_t>();
  }
  if (j.contains("tol")) {
    s.tol = detail::number_field(j, "tol");
    if (!(*s.tol > 0.0)) throw ScenarioError("field 'tol' must be > 0");
  }
  try {
    (void)s.cost_profile();
    (void)s.params();
  } catch (const DomainError& e) {
    throw ScenarioError(e.what());
  }
  return s;
}

inline Scenario parse_scenario(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ScenarioError(e.what());
  }
  return scenario_from_json(j);
}

inline Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioError("cannot read scenario file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str());
}

inline json to_json(const Scenario& s) {
  json j;
  j["costs"] = s.costs;
  j["Q"] = s.Q;
  j["delta"] = s.delta;
  if (!s.labels.empty()) j["labels"] = s.labels;
  if (s.seed) j["seed"] = *s.seed;
  if (s.tol) j["tol"] = *s.tol;
  return j;
}

// --- Result documents -------------------------------------------------------

struct MinerResult {
  std::string label;
  double cost = 0.0;
  double q = 0.0;
  std::optional<double> lo;
  std::optional<double> hi;
  bool participates = false;
  double utility = 0.0;

  bool operator==(const MinerResult&) const = default;
};

struct MinerCheck {
  std::string label;
  double grid_improvement = 0.0;
  double left_derivative = 0.0;
  double right_derivative = 0.0;
  bool passed = false;

  bool operator==(const MinerCheck&) const = default;
};

struct VerificationSummary {
  bool passed = false;
  double eps = 0.0;
  std::vector<MinerCheck> miners;

  bool operator==(const VerificationSummary&) const = default;
};

/// Everything `solve` reports. Per-miner entries are in input order.
struct ResultDocument {
  std::string tool = kToolName;
  std::string version = kToolVersion;
  Scenario scenario;
  double c_star = 0.0;
  std::size_t n_star = 0;
  std::optional<double> c_dagger;
  std::optional<std::size_t> n_dagger;
  std::string regime;
  std::string selection;
  double total_hashrate = 0.0;
  std::vector<MinerResult> miners;
  std::optional<VerificationSummary> verification;

  bool operator==(const ResultDocument&) const = default;
};

inline VerificationSummary summarize(const VerificationReport& rep, const Scenario& s,
                                     const CostProfile& costs) {
  VerificationSummary out;
  out.passed = rep.passed();
  out.eps = rep.eps;
  out.miners.resize(rep.miners.size());
  for (std::size_t i = 0; i < rep.miners.size(); ++i) {
    const auto& v = rep.miners[i];
    const std::size_t in = costs.input_index(i);
    out.miners[in] = {s.label(in), v.grid_improvement, v.left_derivative, v.right_derivative,
                      v.passed};
  }
  return out;
}

inline ResultDocument make_document(const Scenario& s, const Equilibrium& eq,
                                    const VerificationReport* rep) {
  const CostProfile costs = s.cost_profile();
  ResultDocument d;
  d.scenario = s;
  d.c_star = eq.thresholds.star.value;
  d.n_star = eq.thresholds.star.participants;
  if (eq.thresholds.dagger) {
    d.c_dagger = eq.thresholds.dagger->value;
    d.n_dagger = eq.thresholds.dagger->participants;
  }
  d.regime = std::string(to_string(eq.regime));
  d.selection = std::string(to_string(eq.selection));
  d.total_hashrate = eq.total_hashrate;
  d.miners.resize(costs.size());
  for (std::size_t i = 0; i < costs.size(); ++i) {
    const std::size_t in = costs.input_index(i);
    auto& m = d.miners[in];
    m.label = s.label(in);
    m.cost = costs[i];
    m.q = eq.q[i];
    if (eq.intervals) {
      m.lo = (*eq.intervals)[i].lo;
      m.hi = (*eq.intervals)[i].hi;
    }
    m.participates = eq.participates(i);
    m.utility = eq.utilities[i];
  }
  if (rep) d.verification = summarize(*rep, s, costs);
  return d;
}

namespace detail {

/// JSON has no infinities; they travel as null.
inline json finite_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }
inline double null_to_inf(const json& j) {
  return j.is_null() ? std::numeric_limits<double>::infinity() : j.get<double>();
}

}  // namespace detail

inline json to_json(const ResultDocument& d) {
  json j;
  j["tool"] = d.tool;
  j["version"] = d.version;
  j["scenario"] = to_json(d.scenario);
  json t;
  t["c_star"] = d.c_star;
  t["n_star"] = d.n_star;
  if (d.c_dagger) {
    t["c_dagger"] = *d.c_dagger;
    t["n_dagger"] = *d.n_dagger;
  }
  j["thresholds"] = t;
  j["regime"] = d.regime;
  j["selection"] = d.selection;
  j["total_hashrate"] = d.total_hashrate;
  json miners = json::array();
  for (const auto& m : d.miners) {
    json e;
    e["label"] = m.label;
    e["cost"] = m.cost;
    e["q"] = m.q;
    if (m.lo) e["lo"] = *m.lo;
    if (m.hi) e["hi"] = *m.hi;
    e["participates"] = m.participates;
    e["utility"] = m.utility;
    miners.push_back(e);
  }
  j["equilibrium"] = miners;
  if (d.verification) {
    json v;
    v["passed"] = d.verification->passed;
    v["eps"] = d.verification->eps;
    json checks = json::array();
    for (const auto& c : d.verification->miners) {
      checks.push_back({{"label", c.label},
                        {"grid_improvement", detail::finite_or_null(c.grid_improvement)},
                        {"left_derivative", detail::finite_or_null(c.left_derivative)},
                        {"right_derivative", detail::finite_or_null(c.right_derivative)},
                        {"passed", c.passed}});
    }
    v["miners"] = checks;
    j["verification"] = v;
  }
  return j;
}

inline ResultDocument document_from_json(const json& j) {
  ResultDocument d;
  d.tool = j.at("tool").get<std::string>();
  d.version = j.at("version").get<std::string>();
  d.scenario = scenario_from_json(j.at("scenario"));
  const auto& t = j.at("thresholds");
  d.c_star = t.at("c_star").get<double>();
  d.n_star = t.at("n_star").get<std::size_t>();
  if (t.contains("c_dagger")) {
    d.c_dagger = t.at("c_dagger").get<double>();
    d.n_dagger = t.at("n_dagger").get<std::size_t>();
  }
  d.regime = j.at("regime").get<std::string>();
  d.selection = j.at("selection").get<std::string>();
  d.total_hashrate = j.at("total_hashrate").get<double>();
  for (const auto& e : j.at("equilibrium")) {
    MinerResult m;
    m.label = e.at("label").get<std::string>();
    m.cost = e.at("cost").get<double>();
    m.q = e.at("q").get<double>();
    if (e.contains("lo")) m.lo = e.at("lo").get<double>();
    if (e.contains("hi")) m.hi = e.at("hi").get<double>();
    m.participates = e.at("participates").get<bool>();
    m.utility = e.at("utility").get<double>();
    d.miners.push_back(m);
  }
  if (j.contains("verification")) {
    const auto& v = j.at("verification");
    VerificationSummary s;
    s.passed = v.at("passed").get<bool>();
    s.eps = v.at("eps").get<double>();
    for (const auto& c : v.at("miners")) {
      s.miners.push_back({c.at("label").get<std::string>(),
                          detail::null_to_inf(c.at("grid_improvement")),
                          detail::null_to_inf(c.at("left_derivative")),
                          detail::null_to_inf(c.at("right_derivative")),
                          c.at("passed").get<bool>()});
    }
    d.verification = s;
  }
  return d;
}

// --- CSV --------------------------------------------------------------------

/// %.17g, enough digits to round-trip any double.
inline std::string format_number(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

struct SweepPoint {
  double value = 0.0;
  Equilibrium eq;
};

/// Column order: <param>,regime,H,h_ratio,participants,c_star,c_dagger, then
/// q_k,lo_k,hi_k,share_k,rel_k for every miner k (1-based, input order).
/// share_k is q_k / H; rel_k is the relative market share of the cheapest
/// miner to miner k. Blank cells mean "not defined".
inline std::string sweep_csv_header(const std::string& param, std::size_t miners) {
  std::string h = param + ",regime,H,h_ratio,participants,c_star,c_dagger";
  for (std::size_t k = 1; k <= miners; ++k) {
    const auto s = std::to_string(k);
    h += ",q_" + s + ",lo_" + s + ",hi_" + s + ",share_" + s + ",rel_" + s;
  }
  return h;
}

inline void write_sweep_csv(std::ostream& out, const std::string& param,
                            const CostProfile& costs, const std::vector<SweepPoint>& points,
                            double base_hashrate) {
  out << sweep_csv_header(param, costs.size()) << '\n';
  for (const auto& p : points) {
    const auto& eq = p.eq;
    out << format_number(p.value) << ',' << to_string(eq.regime) << ','
        << format_number(eq.total_hashrate) << ','
        << format_number(eq.total_hashrate / base_hashrate) << ',' << eq.participants.size() << ','
        << format_number(eq.thresholds.star.value) << ','
        << (eq.thresholds.dagger ? format_number(eq.thresholds.dagger->value) : "");
    std::vector<std::string> cells(costs.size());
    for (std::size_t i = 0; i < costs.size(); ++i) {
      std::string c = format_number(eq.q[i]) + ',';
      if (eq.intervals) {
        c += format_number((*eq.intervals)[i].lo) + ',' + format_number((*eq.intervals)[i].hi);
      } else {
        c += ',';
      }
      c += ',' + format_number(eq.q[i] / eq.total_hashrate) + ',';
      if (eq.participates(0) && eq.participates(i)) {
        c += format_number(relative_market_share(eq, 0, i));
      }
      cells[costs.input_index(i)] = std::move(c);
    }
    for (const auto& c : cells) out << ',' << c;
    out << '\n';
  }
}

inline json trace_line(std::size_t sweep, const std::vector<double>& q) {
  return {{"sweep", sweep}, {"q", q}};
}

}  // namespace happymine

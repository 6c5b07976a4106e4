#pragma once

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "happymine/attacks.hpp"
#include "happymine/equilibrium.hpp"
#include "happymine/io.hpp"
#include "happymine/verifier.hpp"

namespace happymine::cli {

/// Process exit codes.
inline constexpr int kOk = 0;
inline constexpr int kInputError = 2;
inline constexpr int kNegativeVerdict = 3;

namespace detail {

inline Selection parse_selection(const std::string& s) {
  if (s == "canonical") return Selection::Canonical;
  if (s == "utilitarian") return Selection::Utilitarian;
  throw ScenarioError("unknown selection '" + s + "'");
}

inline std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ScenarioError("cannot parse '" + item + "' as a number");
    }
  }
  return out;
}

/// Writes a JSON document to `path` when given, otherwise to `out`.
inline void emit(const json& doc, const std::string& path, std::ostream& out) {
  if (path.empty()) {
    out << doc.dump(2) << '\n';
    return;
  }
  std::ofstream f(path);
  if (!f) throw ScenarioError("cannot write '" + path + "'");
  f << doc.dump(2) << '\n';
}

inline json equilibrium_json(const Scenario& s, const Equilibrium& eq) {
  return to_json(make_document(s, eq, nullptr));
}

inline json attack_json(const AttackReport& r) {
  json j;
  j["baseline_utility"] = r.baseline_utility;
  j["attack_utility"] = r.attack_utility;
  j["profitable"] = r.profitable;
  j["regime_before"] = std::string(to_string(r.regime_before));
  j["regime_after"] =
      r.regime_after ? json(std::string(to_string(*r.regime_after))) : json(nullptr);
  return j;
}

struct Options {
  std::string scenario_path;
  std::string out_path;
  std::string selection = "canonical";
  bool no_verify = false;
  std::optional<double> tol;
  std::optional<std::uint64_t> seed;
  std::size_t grid_steps = 2000;

  std::string profile;
  std::string order = "round-robin";
  std::size_t max_iters = 500;
  std::string trace_path;

  std::string param;
  double from = 0.0;
  double to = 0.0;
  std::size_t steps = 0;

  std::size_t m = 0;
  double cost = 0.0;
  std::size_t k = 0;
  double Q = 1.0;
  double delta = 0.0;
  double R = 1.0;
};

inline VerifyOptions verify_options(const Options& o, const Scenario& s) {
  VerifyOptions v;
  v.eps = o.tol.value_or(s.tol.value_or(1e-6));
  v.steps = o.grid_steps;
  return v;
}

inline int cmd_solve(const Options& o, std::ostream& out) {
  const Scenario s = load_scenario(o.scenario_path);
  const CostProfile costs = s.cost_profile();
  const RewardParams params = s.params();
  const Equilibrium eq = solve_equilibrium(costs, params, parse_selection(o.selection));
  std::optional<VerificationReport> rep;
  if (!o.no_verify) {
    rep = verify_equilibrium(HashrateProfile(eq.q), costs, params, verify_options(o, s));
  }
  emit(to_json(make_document(s, eq, rep ? &*rep : nullptr)), o.out_path, out);
  return rep && !rep->passed() ? kNegativeVerdict : kOk;
}

inline int cmd_verify(const Options& o, std::ostream& out) {
  const Scenario s = load_scenario(o.scenario_path);
  const CostProfile costs = s.cost_profile();
  const RewardParams params = s.params();
  std::vector<double> q;
  if (o.profile.empty()) {
    q = solve_equilibrium(costs, params, parse_selection(o.selection)).q;
  } else {
    const auto given = parse_list(o.profile);
    if (given.size() != costs.size()) {
      throw ScenarioError("profile has " + std::to_string(given.size()) + " entries, scenario has " +
                          std::to_string(costs.size()) + " miners");
    }
    try {
      (void)HashrateProfile(given);
    } catch (const DomainError& e) {
      throw ScenarioError(e.what());
    }
    q = costs.to_sorted_order<double>(given);
  }
  const HashrateProfile profile(q);
  const auto rep = verify_equilibrium(profile, costs, params, verify_options(o, s));
  json doc;
  doc["tool"] = kToolName;
  doc["version"] = kToolVersion;
  doc["scenario"] = to_json(s);
  doc["profile"] = costs.to_input_order<double>(q);
  doc["total_hashrate"] = profile.total();
  const auto summary = summarize(rep, s, costs);
  json checks = json::array();
  for (const auto& c : summary.miners) {
    checks.push_back({{"label", c.label},
                      {"grid_improvement", happymine::detail::finite_or_null(c.grid_improvement)},
                      {"left_derivative", happymine::detail::finite_or_null(c.left_derivative)},
                      {"right_derivative", happymine::detail::finite_or_null(c.right_derivative)},
                      {"passed", c.passed}});
  }
  doc["verification"] = {{"passed", summary.passed}, {"eps", summary.eps}, {"miners", checks}};
  emit(doc, o.out_path, out);
  return summary.passed ? kOk : kNegativeVerdict;
}

inline int cmd_sweep(const Options& o, std::ostream& out) {
  if (o.param != "delta" && o.param != "Q" && o.param != "R") {
    throw ScenarioError("unknown sweep parameter '" + o.param + "' (expected delta, Q or R)");
  }
  if (!(o.from < o.to)) throw ScenarioError("sweep needs --from < --to");
  if (o.steps < 2) throw ScenarioError("sweep needs --steps >= 2");
  const Scenario s = load_scenario(o.scenario_path);
  const CostProfile costs = s.cost_profile();
  const Selection sel = parse_selection(o.selection);
  const double base = solve_equilibrium(costs, s.params(), sel).total_hashrate;

  std::vector<SweepPoint> points;
  points.reserve(o.steps);
  for (std::size_t i = 0; i < o.steps; ++i) {
    const double v = i + 1 == o.steps
                         ? o.to
                         : o.from + (o.to - o.from) * static_cast<double>(i) /
                                        static_cast<double>(o.steps - 1);
    try {
      if (o.param == "delta") {
        points.push_back({v, solve_equilibrium(costs, RewardParams(s.Q, v), sel)});
      } else if (o.param == "Q") {
        points.push_back({v, solve_equilibrium(costs, RewardParams(v, s.delta), sel)});
      } else {
        points.push_back({v, revalue(costs, s.params(), RevaluationFactor(v), sel).after});
      }
    } catch (const DomainError& e) {
      throw ScenarioError("sweep value " + format_number(v) + ": " + e.what());
    }
  }
  if (o.out_path.empty()) {
    write_sweep_csv(out, o.param, costs, points, base);
  } else {
    std::ofstream f(o.out_path);
    if (!f) throw ScenarioError("cannot write '" + o.out_path + "'");
    write_sweep_csv(f, o.param, costs, points, base);
  }
  return kOk;
}

inline int cmd_dynamics(const Options& o, std::ostream& out) {
  const Scenario s = load_scenario(o.scenario_path);
  const CostProfile costs = s.cost_profile();
  const RewardParams params = s.params();
  DynamicsOptions d;
  if (o.order == "round-robin") {
    d.order = UpdateOrder::RoundRobin;
  } else if (o.order == "random") {
    d.order = UpdateOrder::Random;
  } else {
    throw ScenarioError("unknown order '" + o.order + "' (expected round-robin or random)");
  }
  d.seed = o.seed.value_or(s.seed.value_or(kDefaultSeed));
  d.max_iters = o.max_iters;
  if (o.tol) d.tol = *o.tol;
  std::vector<double> start(costs.size(), 0.0);
  if (!o.profile.empty()) {
    const auto given = parse_list(o.profile);
    if (given.size() != costs.size()) throw ScenarioError("profile length does not match costs");
    start = costs.to_sorted_order<double>(given);
  }
  const auto trace = best_response_dynamics(HashrateProfile(start), costs, params, d);
  if (!o.trace_path.empty()) {
    std::ofstream f(o.trace_path);
    if (!f) throw ScenarioError("cannot write '" + o.trace_path + "'");
    for (std::size_t i = 0; i < trace.iterates.size(); ++i) {
      f << trace_line(i, costs.to_input_order<double>(trace.iterates[i])).dump() << '\n';
    }
  }
  json doc;
  doc["tool"] = kToolName;
  doc["version"] = kToolVersion;
  doc["scenario"] = to_json(s);
  doc["order"] = o.order;
  doc["seed"] = d.seed;
  doc["converged"] = trace.converged;
  doc["sweeps"] = trace.sweeps;
  doc["final_gap"] = trace.final_gap;
  doc["final_profile"] = costs.to_input_order<double>(trace.iterates.back());
  emit(doc, o.out_path, out);
  return trace.converged ? kOk : kNegativeVerdict;
}

inline int cmd_collude(const Options& o, std::ostream& out) {
  const auto r = collusion_report({o.m, o.cost, o.k, RewardParams(o.Q, o.delta)});
  json doc = attack_json(r);
  doc["m"] = o.m;
  doc["c"] = o.cost;
  doc["k"] = o.k;
  doc["Q"] = o.Q;
  doc["delta"] = o.delta;
  doc["case"] = collusion_case(o.m, o.cost, RewardParams(o.Q, o.delta));
  emit(doc, o.out_path, out);
  return kOk;
}

inline int cmd_sybil(const Options& o, std::ostream& out) {
  const auto r = sybil_report(o.m, o.cost, o.k, RewardParams(o.Q, o.delta));
  json doc;
  doc["m"] = o.m;
  doc["c"] = o.cost;
  doc["k"] = o.k;
  doc["Q"] = o.Q;
  doc["delta"] = o.delta;
  doc["equilibrium_shift"] = attack_json(r.equilibrium_shift);
  doc["fixed_profile_gain"] = r.fixed_profile_gain;
  emit(doc, o.out_path, out);
  return kOk;
}

inline int cmd_revalue(const Options& o, std::ostream& out) {
  const Scenario s = load_scenario(o.scenario_path);
  const auto r = revalue(s.cost_profile(), s.params(), RevaluationFactor(o.R),
                         parse_selection(o.selection));
  json doc;
  doc["tool"] = kToolName;
  doc["version"] = kToolVersion;
  doc["R"] = r.R;
  doc["scaling"] = std::string(to_string(r.scaling));
  doc["hashrate_ratio"] = r.hashrate_ratio;
  doc["expected_ratio"] = r.expected_ratio ? json(*r.expected_ratio) : json(nullptr);
  doc["before"] = equilibrium_json(s, r.before);
  doc["after"] = equilibrium_json(s, r.after);
  emit(doc, o.out_path, out);
  return kOk;
}

inline int cmd_new_miner(const Options& o, std::ostream& out) {
  json doc;
  doc["cost"] = o.cost;
  doc["delta"] = o.delta;
  try {
    const double q = new_miner_optimum(o.cost, o.delta);
    doc["entry"] = true;
    doc["q_star"] = q;
    doc["utility"] = new_miner_utility(q, o.cost, o.delta);
    emit(doc, o.out_path, out);
    return kOk;
  } catch (const NoEntry&) {
    doc["entry"] = false;
    doc["q_star"] = 0.0;
    doc["utility"] = 0.0;
    emit(doc, o.out_path, out);
    return kNegativeVerdict;
  }
}

}  // namespace detail

/// Runs the command line; returns the process exit code.
inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Equilibria of hashrate-pegged mining rewards", kToolName};
  app.set_version_flag("--version", kToolVersion);
  app.require_subcommand(1);
  detail::Options o;

  auto scenario_cmd = [&](const char* name, const char* help) {
    auto* c = app.add_subcommand(name, help);
    c->add_option("scenario", o.scenario_path, "Scenario JSON file")->required();
    c->add_option("--out", o.out_path, "Write output to this file");
    return c;
  };
  auto selection_opt = [&](CLI::App* c) {
    c->add_option("--selection", o.selection, "Point picked at H = Q: canonical|utilitarian");
  };

  auto* solve = scenario_cmd("solve", "Solve and verify the equilibrium");
  solve->add_flag("--no-verify", o.no_verify, "Skip verification");
  solve->add_option("--tol", o.tol, "Verification tolerance");
  solve->add_option("--grid-steps", o.grid_steps, "Deviation grid size");
  selection_opt(solve);

  auto* verify = scenario_cmd("verify", "Check a profile for profitable deviations");
  verify->add_option("--profile", o.profile, "Comma-separated hashrates in input order");
  verify->add_option("--tol", o.tol, "Verification tolerance");
  verify->add_option("--grid-steps", o.grid_steps, "Deviation grid size");
  selection_opt(verify);

  auto* sweep = scenario_cmd("sweep", "Tabulate equilibria over a parameter grid as CSV");
  sweep->add_option("--param", o.param, "delta|Q|R")->required();
  sweep->add_option("--from", o.from)->required();
  sweep->add_option("--to", o.to)->required();
  sweep->add_option("--steps", o.steps)->required();
  selection_opt(sweep);

  auto* dyn = scenario_cmd("dynamics", "Run best-response dynamics");
  dyn->add_option("--seed", o.seed, "Seed for random update order");
  dyn->add_option("--order", o.order, "round-robin|random");
  dyn->add_option("--max-iters", o.max_iters, "Sweep budget");
  dyn->add_option("--tol", o.tol, "Stop when no miner gains more than this");
  dyn->add_option("--profile", o.profile, "Starting hashrates in input order (default zeros)");
  dyn->add_option("--trace", o.trace_path, "Write iterates as JSON lines");

  auto* revalue_cmd = scenario_cmd("revalue", "Re-solve after the reward value changes by R");
  revalue_cmd->add_option("--R", o.R, "Revaluation factor")->required();
  selection_opt(revalue_cmd);

  auto attack_cmd = [&](const char* name, const char* help) {
    auto* c = app.add_subcommand(name, help);
    c->add_option("--m", o.m, "Number of miners")->required();
    c->add_option("--c", o.cost, "Common unit cost")->required();
    c->add_option("--k", o.k, "Colluders or identities")->required();
    c->add_option("--Q", o.Q, "Hashrate threshold");
    c->add_option("--delta", o.delta, "Decay exponent");
    c->add_option("--out", o.out_path, "Write output to this file");
    return c;
  };
  auto* collude = attack_cmd("collude", "Collusion among identical miners");
  auto* sybil = attack_cmd("sybil", "One miner posing as k identities");

  auto* entrant = app.add_subcommand("new-miner", "Optimal purchase of an entrant");
  entrant->add_option("--cost", o.cost, "Entrant unit cost")->required();
  entrant->add_option("--delta", o.delta, "Decay exponent")->required();
  entrant->add_option("--out", o.out_path, "Write output to this file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kInputError;
  }

  try {
    if (*solve) return detail::cmd_solve(o, out);
    if (*verify) return detail::cmd_verify(o, out);
    if (*sweep) return detail::cmd_sweep(o, out);
    if (*dyn) return detail::cmd_dynamics(o, out);
    if (*revalue_cmd) return detail::cmd_revalue(o, out);
    if (*collude) return detail::cmd_collude(o, out);
    if (*sybil) return detail::cmd_sybil(o, out);
    if (*entrant) return detail::cmd_new_miner(o, out);
  } catch (const ScenarioError& e) {
    err << "error: " << e.what() << '\n';
    return kInputError;
  } catch (const std::domain_error& e) {
    err << "error: " << e.what() << '\n';
    return kInputError;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return kInputError;
  }
  return kInputError;
}

}  // namespace happymine::cli

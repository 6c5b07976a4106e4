#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "happymine/core.hpp"
#include "happymine/equilibrium.hpp"

namespace happymine {

/// An entrant with cost >= 1 cannot profit in the normalised setting.
class NoEntry : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class Unsupported : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A relative market share was requested for a miner that does not mine.
class Undefined : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// --- New miner joining a system of hashrate 1 --------------------------------

/// Utility q / (q+1)^(delta+1) - c q of an entrant buying q against an
/// incumbent hashrate of 1, with Q = 1.
inline double new_miner_utility(double q, double cost, double delta) {
  return q / std::pow(q + 1.0, delta + 1.0) - cost * q;
}

inline double new_miner_second_derivative(double q, double delta) {
  return (q * delta * delta + q * delta - 2.0 * delta - 2.0) / std::pow(q + 1.0, delta + 3.0);
}

/// Utility-maximising purchase of an entrant with unit cost `cost`.
///
/// For delta > 0 the first-order condition (1 - q delta) / (q+1)^(delta+2) = c
/// has its left side falling from 1 to 0 on [0, 1/delta), so bisection on that
/// bracket finds the only maximum.
inline double new_miner_optimum(double cost, double delta) {
  if (!std::isfinite(cost) || cost <= 0.0) throw DomainError("entrant cost must be > 0");
  if (!std::isfinite(delta) || delta < 0.0) throw DomainError("delta must be >= 0");
  if (cost >= 1.0) throw NoEntry("entrant with cost >= 1 buys nothing");
  if (delta == 0.0) return std::sqrt(1.0 / cost) - 1.0;
  auto slope = [&](double q) { return (1.0 - q * delta) / std::pow(q + 1.0, delta + 2.0) - cost; };
  double lo = 0.0;
  double hi = 1.0 / delta;
  for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (slope(mid) > 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

// --- Collusion --------------------------------------------------------------

struct CollusionScenario {
  std::size_t m = 0;
  double cost = 0.0;
  std::size_t k = 0;
  RewardParams params{1.0, 0.0};
};

struct AttackReport {
  double baseline_utility = 0.0;
  double attack_utility = 0.0;
  bool profitable = false;
  Regime regime_before = Regime::BelowQ;
  /// Empty when the attack leaves a single player, which has no equilibrium:
  /// a lone miner's utility tends to the full reward as its hashrate vanishes,
  /// and that supremum is reported instead.
  std::optional<Regime> regime_after;
};

inline constexpr double kProfitMargin = 1e-12;

namespace detail {

/// Per-miner equilibrium utility among n identical miners. A single miner
/// gets the unattained supremum 1.
inline std::pair<double, std::optional<Regime>> homogeneous_utility(std::size_t n, double cost,
                                                                    const RewardParams& params) {
  if (n < 2) return {1.0, std::nullopt};
  const auto eq = solve_equilibrium(CostProfile(std::vector<double>(n, cost)), params);
  return {eq.utilities.front(), eq.regime};
}

}  // namespace detail

/// Compares each colluder's share of the coalition's equilibrium utility in
/// the (m - k + 1)-miner game with its utility in the m-miner game.
inline AttackReport collusion_report(const CollusionScenario& s) {
  if (s.m < 2) throw DomainError("collusion needs m >= 2");
  if (s.k < 2 || s.k > s.m) throw DomainError("collusion needs 2 <= k <= m");
  if (!(s.cost > 0.0) || !std::isfinite(s.cost)) throw DomainError("cost must be > 0");
  AttackReport r;
  const auto [base, before] = detail::homogeneous_utility(s.m, s.cost, s.params);
  const auto [coalition, after] = detail::homogeneous_utility(s.m - s.k + 1, s.cost, s.params);
  r.baseline_utility = base;
  r.regime_before = *before;
  r.attack_utility = coalition / static_cast<double>(s.k);
  r.regime_after = after;
  r.profitable = r.attack_utility > r.baseline_utility + kProfitMargin;
  return r;
}

/// Collusion on an arbitrary cost profile; only identical costs are modelled.
inline AttackReport collusion_report(const CostProfile& costs, std::size_t k,
                                     const RewardParams& params) {
  const auto c = costs.sorted();
  if (c.front() != c.back()) {
    throw Unsupported("collusion among miners with different costs is not modelled");
  }
  return collusion_report({costs.size(), c.front(), k, params});
}

/// Which case of the homogeneous collusion analysis applies: 1 below Q,
/// 2 at Q, 3 above Q.
inline int collusion_case(std::size_t m, double cost, const RewardParams& params) {
  switch (classify_regime(CostProfile(std::vector<double>(m, cost)), params).regime) {
    case Regime::BelowQ: return 1;
    case Regime::AtQ: return 2;
    case Regime::AboveQ: return 3;
  }
  return 0;
}

/// Smallest real k at which collusion pays in the below-Q case.
inline double below_q_collusion_threshold(std::size_t m) {
  const double md = static_cast<double>(m);
  return md - 0.5 * std::sqrt(4.0 * md + 1.0) + 0.5;
}

// --- Sybil ------------------------------------------------------------------

struct SybilReport {
  std::size_t k = 1;
  /// Equilibrium-shift view: the attacker owns k of m + k - 1 identities.
  AttackReport equilibrium_shift;
  /// Fixed-profile view: splitting the attacker's hashrate in place.
  double fixed_profile_gain = 0.0;
};

struct SplitResult {
  double before = 0.0;
  double after = 0.0;
  [[nodiscard]] double gain() const { return after - before; }
};

/// Instantaneous effect of miner `i` splitting its hashrate into `parts`.
///
/// Proportional allocation pays every unit of hashrate the same margin
/// r(H)/H - c, so a group's utility is its total hashrate times that margin.
/// When the parts sum to q_i the gain is zero.
inline SplitResult sybil_split_gain(const HashrateProfile& q, std::size_t i,
                                    std::span<const double> parts, const CostProfile& costs,
                                    const RewardParams& params) {
  if (parts.empty()) throw DomainError("a split needs at least one part");
  std::vector<double> split;
  split.reserve(q.size() + parts.size());
  double group = 0.0;
  for (std::size_t j = 0; j < q.size(); ++j) {
    if (j == i) {
      for (double p : parts) {
        split.push_back(p);
        group += p;
      }
    } else {
      split.push_back(q[j]);
    }
  }
  const HashrateProfile after(std::move(split));
  auto margin = [&](double total) { return reward(total, params) / total - costs[i]; };
  return {q[i] * margin(q.total()), group * margin(after.total())};
}

inline SybilReport sybil_report(std::size_t m, double cost, std::size_t k,
                                const RewardParams& params) {
  if (m < 2) throw DomainError("sybil analysis needs m >= 2");
  if (k < 1) throw DomainError("sybil analysis needs k >= 1");
  if (!(cost > 0.0) || !std::isfinite(cost)) throw DomainError("cost must be > 0");
  SybilReport out;
  out.k = k;
  auto& r = out.equilibrium_shift;
  const auto [base, before] = detail::homogeneous_utility(m, cost, params);
  const auto [identity, after] = detail::homogeneous_utility(m + k - 1, cost, params);
  r.baseline_utility = base;
  r.regime_before = *before;
  r.attack_utility = static_cast<double>(k) * identity;
  r.regime_after = after;
  r.profitable = r.attack_utility > r.baseline_utility + kProfitMargin;

  const CostProfile costs(std::vector<double>(m, cost));
  const auto eq = solve_equilibrium(costs, params);
  const HashrateProfile profile(eq.q);
  const std::vector<double> parts(k, eq.q.front() / static_cast<double>(k));
  out.fixed_profile_gain = sybil_split_gain(profile, 0, parts, costs, params).gain();
  return out;
}

// --- Currency revaluation ---------------------------------------------------

enum class ScalingClass { Linear, Root, Pegged, Transitional };

inline constexpr std::string_view to_string(ScalingClass s) {
  switch (s) {
    case ScalingClass::Linear: return "linear";
    case ScalingClass::Root: return "root";
    case ScalingClass::Pegged: return "pegged";
    case ScalingClass::Transitional: return "transitional";
  }
  return "?";
}

struct RevaluationReport {
  double R = 1.0;
  Equilibrium before;
  /// Hashrates of the revalued game; utilities are in old value units,
  /// i.e. R times those of the game with costs c_i / R.
  Equilibrium after;
  double hashrate_ratio = 1.0;
  ScalingClass scaling = ScalingClass::Linear;
  /// Predicted ratio for the non-transitional classes.
  std::optional<double> expected_ratio;
};

/// Re-solves the game after the reward's market value is multiplied by R,
/// which is the same game with every cost divided by R.
inline RevaluationReport revalue(const CostProfile& costs, const RewardParams& params,
                                 RevaluationFactor factor,
                                 Selection selection = Selection::Canonical) {
  const double R = factor.value();
  RevaluationReport rep;
  rep.R = R;
  rep.before = solve_equilibrium(costs, params, selection);
  std::vector<double> scaled(costs.sorted().begin(), costs.sorted().end());
  for (double& c : scaled) c /= R;
  rep.after = solve_equilibrium(CostProfile(std::move(scaled)), params, selection);
  for (double& u : rep.after.utilities) u *= R;
  rep.hashrate_ratio = rep.after.total_hashrate / rep.before.total_hashrate;

  if (rep.before.regime != rep.after.regime) {
    rep.scaling = ScalingClass::Transitional;
  } else {
    switch (rep.before.regime) {
      case Regime::BelowQ:
        rep.scaling = ScalingClass::Linear;
        rep.expected_ratio = R;
        break;
      case Regime::AboveQ:
        rep.scaling = ScalingClass::Root;
        rep.expected_ratio = std::pow(R, 1.0 / (params.delta() + 1.0));
        break;
      case Regime::AtQ:
        rep.scaling = ScalingClass::Pegged;
        rep.expected_ratio = 1.0;
        break;
    }
  }
  return rep;
}

// --- Market share and delta sweeps -----------------------------------------

/// q_i / q_j, or the ratio of interval maxima when the equilibrium sits at Q.
inline double relative_market_share(const Equilibrium& eq, std::size_t i, std::size_t j) {
  if (!eq.participates(i) || !eq.participates(j)) {
    throw Undefined("relative market share needs both miners to participate");
  }
  if (eq.regime == Regime::AtQ) return (*eq.intervals)[i].hi / (*eq.intervals)[j].hi;
  return eq.q[i] / eq.q[j];
}

struct PairShare {
  std::size_t i = 0;
  std::size_t j = 0;
  double ratio = 0.0;
};

struct SweepRow {
  double delta = 0.0;
  Equilibrium eq;
  /// r_ij for every participating pair i < j in sorted order.
  std::vector<PairShare> shares;
};

inline std::vector<SweepRow> delta_sweep(const CostProfile& costs, double Q,
                                         std::span<const double> deltas,
                                         Selection selection = Selection::Canonical) {
  for (std::size_t k = 1; k < deltas.size(); ++k) {
    if (deltas[k] < deltas[k - 1]) throw DomainError("delta grid must be sorted");
  }
  std::vector<SweepRow> rows;
  rows.reserve(deltas.size());
  for (double d : deltas) {
    SweepRow row{d, solve_equilibrium(costs, RewardParams(Q, d), selection), {}};
    const auto& p = row.eq.participants;
    for (std::size_t a = 0; a < p.size(); ++a)
      for (std::size_t b = a + 1; b < p.size(); ++b)
        row.shares.push_back({p[a], p[b], relative_market_share(row.eq, p[a], p[b])});
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace happymine

#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "happymine/core.hpp"

namespace happymine {

/// X(c) never reaches the requested level: there are too few miners.
class NoThreshold : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Cost level where the aggregate X reaches a target, with the number of
/// miners strictly below it.
struct Threshold {
  double value = 0.0;
  std::size_t participants = 0;
};

struct Thresholds {
  Threshold star;                    // X = 1
  std::optional<Threshold> dagger;   // X = delta + 1, only when m > delta + 1
};

/// Total equilibrium hashrate relative to Q.
enum class Regime { BelowQ, AtQ, AboveQ };

/// How a single profile is picked from the continuum of equilibria at H = Q.
enum class Selection { Canonical, Utilitarian };

inline constexpr std::string_view to_string(Regime r) {
  switch (r) {
    case Regime::BelowQ: return "BelowQ";
    case Regime::AtQ: return "AtQ";
    case Regime::AboveQ: return "AboveQ";
  }
  return "?";
}

inline constexpr std::string_view to_string(Selection s) {
  return s == Selection::Canonical ? "canonical" : "utilitarian";
}

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

/// Equilibrium of the game. Every per-miner vector is in sorted-cost order.
///
/// In the AtQ regime `intervals` holds the per-miner bounds of the
/// equilibrium set and `q` the profile chosen by `selection`.
struct Equilibrium {
  Regime regime = Regime::BelowQ;
  Thresholds thresholds;
  double total_hashrate = 0.0;
  std::vector<double> q;
  std::optional<std::vector<Interval>> intervals;
  Selection selection = Selection::Canonical;
  std::vector<std::size_t> participants;
  std::vector<double> utilities;

  [[nodiscard]] bool participates(std::size_t i) const {
    for (std::size_t p : participants)
      if (p == i) return true;
    return false;
  }
};

/// Regime boundary slack: |c* - 1/Q| within this resolves to AtQ.
inline constexpr double kRegimeTolerance = 1e-12;

/// Solves X(c) = target in closed form from the prefix sums of sorted costs.
///
/// With n miners strictly below c, X(c) = n - S_n / c, so c = S_n / (n - target).
/// The participant count is the largest n with X(c_n) < target, which is the
/// same as c_n (n - target) < S_n; that predicate is monotone in n.
inline Threshold solve_threshold(const CostProfile& costs, double target) {
  if (!(target >= 1.0) || !std::isfinite(target)) {
    throw DomainError("threshold target must be >= 1");
  }
  const std::size_t m = costs.size();
  if (static_cast<double>(m) <= target) {
    throw NoThreshold("X(c) < " + std::to_string(target) + " for every c with " +
                      std::to_string(m) + " miners");
  }
  const auto first = static_cast<std::size_t>(std::floor(target)) + 1;
  std::size_t n = first;
  for (std::size_t k = first; k <= m; ++k) {
    const double slack = static_cast<double>(k) - target;
    if (costs[k - 1] * slack < costs.prefix_sum(k)) n = k;
  }
  const double c = costs.prefix_sum(n) / (static_cast<double>(n) - target);
  return {c, n};
}

inline Thresholds compute_thresholds(const CostProfile& costs, const RewardParams& params) {
  Thresholds t;
  t.star = solve_threshold(costs, 1.0);
  if (static_cast<double>(costs.size()) > params.delta() + 1.0) {
    t.dagger = solve_threshold(costs, params.delta() + 1.0);
  }
  return t;
}

inline Regime classify_regime(const Thresholds& t, const RewardParams& params) {
  const double inv_q = 1.0 / params.Q();
  if (t.star.value - inv_q > kRegimeTolerance) return Regime::BelowQ;
  if (t.dagger && inv_q - t.dagger->value > kRegimeTolerance) return Regime::AboveQ;
  return Regime::AtQ;
}

struct Classification {
  Regime regime;
  Thresholds thresholds;
};

inline Classification classify_regime(const CostProfile& costs, const RewardParams& params) {
  Thresholds t = compute_thresholds(costs, params);
  return {classify_regime(t, params), t};
}

/// Per-miner bounds of the equilibrium set at H = Q. Miners with cost at or
/// above 1/Q get [0, 0].
inline std::vector<Interval> at_q_intervals(const CostProfile& costs, const RewardParams& params) {
  const double Q = params.Q();
  std::vector<Interval> out(costs.size());
  for (std::size_t i = 0; i < costs.size(); ++i) {
    if (costs[i] * Q < 1.0) {
      const double hi = Q - costs[i] * Q * Q;
      out[i] = {hi / (params.delta() + 1.0), hi};
    }
  }
  return out;
}

namespace detail {

inline double feasibility_slack(double Q) { return 1e-9 * std::max(1.0, Q); }

inline void check_at_q_feasible(double sum_lo, double sum_hi, double Q) {
  const double slack = feasibility_slack(Q);
  if (sum_lo > Q + slack || sum_hi < Q - slack) {
    throw InternalError("interval bounds do not bracket Q: sum lo = " + std::to_string(sum_lo) +
                        ", sum hi = " + std::to_string(sum_hi) + ", Q = " + std::to_string(Q));
  }
}

}  // namespace detail

/// The point lo + lambda (hi - lo) with the single lambda in [0, 1] that makes
/// the hashrates sum to Q.
inline std::vector<double> canonical_at_q_point(const std::vector<Interval>& intervals, double Q) {
  double sum_lo = 0.0;
  double sum_hi = 0.0;
  for (const auto& iv : intervals) {
    sum_lo += iv.lo;
    sum_hi += iv.hi;
  }
  detail::check_at_q_feasible(sum_lo, sum_hi, Q);
  const double width = sum_hi - sum_lo;
  double lambda = width > 0.0 ? (Q - sum_lo) / width : 0.0;
  lambda = std::clamp(lambda, 0.0, 1.0);
  std::vector<double> q(intervals.size());
  for (std::size_t i = 0; i < intervals.size(); ++i) {
    q[i] = intervals[i].lo + lambda * (intervals[i].hi - intervals[i].lo);
  }
  return q;
}

/// Starts every miner at its lower bound and hands the remaining budget to the
/// cheapest miners first. Intervals must be in sorted-cost order. This
/// maximises total utility, since at H = Q it equals 1 - sum c_i q_i.
inline std::vector<double> utilitarian_at_q_point(const std::vector<Interval>& intervals,
                                                  double Q) {
  double sum_lo = 0.0;
  double sum_hi = 0.0;
  for (const auto& iv : intervals) {
    sum_lo += iv.lo;
    sum_hi += iv.hi;
  }
  detail::check_at_q_feasible(sum_lo, sum_hi, Q);
  std::vector<double> q(intervals.size());
  double budget = std::max(0.0, Q - sum_lo);
  for (std::size_t i = 0; i < intervals.size(); ++i) {
    const double extra = std::min(intervals[i].hi - intervals[i].lo, budget);
    q[i] = intervals[i].lo + extra;
    budget -= extra;
  }
  return q;
}

namespace detail {

inline void finish(Equilibrium& eq, const CostProfile& costs, const RewardParams& params) {
  eq.participants.clear();
  for (std::size_t i = 0; i < eq.q.size(); ++i)
    if (eq.q[i] > 0.0) eq.participants.push_back(i);
  HashrateProfile profile(eq.q);
  eq.utilities.resize(eq.q.size());
  for (std::size_t i = 0; i < eq.q.size(); ++i) eq.utilities[i] = utility(i, profile, costs, params);
}

/// Proportional-model profile q_i = (H / w) (1 - c_i / bound) over the
/// miners strictly below `bound`.
inline std::vector<double> proportional_profile(const CostProfile& costs, const Threshold& bound,
                                                double scale) {
  std::vector<double> q(costs.size(), 0.0);
  for (std::size_t i = 0; i < bound.participants; ++i) {
    q[i] = std::max(scale * (1.0 - costs[i] / bound.value), 0.0);
  }
  return q;
}

}  // namespace detail

/// Equilibrium of the static proportional game (reward fixed at 1).
struct StaticEquilibrium {
  Threshold star;
  double total_hashrate = 0.0;
  std::vector<double> q;
  std::vector<std::size_t> participants;
};

inline Equilibrium solve_equilibrium(const CostProfile& costs, const RewardParams& params,
                                     Selection selection = Selection::Canonical) {
  Equilibrium eq;
  eq.thresholds = compute_thresholds(costs, params);
  eq.regime = classify_regime(eq.thresholds, params);
  eq.selection = selection;
  switch (eq.regime) {
    case Regime::BelowQ: {
      const double h = 1.0 / eq.thresholds.star.value;
      eq.total_hashrate = h;
      eq.q = detail::proportional_profile(costs, eq.thresholds.star, h);
      break;
    }
    case Regime::AtQ: {
      eq.total_hashrate = params.Q();
      eq.intervals = at_q_intervals(costs, params);
      eq.q = selection == Selection::Canonical ? canonical_at_q_point(*eq.intervals, params.Q())
                                               : utilitarian_at_q_point(*eq.intervals, params.Q());
      break;
    }
    case Regime::AboveQ: {
      const double d1 = params.delta() + 1.0;
      const double c = eq.thresholds.dagger->value;
      const double h = std::pow(std::pow(params.Q(), params.delta()) / c, 1.0 / d1);
      eq.total_hashrate = h;
      eq.q = detail::proportional_profile(costs, *eq.thresholds.dagger, h / d1);
      break;
    }
  }
  detail::finish(eq, costs, params);
  return eq;
}

inline StaticEquilibrium solve_static(const CostProfile& costs) {
  StaticEquilibrium out;
  out.star = solve_threshold(costs, 1.0);
  out.total_hashrate = 1.0 / out.star.value;
  out.q = detail::proportional_profile(costs, out.star, out.total_hashrate);
  for (std::size_t i = 0; i < out.q.size(); ++i)
    if (out.q[i] > 0.0) out.participants.push_back(i);
  return out;
}

}  // namespace happymine

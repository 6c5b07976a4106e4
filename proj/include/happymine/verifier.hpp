#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <optional>
#include <random>
#include <vector>

#include "happymine/core.hpp"

namespace happymine {

struct Candidate {
  double q = 0.0;
  double utility = 0.0;
};

struct BestResponseResult {
  double q_star = 0.0;
  double u_star = 0.0;
  std::vector<Candidate> candidates;
};

inline constexpr int kBisectionIterations = 200;
inline constexpr double kBisectionRelTol = 1e-12;

/// Default deviation range for a profile with total `total`.
inline double default_span(double total, const RewardParams& params) {
  return 2.0 * std::max(total, params.Q());
}

namespace detail {

/// Root of the above-Q first-order condition on [lo, hi]. The marginal
/// allocation Q^d (H - (d+1) q) / H^(d+2) is decreasing in q wherever it is
/// positive, so a sign change on the bracket pins a single root.
inline std::optional<double> above_q_stationary(double others, double cost,
                                                const RewardParams& params, double lo, double hi) {
  auto slope = [&](double q) {
    const double total = others + q;
    if (total <= 0.0) return 1.0;
    return utility_derivative_at(total, q, cost, params, Side::Right);
  };
  if (slope(lo) <= 0.0) return std::nullopt;
  for (int grow = 0; slope(hi) > 0.0; ++grow) {
    if (grow > 200) return std::nullopt;
    hi *= 2.0;
  }
  for (int it = 0; it < kBisectionIterations; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (slope(mid) > 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
    if (hi - lo <= kBisectionRelTol * std::max(hi, 1e-300)) break;
  }
  return 0.5 * (lo + hi);
}

}  // namespace detail

/// Best reply of a miner with unit cost `cost` to a fixed total `others` held
/// by everyone else.
///
/// When others is zero below Q the utility 1 - c q has supremum 1 that is not
/// attained; a vanishing entry of 1e-12 Q stands in for it.
inline BestResponseResult best_response(double others, double cost, const RewardParams& params,
                                        std::optional<double> span = std::nullopt) {
  if (others < 0.0 || !std::isfinite(others)) throw DomainError("others' hashrate must be >= 0");
  if (!(cost > 0.0)) throw DomainError("cost must be > 0");
  const double Q = params.Q();
  const double upper = span.value_or(default_span(others, params));

  BestResponseResult out;
  auto consider = [&](double q) {
    out.candidates.push_back({q, deviation_utility(q, others, cost, params)});
  };
  consider(0.0);
  if (others > 0.0) {
    const double q = std::sqrt(others / cost) - others;
    if (q > 0.0 && others + q < Q) consider(q);
  } else {
    consider(1e-12 * Q);
  }
  const double boundary = Q - others;
  if (boundary > 0.0) consider(boundary);
  if (auto q = detail::above_q_stationary(others, cost, params, std::max(0.0, boundary),
                                          std::max(upper, std::max(0.0, boundary) + Q))) {
    consider(*q);
  }

  out.q_star = out.candidates.front().q;
  out.u_star = out.candidates.front().utility;
  for (const auto& c : out.candidates) {
    if (c.utility > out.u_star) {
      out.u_star = c.utility;
      out.q_star = c.q;
    }
  }
  return out;
}

struct GridResult {
  double best_q = 0.0;
  double best_utility = 0.0;
  double current_utility = 0.0;

  [[nodiscard]] double improvement() const { return best_utility - current_utility; }
};

/// Brute-force deviation search for miner `i` over a uniform grid on
/// [0, span] plus the kink Q - H_{-i} and the current hashrate.
inline GridResult grid_oracle(std::size_t i, const HashrateProfile& q, const CostProfile& costs,
                              const RewardParams& params, std::optional<double> span = std::nullopt,
                              std::size_t steps = 2000) {
  if (steps == 0) throw DomainError("grid needs at least one step");
  const double others = q.others(i);
  const double cost = costs[i];
  const double upper = span.value_or(default_span(q.total(), params));

  GridResult g;
  g.current_utility = deviation_utility(q[i], others, cost, params);
  g.best_q = q[i];
  g.best_utility = g.current_utility;
  auto try_point = [&](double x) {
    const double u = deviation_utility(x, others, cost, params);
    if (u > g.best_utility) {
      g.best_utility = u;
      g.best_q = x;
    }
  };
  for (std::size_t k = 0; k <= steps; ++k) {
    try_point(upper * static_cast<double>(k) / static_cast<double>(steps));
  }
  if (params.Q() - others >= 0.0) try_point(params.Q() - others);
  return g;
}

struct MinerVerdict {
  bool participant = false;
  double grid_improvement = 0.0;
  double left_derivative = 0.0;
  double right_derivative = 0.0;
  bool passed = false;
};

struct VerificationReport {
  double eps = 0.0;
  bool at_q = false;
  std::vector<MinerVerdict> miners;

  [[nodiscard]] bool passed() const {
    return std::all_of(miners.begin(), miners.end(), [](const auto& m) { return m.passed; });
  }
};

struct VerifyOptions {
  double eps = 1e-6;
  std::optional<double> span;
  std::size_t steps = 2000;
  /// Relative distance from Q at which a total counts as sitting on the kink.
  double kink_tolerance = 1e-9;
};

/// Certifies that no miner gains more than eps by deviating: a grid search
/// over deviations plus first-order sign conditions. Failures are reported,
/// never thrown.
inline VerificationReport verify_equilibrium(const HashrateProfile& q, const CostProfile& costs,
                                             const RewardParams& params,
                                             const VerifyOptions& opts = {}) {
  if (q.size() != costs.size()) throw DomainError("profile and costs differ in length");
  VerificationReport rep;
  rep.eps = opts.eps;
  const double Q = params.Q();
  const double total = q.total();
  rep.at_q = std::abs(total - Q) <= opts.kink_tolerance * Q;
  const double h = rep.at_q ? Q : total;

  rep.miners.resize(q.size());
  for (std::size_t i = 0; i < q.size(); ++i) {
    auto& v = rep.miners[i];
    v.participant = q[i] > 0.0;
    v.grid_improvement = grid_oracle(i, q, costs, params, opts.span, opts.steps).improvement();
    bool sign_ok = false;
    if (h <= 0.0) {
      // Nobody mines: any entrant collects the whole reward.
      v.left_derivative = v.right_derivative = INFINITY;
    } else if (v.participant) {
      v.left_derivative = utility_derivative_at(h, q[i], costs[i], params, Side::Left);
      v.right_derivative = utility_derivative_at(h, q[i], costs[i], params, Side::Right);
      sign_ok = rep.at_q ? (v.left_derivative >= -opts.eps && v.right_derivative <= opts.eps)
                         : std::abs(v.left_derivative) <= opts.eps;
    } else {
      // Entering from zero pushes the total up, so the right branch applies.
      v.left_derivative = v.right_derivative =
          utility_derivative_at(h, 0.0, costs[i], params, Side::Right);
      sign_ok = v.right_derivative <= opts.eps;
    }
    v.passed = sign_ok && v.grid_improvement <= opts.eps;
  }
  return rep;
}

enum class UpdateOrder { RoundRobin, Random };

struct DynamicsOptions {
  UpdateOrder order = UpdateOrder::RoundRobin;
  std::uint64_t seed = 42;
  std::size_t max_iters = 500;
  /// Utility gain below which a miner is considered settled.
  double tol = 1e-12;
  /// Largest hashrate change in the last sweep, relative to max(1, H), that
  /// still counts as stationary. Utility is flat near a best reply, so a gain
  /// below tol alone leaves hashrates only about sqrt(tol) from the fixed point.
  double step_tol = 1e-12;
};

struct DynamicsTrace {
  std::vector<std::vector<double>> iterates;
  bool converged = false;
  double final_gap = 0.0;
  std::size_t sweeps = 0;
};

/// Largest utility gain any single miner can get by best-responding.
inline double best_response_gap(const std::vector<double>& q, const CostProfile& costs,
                                const RewardParams& params) {
  const HashrateProfile profile(q);
  double gap = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) {
    const double others = profile.others(i);
    const auto br = best_response(others, costs[i], params);
    gap = std::max(gap, br.u_star - deviation_utility(q[i], others, costs[i], params));
  }
  return gap;
}

/// Sequential best-response dynamics. One iteration is a sweep in which every
/// miner in turn replaces its hashrate with a best reply to the current
/// others. Random order reshuffles each sweep from `seed`. The starting
/// profile is recorded as the first iterate. Stops once no miner can gain
/// more than tol and the last sweep moved no hashrate by more than step_tol.
inline DynamicsTrace best_response_dynamics(const HashrateProfile& initial,
                                            const CostProfile& costs, const RewardParams& params,
                                            const DynamicsOptions& opts = {}) {
  if (opts.max_iters < 1) throw DomainError("dynamics need max_iters >= 1");
  if (initial.size() != costs.size()) throw DomainError("profile and costs differ in length");
  DynamicsTrace trace;
  std::vector<double> q(initial.values().begin(), initial.values().end());
  trace.iterates.push_back(q);
  std::mt19937_64 rng(opts.seed);
  std::vector<std::size_t> order(q.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  for (std::size_t sweep = 0; sweep < opts.max_iters; ++sweep) {
    if (opts.order == UpdateOrder::Random) std::shuffle(order.begin(), order.end(), rng);
    double moved = 0.0;
    for (std::size_t i : order) {
      double others = 0.0;
      for (std::size_t j = 0; j < q.size(); ++j)
        if (j != i) others += q[j];
      const double next = best_response(others, costs[i], params).q_star;
      moved = std::max(moved, std::abs(next - q[i]));
      q[i] = next;
    }
    trace.iterates.push_back(q);
    trace.sweeps = sweep + 1;
    trace.final_gap = best_response_gap(q, costs, params);
    const double scale = std::max(1.0, std::accumulate(q.begin(), q.end(), 0.0));
    if (trace.final_gap <= opts.tol && moved <= opts.step_tol * scale) {
      trace.converged = true;
      break;
    }
  }
  return trace;
}

}  // namespace happymine

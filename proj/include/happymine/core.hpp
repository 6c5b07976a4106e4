#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace happymine {

/// Raised when an argument lies outside the domain of a model function.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Raised when a solver reaches a state its own invariants rule out.
class InternalError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Per-unit hashrate costs of the miners, kept in non-decreasing order.
///
/// All model math indexes miners by their position in `sorted()`. The
/// permutation back to the caller's order is kept so reports can be given in
/// input order.
class CostProfile {
 public:
  CostProfile() = delete;

  explicit CostProfile(std::vector<double> costs) {
    if (costs.size() < 2) {
      throw DomainError("cost profile needs at least two miners");
    }
    for (std::size_t i = 0; i < costs.size(); ++i) {
      if (!std::isfinite(costs[i]) || costs[i] <= 0.0) {
        throw DomainError("cost of miner " + std::to_string(i) +
                          " must be finite and strictly positive");
      }
    }
    input_index_.resize(costs.size());
    std::iota(input_index_.begin(), input_index_.end(), std::size_t{0});
    std::stable_sort(input_index_.begin(), input_index_.end(),
                     [&](std::size_t a, std::size_t b) { return costs[a] < costs[b]; });
    sorted_.reserve(costs.size());
    for (std::size_t idx : input_index_) sorted_.push_back(costs[idx]);
    prefix_.resize(sorted_.size() + 1, 0.0);
    for (std::size_t i = 0; i < sorted_.size(); ++i) prefix_[i + 1] = prefix_[i] + sorted_[i];
  }

  [[nodiscard]] std::size_t size() const noexcept { return sorted_.size(); }
  [[nodiscard]] std::span<const double> sorted() const noexcept { return sorted_; }
  [[nodiscard]] double operator[](std::size_t i) const { return sorted_.at(i); }

  /// Sum of the `n` cheapest costs.
  [[nodiscard]] double prefix_sum(std::size_t n) const { return prefix_.at(n); }

  /// Input position of the miner at sorted position `i`.
  [[nodiscard]] std::size_t input_index(std::size_t i) const { return input_index_.at(i); }

  template <typename T>
  [[nodiscard]] std::vector<T> to_input_order(std::span<const T> by_sorted) const {
    if (by_sorted.size() != size()) throw DomainError("length does not match cost profile");
    std::vector<T> out(size());
    for (std::size_t i = 0; i < size(); ++i) out[input_index_[i]] = by_sorted[i];
    return out;
  }

  template <typename T>
  [[nodiscard]] std::vector<T> to_sorted_order(std::span<const T> by_input) const {
    if (by_input.size() != size()) throw DomainError("length does not match cost profile");
    std::vector<T> out(size());
    for (std::size_t i = 0; i < size(); ++i) out[i] = by_input[input_index_[i]];
    return out;
  }

 private:
  std::vector<double> sorted_;
  std::vector<double> prefix_;
  std::vector<std::size_t> input_index_;
};

/// The reward rule min(1, (Q/H)^delta): full reward up to hashrate Q, then a
/// power-law decay with exponent delta. delta = 0 is the static reward.
class RewardParams {
 public:
  RewardParams(double threshold, double decay) : q_(threshold), delta_(decay) {
    if (!std::isfinite(q_) || q_ <= 0.0) throw DomainError("Q must be finite and > 0");
    if (!std::isfinite(delta_) || delta_ < 0.0) throw DomainError("delta must be finite and >= 0");
  }

  [[nodiscard]] double Q() const noexcept { return q_; }
  [[nodiscard]] double delta() const noexcept { return delta_; }

 private:
  double q_;
  double delta_;
};

/// Hashrates of all miners with their left-to-right sum.
class HashrateProfile {
 public:
  explicit HashrateProfile(std::vector<double> q) : q_(std::move(q)) {
    for (std::size_t i = 0; i < q_.size(); ++i) {
      if (!std::isfinite(q_[i]) || q_[i] < 0.0) {
        throw DomainError("hashrate of miner " + std::to_string(i) + " must be finite and >= 0");
      }
      total_ += q_[i];
    }
  }

  [[nodiscard]] std::size_t size() const noexcept { return q_.size(); }
  [[nodiscard]] double operator[](std::size_t i) const { return q_.at(i); }
  [[nodiscard]] std::span<const double> values() const noexcept { return q_; }
  [[nodiscard]] double total() const noexcept { return total_; }

  /// Sum of everyone else's hashrate.
  [[nodiscard]] double others(std::size_t i) const { return std::max(0.0, total_ - q_.at(i)); }

 private:
  std::vector<double> q_;
  double total_ = 0.0;
};

/// Multiplier applied to the market value of the reward.
class RevaluationFactor {
 public:
  explicit RevaluationFactor(double r) : r_(r) {
    if (!std::isfinite(r_) || r_ <= 0.0) throw DomainError("revaluation factor must be > 0");
  }
  [[nodiscard]] double value() const noexcept { return r_; }

 private:
  double r_;
};

enum class Side { Left, Right };

/// Dispensed block reward at total hashrate H.
inline double reward(double total, const RewardParams& params) {
  if (!(total > 0.0)) throw DomainError("reward needs total hashrate > 0");
  if (total <= params.Q()) return 1.0;
  return std::pow(params.Q() / total, params.delta());
}

/// Derivative of miner i's utility given its own hashrate and the system total.
///
/// Off the kink the side is ignored. At total == Q, Left is the branch for
/// total < Q and Right the branch for total > Q.
inline double utility_derivative_at(double total, double own, double cost,
                                    const RewardParams& params, Side side) {
  if (!(total > 0.0)) throw DomainError("derivative needs total hashrate > 0");
  const bool above = total > params.Q() || (total == params.Q() && side == Side::Right);
  // Q^d / H^(d+2) is written (Q/H)^d / H^2 so that delta = 0 reproduces the
  // static expression exactly.
  const double decay = above ? std::pow(params.Q() / total, params.delta()) : 1.0;
  const double weight = above ? params.delta() + 1.0 : 1.0;
  return decay * (total - weight * own) / (total * total) - cost;
}

inline double allocation(std::size_t i, const HashrateProfile& q, const RewardParams& params) {
  const double total = q.total();
  if (!(total > 0.0)) throw DomainError("allocation undefined at zero total hashrate");
  return q[i] / total * reward(total, params);
}

inline double utility(std::size_t i, const HashrateProfile& q, const CostProfile& costs,
                      const RewardParams& params) {
  if (q.size() != costs.size()) throw DomainError("profile and costs differ in length");
  return allocation(i, q, params) - costs[i] * q[i];
}

/// Utility of a miner holding `own` when everyone else holds `others` in total.
/// A miner with no hashrate earns nothing, including when others is zero.
inline double deviation_utility(double own, double others, double cost,
                                const RewardParams& params) {
  if (own <= 0.0) return 0.0;
  const double total = others + own;
  return own / total * reward(total, params) - cost * own;
}

inline double utility_derivative(std::size_t i, const HashrateProfile& q, const CostProfile& costs,
                                 const RewardParams& params, Side side) {
  if (q.size() != costs.size()) throw DomainError("profile and costs differ in length");
  return utility_derivative_at(q.total(), q[i], costs[i], params, side);
}

/// X(c) = sum_i max(1 - c_i / c, 0).
inline double aggregate_x(const CostProfile& costs, double c) {
  if (!(c > 0.0)) throw DomainError("aggregate_x needs c > 0");
  double x = 0.0;
  for (double ci : costs.sorted()) x += std::max(1.0 - ci / c, 0.0);
  return x;
}

}  // namespace happymine

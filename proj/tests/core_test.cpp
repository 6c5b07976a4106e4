#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "happymine/core.hpp"
#include "test_support.hpp"

namespace hm = happymine;
using hm::testing::Generator;

TEST(CostProfile, SortsAndRemembersInputOrder) {
  const hm::CostProfile c({0.8, 0.1, 0.5});
  EXPECT_EQ(c[0], 0.1);
  EXPECT_EQ(c[1], 0.5);
  EXPECT_EQ(c[2], 0.8);
  EXPECT_EQ(c.input_index(0), 1u);
  EXPECT_EQ(c.input_index(2), 0u);
  const std::vector<double> by_sorted{1.0, 2.0, 3.0};
  EXPECT_EQ(c.to_input_order<double>(by_sorted), (std::vector<double>{3.0, 1.0, 2.0}));
  EXPECT_EQ(c.to_sorted_order<double>(std::vector<double>{3.0, 1.0, 2.0}), by_sorted);
  EXPECT_DOUBLE_EQ(c.prefix_sum(2), 0.6);
}

TEST(CostProfile, RejectsBadInput) {
  EXPECT_THROW(hm::CostProfile({0.5}), hm::DomainError);
  EXPECT_THROW(hm::CostProfile({0.5, 0.0}), hm::DomainError);
  EXPECT_THROW(hm::CostProfile({0.5, -1.0}), hm::DomainError);
  EXPECT_THROW(hm::CostProfile({0.5, NAN}), hm::DomainError);
  EXPECT_THROW(hm::CostProfile({0.5, INFINITY}), hm::DomainError);
}

TEST(RewardParams, Validates) {
  EXPECT_THROW(hm::RewardParams(0.0, 1.0), hm::DomainError);
  EXPECT_THROW(hm::RewardParams(1.0, -0.1), hm::DomainError);
  EXPECT_NO_THROW(hm::RewardParams(1.0, 0.0));
  EXPECT_THROW(hm::RevaluationFactor(0.0), hm::DomainError);
}

TEST(HashrateProfile, TotalIsLeftToRightSum) {
  const hm::HashrateProfile q({0.1, 0.2, 0.3});
  EXPECT_EQ(q.total(), (0.1 + 0.2) + 0.3);
  EXPECT_THROW(hm::HashrateProfile({0.1, -0.2}), hm::DomainError);
}

TEST(Reward, Values) {
  EXPECT_EQ(hm::reward(1.0, {1.0, 3.0}), 1.0);
  EXPECT_EQ(hm::reward(2.0, {1.0, 1.0}), 0.5);
  EXPECT_EQ(hm::reward(4.0, {1.0, 2.0}), 0.0625);
  EXPECT_EQ(hm::reward(0.3, {1.0, 2.0}), 1.0);
  EXPECT_THROW(hm::reward(0.0, {1.0, 1.0}), hm::DomainError);
}

TEST(Reward, NonIncreasingAndBounded) {
  Generator g(1);
  for (int t = 0; t < 200; ++t) {
    const hm::RewardParams p(g.uniform(0.1, 10.0), g.uniform(0.0, 5.0));
    const double a = g.uniform(1e-3, 30.0);
    const double b = a + g.uniform(0.0, 30.0);
    const double ra = hm::reward(a, p);
    const double rb = hm::reward(b, p);
    EXPECT_GT(rb, 0.0);
    EXPECT_LE(ra, 1.0);
    EXPECT_LE(rb, ra);
  }
}

TEST(Allocation, Examples) {
  const hm::HashrateProfile q({1.0, 1.0});
  EXPECT_EQ(hm::allocation(0, q, {1.0, 1.0}), 0.25);
  EXPECT_EQ(hm::allocation(1, q, {1.0, 1.0}), 0.25);

  const hm::HashrateProfile s({0.3, 0.7});
  EXPECT_DOUBLE_EQ(hm::allocation(0, s, {1.0, 0.0}), 0.3);
  EXPECT_DOUBLE_EQ(hm::allocation(1, s, {1.0, 0.0}), 0.7);

  EXPECT_EQ(hm::allocation(0, hm::HashrateProfile({0.0, 2.0}), {1.0, 1.0}), 0.0);
  EXPECT_THROW(hm::allocation(0, hm::HashrateProfile({0.0, 0.0}), {1.0, 1.0}), hm::DomainError);
}

TEST(Allocation, SumsToReward) {
  Generator g(2);
  for (int t = 0; t < 200; ++t) {
    const auto in = g.instance(20);
    const hm::RewardParams p(in.Q, in.delta);
    std::vector<double> q(in.costs.size());
    for (double& x : q) x = g.uniform(0.0, 2.0 * in.Q / static_cast<double>(q.size()));
    const hm::HashrateProfile profile(q);
    double sum = 0.0;
    for (std::size_t i = 0; i < q.size(); ++i) sum += hm::allocation(i, profile, p);
    EXPECT_NEAR(sum, hm::reward(profile.total(), p), 1e-12);
  }
}

TEST(Allocation, SymmetricUnderSwap) {
  const hm::RewardParams p(1.0, 1.5);
  const hm::HashrateProfile a({0.4, 0.2, 0.4});
  const hm::HashrateProfile b({0.4, 0.4, 0.2});
  EXPECT_EQ(hm::allocation(0, a, p), hm::allocation(0, b, p));
  EXPECT_EQ(hm::allocation(1, a, p), hm::allocation(2, b, p));
}

TEST(Utility, Examples) {
  const hm::CostProfile c({0.1, 0.1});
  EXPECT_DOUBLE_EQ(hm::utility(0, hm::HashrateProfile({1.0, 1.0}), c, {1.0, 1.0}), 0.15);
  EXPECT_EQ(hm::utility(0, hm::HashrateProfile({0.0, 1.0}), c, {1.0, 1.0}), 0.0);
}

TEST(UtilityDerivative, StaticBranchesCoincide) {
  Generator g(3);
  for (int t = 0; t < 100; ++t) {
    const hm::RewardParams p(g.uniform(0.1, 10.0), 0.0);
    const double total = g.uniform(0.01, 20.0);
    const double own = g.uniform(0.0, total);
    const double cost = g.uniform(0.01, 2.0);
    const double left = hm::utility_derivative_at(total, own, cost, p, hm::Side::Left);
    const double right = hm::utility_derivative_at(total, own, cost, p, hm::Side::Right);
    EXPECT_EQ(left, right);
    EXPECT_EQ(left, (total - own) / (total * total) - cost);
  }
}

TEST(UtilityDerivative, LeftAtLeastRightOnTheKink) {
  Generator g(4);
  for (int t = 0; t < 100; ++t) {
    const hm::RewardParams p(g.uniform(0.1, 10.0), g.uniform(0.01, 5.0));
    const double own = g.uniform(1e-3, p.Q());
    const double cost = g.uniform(0.01, 2.0);
    EXPECT_GE(hm::utility_derivative_at(p.Q(), own, cost, p, hm::Side::Left),
              hm::utility_derivative_at(p.Q(), own, cost, p, hm::Side::Right));
  }
}

TEST(UtilityDerivative, MatchesCentralDifferences) {
  Generator g(5);
  int checked = 0;
  while (checked < 100) {
    const auto in = g.instance(8);
    const hm::CostProfile costs(in.costs);
    const hm::RewardParams p(in.Q, in.delta);
    std::vector<double> q(costs.size());
    for (double& x : q) x = g.uniform(0.01, 2.0 * in.Q / static_cast<double>(q.size()));
    const hm::HashrateProfile profile(q);
    const std::size_t i = g.index(0, q.size() - 1);
    const double h = 1e-6 * std::max(q[i], 1e-3);
    if (std::abs(profile.total() - in.Q) < 10.0 * h) continue;
    auto u = [&](double x) {
      auto moved = q;
      moved[i] = x;
      return hm::utility(i, hm::HashrateProfile(moved), costs, p);
    };
    const double fd = (u(q[i] + h) - u(q[i] - h)) / (2.0 * h);
    EXPECT_NEAR(hm::utility_derivative(i, profile, costs, p, hm::Side::Left), fd, 1e-6);
    ++checked;
  }
}

TEST(AggregateX, Examples) {
  EXPECT_DOUBLE_EQ(hm::aggregate_x(hm::CostProfile({0.1, 0.8}), 0.9), 1.0);
  EXPECT_EQ(hm::aggregate_x(hm::CostProfile({0.3, 0.8}), 0.3), 0.0);
  EXPECT_EQ(hm::aggregate_x(hm::CostProfile({0.3, 0.8}), 0.1), 0.0);
  EXPECT_NEAR(hm::aggregate_x(hm::CostProfile(hm::testing::harmonic_costs()), 493.0 / 560.0), 1.0,
              1e-12);
  EXPECT_THROW(hm::aggregate_x(hm::CostProfile({0.3, 0.8}), 0.0), hm::DomainError);
}

TEST(AggregateX, MonotoneWithLimitM) {
  Generator g(6);
  for (int t = 0; t < 100; ++t) {
    const hm::CostProfile costs(g.costs(g.index(2, 30)));
    const double a = g.uniform(0.001, 5.0);
    const double b = a + g.uniform(0.0, 5.0);
    EXPECT_LE(hm::aggregate_x(costs, a), hm::aggregate_x(costs, b));
    EXPECT_NEAR(hm::aggregate_x(costs, 1e15), static_cast<double>(costs.size()), 1e-9);
  }
}

//------------------------------------------------------------------------------
//
//   Copyright 2026 The fedauction Authors
//
//   Licensed under the Apache License, Version 2.0 (the "License");
//   you may not use this file except in compliance with the License.
//   You may obtain a copy of the License at
//
//       http://www.apache.org/licenses/LICENSE-2.0
//
//   Unless required by applicable law or agreed to in writing, software
//   distributed under the License is distributed on an "AS IS" BASIS,
//   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
//   See the License for the specific language governing permissions and
//   limitations under the License.
//
//------------------------------------------------------------------------------

#include <gtest/gtest.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <vector>

#include "test_support.hpp"

namespace fa = fedauction;
using fa::testing::owner;

namespace {

fa::MarketConfig one_group()
{
  auto c   = fa::testing::free_platform();
  c.groups = 1;
  return c;
}

TEST(Rma, GroupIndexBoundaries)
{
  fa::MarketConfig c;  // width 0.12
  EXPECT_EQ(fa::rma::group_index(0.0, c), 1);
  EXPECT_EQ(fa::rma::group_index(0.119, c), 1);
  EXPECT_EQ(fa::rma::group_index(0.121, c), 2);
  EXPECT_EQ(fa::rma::group_index(1.19, c), 10);
  EXPECT_EQ(fa::rma::group_index(1.2, c), 10);
  EXPECT_EQ(fa::rma::group_index(5.0, c), 10);
}

TEST(Rma, PartitionVirtualEmdIsMidpoint)
{
  fa::MarketConfig              c;
  std::vector<fa::DataOwner>    o{owner(1, 1, 0.05, {1}), owner(1, 1, 0.5, {2}), owner(1, 1, 1.15, {3})};
  auto const                    p = fa::rma::partition_by_emd(o, c);
  EXPECT_EQ(p.group_of, (std::vector<int>{1, 5, 10}));
  EXPECT_NEAR(p.virtual_emd(1), 0.06, 1e-15);
  EXPECT_NEAR(p.virtual_emd(10), 1.14, 1e-15);
  for (int j = 1; j <= 10; ++j)
  {
    double const lo = (j - 1) * p.width;
    EXPECT_GT(p.virtual_emd(j), lo);
    EXPECT_LT(p.virtual_emd(j), lo + p.width);
  }
}

TEST(Rma, DensityLoneOwnerExample)
{
  auto const                 c = one_group();
  std::vector<fa::DataOwner> o{owner(1.0, 10.0, 0.3, {1})};
  auto const                 g = fa::ConflictGraph::build(o);
  double const               a = fa::testing::alpha_of(0.6);
  double const expected        = fa::testing::shortfall(0, a) - fa::testing::shortfall(10, a) - 1.0;
  double const v               = fa::rma::marginal_density(0, {}, 0.6, o, c, g);
  EXPECT_NEAR(v, expected, 1e-12);
  EXPECT_NEAR(v, 3.52, 0.01);
}

TEST(Rma, DensityZeroAtBreakEvenBid)
{
  auto const                 c = one_group();
  double const               a = fa::testing::alpha_of(0.6);
  double const breakeven       = fa::testing::shortfall(0, a) - fa::testing::shortfall(10, a);
  std::vector<fa::DataOwner> o{owner(breakeven, 10.0, 0.3, {1})};
  auto const                 g = fa::ConflictGraph::build(o);
  EXPECT_NEAR(fa::rma::marginal_density(0, {}, 0.6, o, c, g), 0.0, 1e-12);
}

TEST(Rma, DensityScalesWithInverseConflictDegree)
{
  auto const                 c = one_group();
  std::vector<fa::DataOwner> alone{owner(1.0, 10.0, 0.3, {1}), owner(1.0, 10.0, 0.3, {2})};
  std::vector<fa::DataOwner> paired{owner(1.0, 10.0, 0.3, {1}), owner(1.0, 10.0, 0.3, {1})};
  double const v1 = fa::rma::marginal_density(0, {}, 0.6, alone, c, fa::ConflictGraph::build(alone));
  double const v2 = fa::rma::marginal_density(0, {}, 0.6, paired, c, fa::ConflictGraph::build(paired));
  EXPECT_NEAR(v2, v1 / 2.0, 1e-12);
}

TEST(Rma, DensityChargesPlatformIncrementOnlyAfterFirstWorker)
{
  fa::MarketConfig c;
  c.groups                 = 1;
  c.platform_transmit_cost = 0.0;
  std::vector<fa::DataOwner> o{owner(1.0, 10.0, 0.3, {1}), owner(1.0, 10.0, 0.3, {2})};
  auto const                 g = fa::ConflictGraph::build(o);
  double const               a = fa::testing::alpha_of(0.6);
  std::vector<fa::OwnerId>   s{1};
  double const expected = fa::testing::shortfall(10, a) - fa::testing::shortfall(20, a) - 1.0 - 10 * 0.5 * 0.05;
  EXPECT_NEAR(fa::rma::marginal_density(0, s, 0.6, o, c, g), expected, 1e-12);
}

TEST(Rma, SelectWinnersSmallPools)
{
  auto const c = one_group();
  {
    std::vector<fa::DataOwner> o{owner(1.0, 10.0, 0.3, {1})};
    auto const                 g = fa::ConflictGraph::build(o);
    fa::rma::DensityModel      m(o, c, g);
    std::vector<fa::OwnerId>   pool{0};
    EXPECT_EQ(fa::rma::select_winners(m, pool, 0.6, 0.0, true), (fa::OwnerSet{0}));
    EXPECT_TRUE(fa::rma::select_winners(m, {}, 0.6, 0.0, true).empty());
  }
  {
    // owner 0 is cheapest and blocks everyone else
    std::vector<fa::DataOwner> o{owner(0.1, 10.0, 0.3, {1, 2, 3}), owner(1.0, 10.0, 0.3, {1}),
                                 owner(1.0, 10.0, 0.3, {2}), owner(1.0, 10.0, 0.3, {3})};
    auto const                 g = fa::ConflictGraph::build(o);
    fa::rma::DensityModel      m(o, c, g);
    std::vector<fa::OwnerId>   pool{0, 1, 2, 3};
    // owner 0 has degree 3 so its density is divided by 4; others by 2
    double const v0 = m.density(0, 0, true, 0.6);
    double const v1 = m.density(1, 0, true, 0.6);
    auto const   w  = fa::rma::select_winners(m, pool, 0.6, 0.0, true);
    if (v0 > v1)
    {
      EXPECT_EQ(w, (fa::OwnerSet{0}));
    }
    else
    {
      EXPECT_EQ(w.front(), 1u);
    }
  }
}

// independent replay: recompute densities from raw formulas on explicit sets
fa::OwnerSet replay_greedy(std::vector<fa::DataOwner> const &o, fa::MarketConfig const &c, double vemd)
{
  auto const   g = fa::ConflictGraph::build(o);
  fa::OwnerSet chosen;
  std::vector<char> gone(o.size(), 0);
  for (;;)
  {
    double  best_v = -std::numeric_limits<double>::infinity();
    fa::OwnerId best = 0;
    for (fa::OwnerId k = 0; k < o.size(); ++k)
    {
      if (gone[k])
      {
        continue;
      }
      double const v = fa::rma::marginal_density(k, chosen, vemd, o, c, g);
      if (v > best_v)
      {
        best_v = v;
        best   = k;
      }
    }
    if (!(best_v > 0.0))
    {
      return chosen;
    }
    chosen.push_back(best);
    gone[best] = 1;
    for (fa::OwnerId k = 0; k < o.size(); ++k)
    {
      if (g.adjacent(k, best))
      {
        gone[k] = 1;
      }
    }
  }
}

TEST(Rma, SelectWinnersMatchesBruteForceReplay)
{
  auto const      c = one_group();
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> bid(0.0, 12.0), data(1.0, 10.0);
  std::uniform_int_distribution<int>     ch(1, 5);
  for (int t = 0; t < 200; ++t)
  {
    std::vector<fa::DataOwner> o;
    for (int k = 0; k < 3 + t % 5; ++k)
    {
      o.push_back(owner(bid(rng), data(rng), 0.2, {ch(rng), ch(rng)}));
    }
    auto const               g = fa::ConflictGraph::build(o);
    fa::rma::DensityModel    m(o, c, g);
    std::vector<fa::OwnerId> pool(o.size());
    std::iota(pool.begin(), pool.end(), 0);
    EXPECT_EQ(fa::rma::select_winners(m, pool, 0.6, 0.0, true), replay_greedy(o, c, 0.6));
  }
}

TEST(Rma, LoneOwnerPaymentIsStandaloneSurplus)
{
  auto const                 c = one_group();
  std::vector<fa::DataOwner> o{owner(1.0, 10.0, 0.3, {1})};
  auto const                 out = fa::rma::run_rma(o, c, 7);
  ASSERT_EQ(out.winners, (fa::OwnerSet{0}));
  double const a = fa::testing::alpha_of(0.6);
  EXPECT_NEAR(out.payments[0], fa::testing::shortfall(0, a) - fa::testing::shortfall(10, a), 1e-12);
  EXPECT_NEAR(out.payments[0], 4.52, 0.01);
}

TEST(Rma, PaymentWhenFirstReplacementConflicts)
{
  auto const                 c = one_group();
  std::vector<fa::DataOwner> o{owner(1.0, 10.0, 0.3, {1}), owner(2.0, 10.0, 0.3, {1})};
  auto const                 g   = fa::ConflictGraph::build(o);
  auto const                 out = fa::rma::run_rma(o, c, g, 3);
  ASSERT_EQ(out.winners, (fa::OwnerSet{0}));
  // with owner 0 removed, owner 1 is picked first; owner 0 must match its density
  fa::rma::DensityModel m(o, c, g);
  double const          v1 = m.density(1, 0.0, true, 0.6);
  EXPECT_NEAR(m.density(0, 0.0, true, 0.6, out.payments[0]), v1, 1e-12);
  EXPECT_NEAR(out.payments[0], 2.0, 1e-12);  // identical owners apart from the bid
}

TEST(Rma, EmptyAndHopelessMarkets)
{
  fa::MarketConfig const c;
  auto const             none = fa::rma::run_rma({}, c, 1);
  EXPECT_TRUE(none.winners.empty());
  EXPECT_EQ(none.social_welfare, 0.0);

  std::vector<fa::DataOwner> o{owner(1e3, 10.0, 0.3, {1}), owner(1e3, 5.0, 0.9, {2})};
  auto const                 out = fa::rma::run_rma(o, c, 1);
  EXPECT_TRUE(out.winners.empty());
  EXPECT_EQ(out.payments, (std::vector<double>{0.0, 0.0}));
}

TEST(Rma, DeterministicGivenSeed)
{
  fa::MarketConfig const c;
  auto const             markets = fa::testing::random_markets(5, 40, 99);
  for (auto const &m : markets)
  {
    auto const a = fa::rma::run_rma(m, c, 5);
    auto const b = fa::rma::run_rma(m, c, 5);
    EXPECT_EQ(a.winners, b.winners);
    EXPECT_EQ(a.payments, b.payments);
  }
  EXPECT_EQ(fa::rma::group_order(10, 4), fa::rma::group_order(10, 4));
  auto order = fa::rma::group_order(10, 4);
  std::sort(order.begin(), order.end());
  EXPECT_EQ(order, (std::vector<int>{1, 2, 3, 4, 5, 6, 7, 8, 9, 10}));
}

class RmaRandom : public ::testing::Test
{
protected:
  fa::MarketConfig                      cfg;
  std::vector<std::vector<fa::DataOwner>> markets = fa::testing::random_markets(12, 20, 2024);
};

TEST_F(RmaRandom, FeasibleIrAndLosersUnpaid)
{
  for (std::size_t t = 0; t < markets.size(); ++t)
  {
    auto const &m   = markets[t];
    auto const  out = fa::rma::run_rma(m, cfg, t);
    EXPECT_TRUE(fa::ConflictGraph::build(m).is_feasible(out.winners));
    for (fa::OwnerId i = 0; i < m.size(); ++i)
    {
      bool const won = std::binary_search(out.winners.begin(), out.winners.end(), i);
      if (won)
      {
        EXPECT_GE(out.payments[i], m[i].bid - 1e-12);
      }
      else
      {
        EXPECT_EQ(out.payments[i], 0.0);
      }
    }
  }
}

TEST_F(RmaRandom, MonotoneInBidAndData)
{
  for (std::size_t t = 0; t < markets.size(); ++t)
  {
    auto const &m   = markets[t];
    auto const  out = fa::rma::run_rma(m, cfg, t, false);
    for (fa::OwnerId i : out.winners)
    {
      for (double f : {0.5, 0.9})
      {
        auto copy   = m;
        copy[i].bid = m[i].bid * f;
        auto const r = fa::rma::run_rma(copy, cfg, t, false);
        EXPECT_TRUE(std::binary_search(r.winners.begin(), r.winners.end(), i));
      }
      for (double extra : {0.5, 2.0})
      {
        auto copy         = m;
        copy[i].data_size = std::min(cfg.d_max, m[i].data_size + extra);
        auto const r      = fa::rma::run_rma(copy, cfg, t, false);
        EXPECT_TRUE(std::binary_search(r.winners.begin(), r.winners.end(), i));
      }
    }
  }
}

TEST_F(RmaRandom, PaymentIsCriticalAndMatchesBisection)
{
  for (std::size_t t = 0; t < 6; ++t)
  {
    auto const &m   = markets[t];
    auto const  out = fa::rma::run_rma(m, cfg, t);
    fa::oracle::Mechanism mech = [&](std::span<const fa::DataOwner> o) {
      return fa::rma::run_rma(o, cfg, t, false);
    };
    for (fa::OwnerId i : out.winners)
    {
      double const p = out.payments[i];
      auto above     = m;
      above[i].bid   = p + 1e-9 * (1.0 + std::abs(p)) + 1e-9;
      auto const ra  = fa::rma::run_rma(above, cfg, t, false);
      EXPECT_FALSE(std::binary_search(ra.winners.begin(), ra.winners.end(), i));
      auto below    = m;
      below[i].bid  = p - 1e-7 * (1.0 + std::abs(p));
      auto const rb = fa::rma::run_rma(below, cfg, t, false);
      EXPECT_TRUE(std::binary_search(rb.winners.begin(), rb.winners.end(), i));

      auto const bis = fa::oracle::critical_bid_bisection(mech, m, i, cfg);
      ASSERT_TRUE(bis.has_value());
      EXPECT_NEAR(*bis, p, 1e-6 * (1.0 + std::abs(p)));
    }
  }
}

TEST(RmaScaling, RuntimeGrowsAtMostCubically)
{
  fa::MarketConfig const c;
  std::vector<double>    ns, ts;
  for (std::size_t n : {25u, 50u, 100u, 200u})
  {
    auto const markets = fa::testing::random_markets(3, n, 77);
    auto const start   = std::chrono::steady_clock::now();
    int        reps    = 0;
    do
    {
      for (auto const &m : markets)
      {
        auto const out = fa::rma::run_rma(m, c, 1);
        (void)out;
      }
      ++reps;
    } while (std::chrono::steady_clock::now() - start < std::chrono::milliseconds(150));
    double const dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count() / reps;
    ns.push_back(std::log(static_cast<double>(n)));
    ts.push_back(std::log(dt));
  }
  double const mx = std::accumulate(ns.begin(), ns.end(), 0.0) / 4;
  double const my = std::accumulate(ts.begin(), ts.end(), 0.0) / 4;
  double       sxy = 0, sxx = 0;
  for (int k = 0; k < 4; ++k)
  {
    sxy += (ns[k] - mx) * (ts[k] - my);
    sxx += (ns[k] - mx) * (ns[k] - mx);
  }
  EXPECT_LE(sxy / sxx, 3.3);
}

}  // namespace

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
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "test_support.hpp"

namespace fa = fedauction;
namespace ex = fedauction::experiments;
namespace io = fedauction::io;
using fa::testing::owner;

namespace {

TEST(Scenario, SameSeedSameInstances)
{
  fa::MarketConfig const   cfg;
  ex::ScenarioConfig const scn;
  auto const               a = ex::generate_instances(scn, cfg, 5, 42);
  auto const               b = ex::generate_instances(scn, cfg, 5, 42);
  auto const               c = ex::generate_instances(scn, cfg, 5, 43);
  ASSERT_EQ(a.markets.size(), 5u);
  EXPECT_EQ(a.seeds, b.seeds);
  EXPECT_NE(a.seeds, c.seeds);
  for (std::size_t k = 0; k < 5; ++k)
  {
    ASSERT_EQ(a.markets[k].size(), 50u);
    for (std::size_t i = 0; i < 50; ++i)
    {
      EXPECT_EQ(a.markets[k][i].bid, b.markets[k][i].bid);
      EXPECT_EQ(a.markets[k][i].channels, b.markets[k][i].channels);
    }
    // instance k regenerates on its own
    auto const alone = ex::generate_instance(scn, cfg, ex::instance_seed(42, k));
    EXPECT_EQ(alone[7].data_size, a.markets[k][7].data_size);
  }
}

TEST(Scenario, DrawsStayInRangeAndBidsAreTrueCosts)
{
  fa::MarketConfig const   cfg;
  ex::ScenarioConfig const scn;
  auto const               set = ex::generate_instances(scn, cfg, 40, 7);
  for (auto const &m : set.markets)
  {
    for (auto const &o : m)
    {
      EXPECT_GE(o.channel_gain, 1e6);
      EXPECT_LE(o.channel_gain, 1e7);
      EXPECT_GE(o.data_size, 0.0);
      EXPECT_LE(o.data_size, cfg.d_max);
      EXPECT_GE(o.emd, 0.0);
      EXPECT_LE(o.emd, cfg.sigma_max);
      EXPECT_GE(o.channels.size(), 2u);
      EXPECT_LE(o.channels.size(), 6u);
      EXPECT_TRUE(std::is_sorted(o.channels.begin(), o.channels.end()));
      EXPECT_EQ(std::adjacent_find(o.channels.begin(), o.channels.end()), o.channels.end());
      EXPECT_GE(o.channels.front(), 1);
      EXPECT_LE(o.channels.back(), 100);
      EXPECT_DOUBLE_EQ(o.bid, fa::market::owner_total_cost(o, cfg));
    }
  }
}

TEST(Scenario, MeanChannelCountIsFour)
{
  fa::MarketConfig const cfg;
  ex::ScenarioConfig     scn;
  scn.owners     = 10000;
  auto const m   = ex::generate_instance(scn, cfg, 99);
  double     sum = 0.0;
  for (auto const &o : m)
  {
    sum += static_cast<double>(o.channels.size());
  }
  EXPECT_NEAR(sum / 10000.0, 4.0, 0.1);
}

TEST(Scenario, ValidationRejectsBadRanges)
{
  fa::MarketConfig const cfg;
  ex::ScenarioConfig     scn;
  scn.gain_min = 2e7;
  EXPECT_THROW(scn.validate(cfg), fa::InvalidInput);
  scn              = {};
  scn.channels_max = 101;
  EXPECT_THROW(scn.validate(cfg), fa::InvalidInput);
  scn              = {};
  scn.channels_min = 0;
  EXPECT_THROW(scn.validate(cfg), fa::InvalidInput);
}

TEST(Benchmark, SmallExamples)
{
  auto const                 c = fa::testing::free_platform();
  std::vector<fa::DataOwner> one{owner(0.5, 9.0, 0.1, {1})};
  one[0].unit_data_cost = 0.5 / 9.0;
  EXPECT_EQ(ex::benchmark_bid_greedy(one, c).winners, (fa::OwnerSet{0}));

  std::vector<fa::DataOwner> pair{owner(0.9, 9.0, 0.1, {1, 2}), owner(0.4, 9.0, 0.1, {2, 3})};
  auto const                 out = ex::benchmark_bid_greedy(pair, c);
  EXPECT_EQ(out.winners, (fa::OwnerSet{1}));
  // the lower bidder keeps winning up to the rival's bid
  EXPECT_NEAR(out.payments[1], 0.9, 1e-6);
  EXPECT_EQ(out.payments[0], 0.0);

  std::vector<fa::DataOwner> hopeless{owner(1e3, 9.0, 0.1, {1})};
  EXPECT_TRUE(ex::benchmark_bid_greedy(hopeless, c).winners.empty());
}

TEST(Benchmark, NeverBeatsOracleAndStaysFeasible)
{
  fa::MarketConfig const cfg;
  auto const             markets = fa::testing::random_markets(30, 12, 6);
  for (auto const &m : markets)
  {
    auto const out = ex::benchmark_bid_greedy(m, cfg);
    EXPECT_LE(out.social_welfare, fa::oracle::optimal_welfare(m, cfg).best_welfare + 1e-9);
    EXPECT_TRUE(fa::ConflictGraph::build(m).is_feasible(out.winners));
    for (fa::OwnerId i : out.winners)
    {
      EXPECT_GE(out.payments[i], m[i].bid);
    }
  }
}

TEST(Sweep, RowsCarrySeedAndAreReproducible)
{
  fa::MarketConfig const   cfg;
  ex::ScenarioConfig const scn;
  std::vector<ex::NamedMechanism> mechs{
    {"rma", [](std::span<const fa::DataOwner> o, fa::MarketConfig const &c, std::uint64_t s) {
       return fa::rma::run_rma(o, c, s, false);
     }}};
  std::vector<double> values{10, 20};
  auto const          a = ex::sweep(ex::SweepKind::owners, values, mechs, scn, cfg, 8, 5);
  auto const          b = ex::sweep(ex::SweepKind::owners, values, mechs, scn, cfg, 8, 5);
  ASSERT_EQ(a.size(), 2u);
  EXPECT_EQ(a[0].seed, 5u);
  EXPECT_EQ(a[1].instances, 8u);
  EXPECT_EQ(a[1].mean_welfare, b[1].mean_welfare);
  std::ostringstream os;
  ex::write_sweep_csv(os, a);
  std::string const text = os.str();
  EXPECT_EQ(text.substr(0, text.find('\n')), "value,mechanism,mean_S,std_S,mean_W,std_W,n_instances,seed");

  EXPECT_EQ(ex::parse_sweep_kind("G"), ex::SweepKind::groups);
  EXPECT_STREQ(ex::to_string(ex::SweepKind::sigma_max), "sigma_max");
  EXPECT_THROW((void)ex::parse_sweep_kind("x"), fa::InvalidInput);
  ex::ScenarioConfig s;
  fa::MarketConfig   c;
  EXPECT_THROW(ex::apply_sweep_value(ex::SweepKind::owners, 2.5, s, c), fa::InvalidInput);
  ex::apply_sweep_value(ex::SweepKind::sigma_max, 0.6, s, c);
  EXPECT_EQ(c.sigma_max, 0.6);
}

TEST(Sweep, MeanStd)
{
  std::vector<double> xs{1, 2, 3, 4};
  auto const [m, s] = ex::mean_std(xs);
  EXPECT_DOUBLE_EQ(m, 2.5);
  EXPECT_NEAR(s, std::sqrt(5.0 / 3.0), 1e-15);
}

TEST(InstanceFiles, RoundTripIsExact)
{
  auto const         set = ex::generate_instances({}, fa::MarketConfig{}, 3, 11);
  std::ostringstream os;
  io::write_instances(os, set);
  std::istringstream is(os.str());
  auto const         back = io::read_instances(is);
  EXPECT_EQ(back.seeds, set.seeds);
  ASSERT_EQ(back.markets.size(), 3u);
  for (std::size_t k = 0; k < 3; ++k)
  {
    for (std::size_t i = 0; i < set.markets[k].size(); ++i)
    {
      auto const &a = set.markets[k][i];
      auto const &b = back.markets[k][i];
      EXPECT_EQ(a.bid, b.bid);
      EXPECT_EQ(a.data_size, b.data_size);
      EXPECT_EQ(a.emd, b.emd);
      EXPECT_EQ(a.channel_gain, b.channel_gain);
      EXPECT_EQ(a.unit_energy_cost, b.unit_energy_cost);
      EXPECT_EQ(a.channels, b.channels);
    }
  }
}

TEST(InstanceFiles, MalformedInputIsRejected)
{
  auto const parse = [](std::string const &text) {
    std::istringstream is(text);
    return io::read_instances(is);
  };
  EXPECT_THROW(parse(""), fa::InvalidInput);
  EXPECT_THROW(parse("other 1\n"), fa::InvalidInput);
  EXPECT_THROW(parse("fedauction-instances 2\n"), fa::InvalidInput);
  EXPECT_THROW(parse("fedauction-instances 1\ninstance 0 2 5\n0 1 1 0.1 1e6 0 0 0 1,2\n"), fa::InvalidInput);
  EXPECT_THROW(parse("fedauction-instances 1\ninstance 0 1 5\n0 1 1 0.1 1e6 0 0 1,2\n"), fa::InvalidInput);
  EXPECT_THROW(parse("fedauction-instances 1\ninstance 0 1 5\n0 x 1 0.1 1e6 0 0 0 1,2\n"), fa::InvalidInput);
  EXPECT_THROW(parse("fedauction-instances 1\ninstance 0 1 5\n0 1 1 0.1 -1 0 0 0 1,2\n"), fa::InvalidInput);
  EXPECT_THROW(parse("fedauction-instances 1\n0 1 1 0.1 1e6 0 0 0 1,2\n"), fa::InvalidInput);
  auto const ok = parse("# comment\nfedauction-instances 1\n\ninstance 0 1 5\n0 1 1 0.1 1e6 0 0 0 1,2\n");
  EXPECT_EQ(ok.markets.front().front().channels, (std::vector<int>{1, 2}));
  EXPECT_THROW((void)io::load_instances("/nonexistent/instances.txt"), fa::InvalidInput);
}

TEST(ConfigFiles, ParseApplyAndReject)
{
  std::istringstream is("# market\nsigma_max = 0.8\ngroups=5  # fewer groups\nepisodes = 50\nembed_dim = 16\n"
                        "fed_sizes = 20, 50,100\nchannels_min = 3\n");
  auto const         kv = io::KeyValues::parse(is);
  EXPECT_TRUE(kv.unknown(io::known_keys()).empty());

  fa::MarketConfig c;
  io::apply(kv, c);
  EXPECT_EQ(c.sigma_max, 0.8);
  EXPECT_EQ(c.groups, 5);
  fa::training::TrainConfig t;
  io::apply(kv, t);
  EXPECT_EQ(t.episodes, 50);
  fa::drla::DrlaHyper h;
  io::apply(kv, h);
  EXPECT_EQ(h.embed_dim, 16);
  fa::fedsim::GridConfig g;
  io::apply(kv, g);
  EXPECT_EQ(g.total_sizes, (std::vector<int>{20, 50, 100}));
  ex::ScenarioConfig s;
  io::apply(kv, s);
  EXPECT_EQ(s.channels_min, 3);

  std::istringstream typo("sigma_mx = 1\n");
  EXPECT_EQ(io::KeyValues::parse(typo).unknown(io::known_keys()), (std::vector<std::string>{"sigma_mx"}));
  std::istringstream no_eq("groups 5\n");
  EXPECT_THROW((void)io::KeyValues::parse(no_eq), fa::InvalidInput);
  std::istringstream bad_num("groups = five\n");
  auto const         kv2 = io::KeyValues::parse(bad_num);
  fa::MarketConfig   c2;
  EXPECT_THROW(io::apply(kv2, c2), fa::InvalidInput);
  std::istringstream invalid("groups = 0\n");
  fa::MarketConfig   c3;
  EXPECT_THROW(io::apply(io::KeyValues::parse(invalid), c3), fa::InvalidInput);
  EXPECT_EQ(io::parse_double_list("0.4, 0.6"), (std::vector<double>{0.4, 0.6}));
}

TEST(TrainingSpread, DrawsInsideTheIntervalsAndLeavesTheRest)
{
  fa::MarketConfig const base;
  std::mt19937_64        rng(8);
  double                 lo_d = 1e9, hi_d = 0.0;
  for (int k = 0; k < 500; ++k)
  {
    auto const c = ex::draw_market_config(base, {2.0, 10.0}, {0.4, 1.2}, rng);
    lo_d         = std::min(lo_d, c.d_max);
    hi_d         = std::max(hi_d, c.d_max);
    EXPECT_GE(c.sigma_max, 0.4);
    EXPECT_LE(c.sigma_max, 1.2);
    EXPECT_EQ(c.groups, base.groups);
  }
  EXPECT_GE(lo_d, 2.0);
  EXPECT_LE(hi_d, 10.0);
  EXPECT_LT(lo_d, 2.5);
  EXPECT_GT(hi_d, 9.5);

  auto const same = ex::draw_market_config(base, {}, {}, rng);
  EXPECT_EQ(same.d_max, base.d_max);
  EXPECT_EQ(same.sigma_max, base.sigma_max);
  EXPECT_THROW((void)ex::draw_market_config(base, {0.0, 5.0}, {}, rng), fa::InvalidInput);
  EXPECT_THROW((void)ex::draw_market_config(base, {6.0, 5.0}, {}, rng), fa::InvalidInput);
}

}  // namespace

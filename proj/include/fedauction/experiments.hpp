#pragma once
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

// Random markets, the bid-only greedy benchmark and parameter sweeps.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <optional>
#include <ostream>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "fedauction/conflict_graph.hpp"
#include "fedauction/errors.hpp"
#include "fedauction/exact_oracle.hpp"
#include "fedauction/market_model.hpp"

namespace fedauction::experiments {

using Market = std::vector<DataOwner>;

/// Owner population distribution. Data size and EMD ranges come from the
/// market config (d_max, sigma_max) and the channel pool size from its
/// channel_count.
struct ScenarioConfig
{
  std::size_t owners       = 50;
  double      gain_min     = 1e6;
  double      gain_max     = 1e7;
  double      data_cost_min = 1e-5;  // γ
  double      data_cost_max = 1e-4;
  double      compute_cost_min = 1e-5;  // α
  double      compute_cost_max = 1e-4;
  double      energy_cost_min  = 1e-2;  // β
  double      energy_cost_max  = 1e-1;
  int         channels_min     = 2;
  int         channels_max     = 6;

  void validate(MarketConfig const &cfg) const
  {
    auto bad_range = [](double lo, double hi) { return !(lo >= 0.0) || !(hi >= lo); };
    if (bad_range(gain_min, gain_max) || !(gain_min > 0.0) || bad_range(data_cost_min, data_cost_max) ||
        bad_range(compute_cost_min, compute_cost_max) || bad_range(energy_cost_min, energy_cost_max))
    {
      throw InvalidInput("scenario: every range needs 0 <= min <= max and positive gains");
    }
    if (channels_min < 1 || channels_max < channels_min ||
        static_cast<std::size_t>(channels_max) > cfg.channel_count)
    {
      throw InvalidInput("scenario: channel counts must satisfy 1 <= min <= max <= channel pool");
    }
  }
};

/// Seed of the k-th instance of a set; instance k can be regenerated alone.
inline std::uint64_t instance_seed(std::uint64_t set_seed, std::size_t k)
{
  std::seed_seq                ss{static_cast<std::uint32_t>(set_seed), static_cast<std::uint32_t>(set_seed >> 32),
                   static_cast<std::uint32_t>(k), static_cast<std::uint32_t>(k >> 32)};
  std::array<std::uint32_t, 2> out{};
  ss.generate(out.begin(), out.end());
  return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

/// One market; every owner bids its true total cost.
inline Market generate_instance(ScenarioConfig const &scn, MarketConfig const &cfg, std::uint64_t seed)
{
  scn.validate(cfg);
  std::mt19937_64 rng(seed);
  auto            uni = [&](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };
  std::uniform_int_distribution<int> count(scn.channels_min, scn.channels_max);
  std::vector<int>                   pool(cfg.channel_count);
  std::iota(pool.begin(), pool.end(), 1);

  Market m(scn.owners);
  for (auto &o : m)
  {
    o.channel_gain      = uni(scn.gain_min, scn.gain_max);
    o.data_size         = uni(0.0, cfg.d_max);
    o.emd               = uni(0.0, cfg.sigma_max);
    o.unit_data_cost    = uni(scn.data_cost_min, scn.data_cost_max);
    o.unit_compute_cost = uni(scn.compute_cost_min, scn.compute_cost_max);
    o.unit_energy_cost  = uni(scn.energy_cost_min, scn.energy_cost_max);
    int const c         = count(rng);
    // partial Fisher-Yates: the first c entries become a uniform c-subset
    for (int k = 0; k < c; ++k)
    {
      std::uniform_int_distribution<std::size_t> j(static_cast<std::size_t>(k), pool.size() - 1);
      std::swap(pool[static_cast<std::size_t>(k)], pool[j(rng)]);
    }
    o.channels.assign(pool.begin(), pool.begin() + c);
    std::sort(o.channels.begin(), o.channels.end());
    o.bid = market::owner_total_cost(o, cfg);
  }
  return m;
}

/// Closed interval; an empty one (hi <= 0) leaves the config value alone.
struct Interval
{
  double lo = 0.0;
  double hi = 0.0;
};

/// Draws d_max and sigma_max per market so a model trained on the result
/// has seen the whole range it is later evaluated on.
inline MarketConfig draw_market_config(MarketConfig cfg, Interval d_max, Interval sigma_max, std::mt19937_64 &rng)
{
  auto draw = [&rng](Interval r, double &v) {
    if (r.hi > 0.0)
    {
      if (!(r.lo > 0.0) || r.lo > r.hi)
      {
        throw InvalidInput("training range needs 0 < lo <= hi");
      }
      v = std::uniform_real_distribution<double>(r.lo, r.hi)(rng);
    }
  };
  draw(d_max, cfg.d_max);
  draw(sigma_max, cfg.sigma_max);
  return cfg;
}

struct InstanceSet
{
  std::uint64_t              seed = 0;
  std::vector<std::uint64_t> seeds;  // per instance
  std::vector<Market>        markets;
};

inline InstanceSet generate_instances(ScenarioConfig const &scn, MarketConfig const &cfg, std::size_t count,
                                      std::uint64_t seed)
{
  InstanceSet set;
  set.seed = seed;
  for (std::size_t k = 0; k < count; ++k)
  {
    set.seeds.push_back(instance_seed(seed, k));
    set.markets.push_back(generate_instance(scn, cfg, set.seeds.back()));
  }
  return set;
}

// --------------------------------------------------------------------------
// Benchmark

/// Ascending-bid greedy allocation that skips conflicting owners and stops at
/// the first owner whose admission would lower declared welfare. Ties in bid
/// go to the smaller id.
inline OwnerSet bid_greedy_allocation(std::span<const DataOwner> owners, MarketConfig const &cfg,
                                      ConflictGraph const &graph)
{
  std::vector<OwnerId> order(owners.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](OwnerId a, OwnerId b) { return owners[a].bid < owners[b].bid; });

  // running totals give the declared welfare of the selection in O(1)
  double data = 0.0, emd_sum = 0.0, per_owner = 0.0;
  std::size_t count = 0;
  auto welfare = [&](double d, double e, double c, std::size_t n) {
    if (n == 0)
    {
      return 0.0;
    }
    double const u = cfg.kappa7 * market::data_quality(d, e / static_cast<double>(n), cfg);
    return u - market::platform_compute_increment(cfg) * static_cast<double>(n - 1) - c;
  };

  OwnerSet          picked;
  std::vector<char> blocked(owners.size(), 0);
  double            current = 0.0;
  for (OwnerId k : order)
  {
    if (blocked[k])
    {
      continue;
    }
    DataOwner const &o    = owners[k];
    double const     c    = per_owner + market::platform_transmit_cost(o, cfg) + o.bid;
    double const     next = welfare(data + o.data_size, emd_sum + o.emd, c, count + 1);
    if (next < current)
    {
      break;
    }
    picked.push_back(k);
    current = next;
    data += o.data_size;
    emd_sum += o.emd;
    per_owner = c;
    ++count;
    blocked[k] = 1;
    for (OwnerId j : graph.neighbours(k))
    {
      blocked[j] = 1;
    }
  }
  std::sort(picked.begin(), picked.end());
  return picked;
}

struct BenchmarkOptions
{
  bool                     with_payments = true;
  oracle::BisectionOptions bisection;
};

/// Bid greedy with bisection critical-bid payments.
inline AuctionOutcome benchmark_bid_greedy(std::span<const DataOwner> owners, MarketConfig const &cfg,
                                           ConflictGraph const &graph, BenchmarkOptions const &opt = {})
{
  AuctionOutcome out;
  out.payments.assign(owners.size(), 0.0);
  out.winners        = bid_greedy_allocation(owners, cfg, graph);
  out.social_welfare = market::social_welfare(out.winners, owners, cfg);
  if (!opt.with_payments)
  {
    return out;
  }
  std::vector<DataOwner> probe(owners.begin(), owners.end());
  for (OwnerId i : out.winners)
  {
    oracle::WinPredicate wins = [&probe, &cfg, &graph, i](double bid) {
      double const saved = probe[i].bid;
      probe[i].bid       = bid;
      auto const   set   = bid_greedy_allocation(probe, cfg, graph);
      probe[i].bid       = saved;
      return std::binary_search(set.begin(), set.end(), i);
    };
    auto const p = oracle::critical_bid_bisection(wins, owners[i].bid, oracle::standalone_bound(owners[i], cfg),
                                                  opt.bisection);
    out.payments[i] = p.value_or(owners[i].bid);
  }
  return out;
}

inline AuctionOutcome benchmark_bid_greedy(std::span<const DataOwner> owners, MarketConfig const &cfg,
                                           BenchmarkOptions const &opt = {})
{
  ConflictGraph const graph = ConflictGraph::build(owners);
  return benchmark_bid_greedy(owners, cfg, graph, opt);
}

// --------------------------------------------------------------------------
// Sweeps

enum class SweepKind
{
  owners,
  d_max,
  sigma_max,
  groups
};

inline SweepKind parse_sweep_kind(std::string const &s)
{
  if (s == "N" || s == "n" || s == "owners")
  {
    return SweepKind::owners;
  }
  if (s == "d_max")
  {
    return SweepKind::d_max;
  }
  if (s == "sigma_max")
  {
    return SweepKind::sigma_max;
  }
  if (s == "G" || s == "groups")
  {
    return SweepKind::groups;
  }
  throw InvalidInput("unknown sweep kind '" + s + "' (expected N, d_max, sigma_max or G)");
}

inline char const *to_string(SweepKind k)
{
  switch (k)
  {
  case SweepKind::owners:
    return "N";
  case SweepKind::d_max:
    return "d_max";
  case SweepKind::sigma_max:
    return "sigma_max";
  case SweepKind::groups:
    return "G";
  }
  return "?";
}

/// Allocation-only mechanism evaluated under a per-point market config.
/// The instance seed is passed for mechanisms that randomise.
struct NamedMechanism
{
  std::string name;
  std::function<AuctionOutcome(std::span<const DataOwner>, MarketConfig const &, std::uint64_t)> run;
};

struct SweepRow
{
  double        value = 0.0;
  std::string   mechanism;
  double        mean_welfare  = 0.0;
  double        std_welfare   = 0.0;
  double        mean_workers  = 0.0;
  double        std_workers   = 0.0;
  std::size_t   instances     = 0;
  std::uint64_t seed          = 0;
};

inline void apply_sweep_value(SweepKind kind, double value, ScenarioConfig &scn, MarketConfig &cfg)
{
  switch (kind)
  {
  case SweepKind::owners:
    if (!(value >= 1.0) || value != std::floor(value))
    {
      throw InvalidInput("sweep: owner counts must be positive integers");
    }
    scn.owners = static_cast<std::size_t>(value);
    break;
  case SweepKind::d_max:
    cfg.d_max = value;
    break;
  case SweepKind::sigma_max:
    cfg.sigma_max = value;
    break;
  case SweepKind::groups:
    if (!(value >= 1.0) || value != std::floor(value))
    {
      throw InvalidInput("sweep: group counts must be positive integers");
    }
    cfg.groups = static_cast<int>(value);
    break;
  }
  cfg.validate();
}

/// Mean and sample standard deviation.
inline std::pair<double, double> mean_std(std::span<const double> xs)
{
  if (xs.empty())
  {
    return {0.0, 0.0};
  }
  double const m = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
  double       v = 0.0;
  for (double x : xs)
  {
    v += (x - m) * (x - m);
  }
  return {m, xs.size() > 1 ? std::sqrt(v / static_cast<double>(xs.size() - 1)) : 0.0};
}

/// For each value: a fresh instance set from the same seed, every mechanism
/// run on it, mean/std of welfare and worker count.
inline std::vector<SweepRow> sweep(SweepKind kind, std::span<const double> values,
                                   std::span<const NamedMechanism> mechanisms, ScenarioConfig const &scn,
                                   MarketConfig const &cfg, std::size_t count, std::uint64_t seed)
{
  std::vector<SweepRow> rows;
  for (double v : values)
  {
    ScenarioConfig s = scn;
    MarketConfig   c = cfg;
    apply_sweep_value(kind, v, s, c);
    InstanceSet const set = generate_instances(s, c, count, seed);
    for (auto const &mech : mechanisms)
    {
      std::vector<double> welfare, workers;
      for (std::size_t k = 0; k < set.markets.size(); ++k)
      {
        auto const out = mech.run(set.markets[k], c, set.seeds[k]);
        welfare.push_back(out.social_welfare);
        workers.push_back(static_cast<double>(out.winners.size()));
      }
      auto const [ms, ss] = mean_std(welfare);
      auto const [mw, sw] = mean_std(workers);
      rows.push_back({v, mech.name, ms, ss, mw, sw, count, seed});
    }
  }
  return rows;
}

inline void write_sweep_csv(std::ostream &os, std::span<const SweepRow> rows)
{
  os << "value,mechanism,mean_S,std_S,mean_W,std_W,n_instances,seed\n";
  os.precision(10);
  for (auto const &r : rows)
  {
    os << r.value << ',' << r.mechanism << ',' << r.mean_welfare << ',' << r.std_welfare << ',' << r.mean_workers
       << ',' << r.std_workers << ',' << r.instances << ',' << r.seed << '\n';
  }
}

}  // namespace fedauction::experiments

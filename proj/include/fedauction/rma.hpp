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

// Reverse multi-dimensional auction: owners are bucketed by EMD, buckets are
// visited in a seeded random order, each bucket greedily admits owners by
// marginal virtual welfare density, and winners are paid their critical bid.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <span>
#include <vector>

#include "fedauction/conflict_graph.hpp"
#include "fedauction/market_model.hpp"

namespace fedauction::rma {

struct GroupPartition
{
  std::vector<int>      group_of;  // 1-based group index per owner
  std::vector<OwnerSet> members;   // members[j - 1]
  double                width = 0.0;

  int groups() const noexcept
  {
    return static_cast<int>(members.size());
  }

  double virtual_emd(int j) const noexcept
  {
    return (2.0 * j - 1.0) * width / 2.0;
  }
};

/// Owner with EMD in [(j-1)ε, jε) lands in group j; EMD at or above σ_max is
/// clamped into the last group.
inline int group_index(double emd, MarketConfig const &cfg)
{
  double const width = cfg.sigma_max / cfg.groups;
  auto         j     = static_cast<long long>(std::floor(emd / width)) + 1;
  return static_cast<int>(std::clamp<long long>(j, 1, cfg.groups));
}

inline GroupPartition partition_by_emd(std::span<const DataOwner> owners, MarketConfig const &cfg)
{
  GroupPartition p;
  p.width = cfg.sigma_max / cfg.groups;
  p.members.assign(static_cast<std::size_t>(cfg.groups), {});
  p.group_of.reserve(owners.size());
  for (OwnerId i = 0; i < owners.size(); ++i)
  {
    int const j = group_index(owners[i].emd, cfg);
    p.group_of.push_back(j);
    p.members[static_cast<std::size_t>(j - 1)].push_back(i);
  }
  return p;
}

/// Evaluates the marginal virtual welfare density V_i^j(S). A set S enters
/// only through its total data and whether it is empty.
class DensityModel
{
public:
  DensityModel(std::span<const DataOwner> owners, MarketConfig const &cfg, ConflictGraph const &graph)
    : owners_(owners)
    , cfg_(cfg)
    , graph_(graph)
  {}

  /// Platform cost of adding i: transmit term always, averaging term unless
  /// i would be the first worker of the whole outcome.
  double platform_increment(OwnerId i, bool set_empty) const
  {
    double c = market::platform_transmit_cost(owners_[i], cfg_);
    if (!set_empty)
    {
      c += market::platform_compute_increment(cfg_);
    }
    return c;
  }

  /// Conflict degree plus one.
  double denominator(OwnerId i) const
  {
    return static_cast<double>(graph_.degree(i) + 1);
  }

  /// Bid-free numerator part: o(D) − o(D + d_i) − ĉ_i.
  double surplus(OwnerId i, double set_data, bool set_empty, double virtual_emd) const
  {
    double const a = market::quality_alpha(virtual_emd, cfg_);
    return market::utility_shortfall(set_data, a, cfg_) -
           market::utility_shortfall(set_data + owners_[i].data_size, a, cfg_) -
           platform_increment(i, set_empty);
  }

  double density(OwnerId i, double set_data, bool set_empty, double virtual_emd, double bid) const
  {
    return (surplus(i, set_data, set_empty, virtual_emd) - bid) / denominator(i);
  }

  double density(OwnerId i, double set_data, bool set_empty, double virtual_emd) const
  {
    return density(i, set_data, set_empty, virtual_emd, owners_[i].bid);
  }

  /// The bid at which V_i equals `target`. V_i is affine in the bid.
  double bid_for_density(OwnerId i, double set_data, bool set_empty, double virtual_emd,
                         double target) const
  {
    return surplus(i, set_data, set_empty, virtual_emd) - target * denominator(i);
  }

  std::span<const DataOwner> owners() const noexcept
  {
    return owners_;
  }

  ConflictGraph const &graph() const noexcept
  {
    return graph_;
  }

private:
  std::span<const DataOwner> owners_;
  MarketConfig const        &cfg_;
  ConflictGraph const       &graph_;
};

/// V_i^j(S) for an explicit set S.
inline double marginal_density(OwnerId i, std::span<const OwnerId> set, double virtual_emd,
                               std::span<const DataOwner> owners, MarketConfig const &cfg,
                               ConflictGraph const &graph)
{
  DensityModel const model(owners, cfg, graph);
  return model.density(i, market::total_data(set, owners), set.empty(), virtual_emd);
}

/// Greedy admission inside one group. `pool` must already exclude owners
/// conflicting with earlier winners; `base_data`/`base_empty` describe those
/// earlier winners. Returns the admitted owners in admission order.
inline OwnerSet select_winners(DensityModel const &model, std::span<const OwnerId> pool,
                               double virtual_emd, double base_data, bool base_empty)
{
  ConflictGraph const &g = model.graph();
  std::vector<OwnerId> live(pool.begin(), pool.end());
  std::sort(live.begin(), live.end());

  OwnerSet picked;
  double   data  = base_data;
  bool     empty = base_empty;
  while (!live.empty())
  {
    OwnerId best   = live.front();
    double  best_v = -std::numeric_limits<double>::infinity();
    for (OwnerId k : live)
    {
      double const v = model.density(k, data, empty, virtual_emd);
      if (v > best_v)
      {
        best_v = v;
        best   = k;
      }
    }
    if (!(best_v > 0.0))
    {
      break;
    }
    picked.push_back(best);
    data += model.owners()[best].data_size;
    empty = false;
    std::erase_if(live, [&](OwnerId k) { return k == best || g.adjacent(k, best); });
  }
  return picked;
}

/// Critical bid of winner i: replays the group's selection without i and
/// takes the largest bid at which i would still have been admitted at some
/// step of the replay.
inline double critical_payment(DensityModel const &model, OwnerId i, std::span<const OwnerId> pool,
                               double virtual_emd, double base_data, bool base_empty)
{
  ConflictGraph const &g = model.graph();
  std::vector<OwnerId> live;
  for (OwnerId k : pool)
  {
    if (k != i)
    {
      live.push_back(k);
    }
  }
  std::sort(live.begin(), live.end());

  double data  = base_data;
  bool   empty = base_empty;
  double pay   = -std::numeric_limits<double>::infinity();
  while (!live.empty())
  {
    OwnerId best   = live.front();
    double  best_v = -std::numeric_limits<double>::infinity();
    for (OwnerId k : live)
    {
      double const v = model.density(k, data, empty, virtual_emd);
      if (v > best_v)
      {
        best_v = v;
        best   = k;
      }
    }
    if (!(best_v > 0.0))
    {
      // replay stops here: i only needs a positive density
      return std::max(pay, model.bid_for_density(i, data, empty, virtual_emd, 0.0));
    }
    pay = std::max(pay, model.bid_for_density(i, data, empty, virtual_emd, best_v));
    if (g.adjacent(i, best))
    {
      return pay;
    }
    data += model.owners()[best].data_size;
    empty = false;
    std::erase_if(live, [&](OwnerId k) { return k == best || g.adjacent(k, best); });
  }
  return std::max(pay, model.bid_for_density(i, data, empty, virtual_emd, 0.0));
}

/// Group visiting order drawn from the seed alone, so it does not move when
/// any owner changes its report.
inline std::vector<int> group_order(int groups, std::uint64_t seed)
{
  std::vector<int> order(static_cast<std::size_t>(groups));
  std::iota(order.begin(), order.end(), 1);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  return order;
}

inline AuctionOutcome run_rma(std::span<const DataOwner> owners, MarketConfig const &cfg,
                              ConflictGraph const &graph, std::uint64_t seed,
                              bool with_payments = true)
{
  AuctionOutcome out;
  out.payments.assign(owners.size(), 0.0);
  if (owners.empty())
  {
    return out;
  }

  GroupPartition const partition = partition_by_emd(owners, cfg);
  DensityModel const   model(owners, cfg, graph);

  std::vector<char> blocked(owners.size(), 0);  // in W_o or conflicting with it
  OwnerSet          accumulated;
  double            acc_data = 0.0;

  for (int j : group_order(cfg.groups, seed))
  {
    double const virtual_emd = partition.virtual_emd(j);
    OwnerSet     pool;
    for (OwnerId k : partition.members[static_cast<std::size_t>(j - 1)])
    {
      if (!blocked[k])
      {
        pool.push_back(k);
      }
    }
    OwnerSet const admitted =
      select_winners(model, pool, virtual_emd, acc_data, accumulated.empty());
    if (with_payments)
    {
      for (OwnerId i : admitted)
      {
        out.payments[i] =
          critical_payment(model, i, pool, virtual_emd, acc_data, accumulated.empty());
      }
    }
    for (OwnerId i : admitted)
    {
      accumulated.push_back(i);
      acc_data += owners[i].data_size;
      blocked[i] = 1;
      for (OwnerId k : graph.neighbours(i))
      {
        blocked[k] = 1;
      }
    }
  }

  std::sort(accumulated.begin(), accumulated.end());
  out.winners        = std::move(accumulated);
  out.social_welfare = market::social_welfare(out.winners, owners, cfg);
  return out;
}

inline AuctionOutcome run_rma(std::span<const DataOwner> owners, MarketConfig const &cfg,
                              std::uint64_t seed, bool with_payments = true)
{
  ConflictGraph const graph = ConflictGraph::build(owners);
  return run_rma(owners, cfg, graph, seed, with_payments);
}

}  // namespace fedauction::rma

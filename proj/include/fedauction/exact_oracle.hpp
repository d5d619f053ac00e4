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

// Ground truth for small markets: exhaustive welfare maximisation over
// channel-feasible worker sets, and a bisection search for critical bids that
// treats any mechanism as a black box.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fedauction/conflict_graph.hpp"
#include "fedauction/errors.hpp"
#include "fedauction/market_model.hpp"

namespace fedauction::oracle {

inline constexpr std::size_t kMaxOracleOwners = 20;

struct OracleResult
{
  OwnerSet    best_set;
  double      best_welfare    = 0.0;
  std::size_t evaluated_count = 0;
};

namespace detail {

// true if a is preferred over b at equal welfare: smaller, then lexicographic
inline bool tie_preferred(OwnerSet const &a, OwnerSet const &b)
{
  if (a.size() != b.size())
  {
    return a.size() < b.size();
  }
  return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
}

}  // namespace detail

/// Exhaustive search over feasible subsets by include/exclude branching with
/// a running conflict mask. Refuses markets above kMaxOracleOwners.
inline OracleResult optimal_welfare(std::span<const DataOwner> owners, MarketConfig const &cfg,
                                    ConflictGraph const &graph)
{
  std::size_t const n = owners.size();
  if (n > kMaxOracleOwners)
  {
    throw CapacityError("optimal_welfare: " + std::to_string(n) + " owners exceeds the limit of " +
                        std::to_string(kMaxOracleOwners));
  }

  OracleResult      result;  // ∅ with welfare 0 is always feasible
  OwnerSet          current;
  std::vector<int>  blocked(n, 0);

  std::function<void(std::size_t)> visit = [&](std::size_t next) {
    if (next == n)
    {
      ++result.evaluated_count;
      double const s = market::social_welfare(current, owners, cfg);
      if (s > result.best_welfare ||
          (s == result.best_welfare && detail::tie_preferred(current, result.best_set)))
      {
        result.best_welfare = s;
        result.best_set     = current;
      }
      return;
    }
    visit(next + 1);
    if (blocked[next] == 0)
    {
      current.push_back(next);
      for (OwnerId k : graph.neighbours(next))
      {
        ++blocked[k];
      }
      visit(next + 1);
      for (OwnerId k : graph.neighbours(next))
      {
        --blocked[k];
      }
      current.pop_back();
    }
  };
  visit(0);
  return result;
}

inline OracleResult optimal_welfare(std::span<const DataOwner> owners, MarketConfig const &cfg)
{
  return optimal_welfare(owners, cfg, ConflictGraph::build(owners));
}

inline double approx_ratio(double mechanism_welfare, double oracle_welfare)
{
  if (!(oracle_welfare > 0.0))
  {
    throw InvalidInput("approx_ratio: oracle welfare must be positive");
  }
  return std::clamp(mechanism_welfare / oracle_welfare, 0.0, 1.0);
}

/// Whether owner i wins when it alone changes its bid to the argument.
using WinPredicate = std::function<bool(double bid)>;

struct BisectionOptions
{
  double tolerance   = 1e-10;
  int    probe_count = 16;  // grid probes used to detect non-monotone predicates
  int    max_doublings = 60;
};

/// Supremum of the bids at which `wins` holds, searched upward from
/// `lower` (normally the owner's own bid). The initial upper end is
/// `upper`; it is doubled while the owner still wins there. Returns nullopt
/// when the owner does not win even at `lower`.
inline std::optional<double> critical_bid_bisection(WinPredicate const &wins, double lower,
                                                    double upper, BisectionOptions const &opt = {})
{
  if (!wins(lower))
  {
    return std::nullopt;
  }
  double hi = std::max(upper, lower + 1.0);
  int    doublings = 0;
  while (wins(hi))
  {
    if (++doublings > opt.max_doublings)
    {
      throw OracleViolation("critical_bid_bisection: owner wins at every probed bid");
    }
    hi = lower + 2.0 * (hi - lower);
  }

  // a win above a loss on a coarse grid means the predicate is not monotone
  bool seen_loss = false;
  for (int k = 1; k < opt.probe_count; ++k)
  {
    double const b = lower + (hi - lower) * k / opt.probe_count;
    bool const   w = wins(b);
    if (w && seen_loss)
    {
      throw OracleViolation("critical_bid_bisection: win predicate is not monotone in the bid");
    }
    seen_loss = seen_loss || !w;
  }

  double lo = lower;
  while (hi - lo > opt.tolerance * (1.0 + std::abs(lo)))
  {
    double const mid = lo + (hi - lo) / 2.0;
    if (mid <= lo || mid >= hi)
    {
      break;
    }
    if (wins(mid))
    {
      lo = mid;
    }
    else
    {
      hi = mid;
    }
  }
  return lo + (hi - lo) / 2.0;
}

/// Mechanism under test: maps a reported market to an outcome.
using Mechanism = std::function<AuctionOutcome(std::span<const DataOwner>)>;

/// Win predicate for owner i obtained by re-running the mechanism with i's
/// bid replaced and everything else held fixed.
inline WinPredicate win_predicate(Mechanism mechanism, std::vector<DataOwner> owners, OwnerId i)
{
  return [mechanism = std::move(mechanism), owners = std::move(owners), i](double bid) mutable {
    owners[i].bid  = bid;
    auto const out = mechanism(owners);
    return std::binary_search(out.winners.begin(), out.winners.end(), i);
  };
}

/// Bisection upper bound: standalone data utility of the owner plus one.
inline double standalone_bound(DataOwner const &owner, MarketConfig const &cfg)
{
  return cfg.kappa7 * market::data_quality(owner.data_size, owner.emd, cfg) + 1.0;
}

inline std::optional<double> critical_bid_bisection(Mechanism const &mechanism,
                                                    std::span<const DataOwner> owners, OwnerId i,
                                                    MarketConfig const &cfg,
                                                    BisectionOptions const &opt = {})
{
  std::vector<DataOwner> copy(owners.begin(), owners.end());
  return critical_bid_bisection(win_predicate(mechanism, copy, i), owners[i].bid,
                                standalone_bound(owners[i], cfg), opt);
}

}  // namespace fedauction::oracle

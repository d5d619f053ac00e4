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

// Property harness: individual rationality, truthfulness in bids and in data
// quality, critical payments, feasibility and the welfare accounting
// identity, for any mechanism given as a callable.

#include <algorithm>
#include <cmath>
#include <cstdint>
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

namespace fedauction::properties {

using oracle::Mechanism;

inline constexpr double kUtilityTolerance = 1e-9;
inline constexpr double kPaymentTolerance = 1e-5;  // scaled by 1 + |p|

struct Failure
{
  std::uint64_t instance_seed = 0;
  OwnerId       owner         = 0;
  double        violation     = 0.0;
  std::string   detail;
};

struct PropertyReport
{
  std::string          check;
  std::size_t          instances       = 0;
  std::size_t          trials          = 0;
  std::size_t          failures        = 0;
  double               worst_violation = 0.0;
  std::vector<Failure> failed;  // first few failures, for replay

  static constexpr std::size_t kKeptFailures = 20;

  bool passed() const noexcept
  {
    return failures == 0;
  }

  void record(Failure f)
  {
    ++failures;
    worst_violation = std::max(worst_violation, f.violation);
    if (failed.size() < kKeptFailures)
    {
      failed.push_back(std::move(f));
    }
  }

  void merge(PropertyReport const &other)
  {
    if (check.empty())
    {
      check = other.check;
    }
    instances += other.instances;
    trials += other.trials;
    failures += other.failures;
    worst_violation = std::max(worst_violation, other.worst_violation);
    for (auto const &f : other.failed)
    {
      if (failed.size() < kKeptFailures)
      {
        failed.push_back(f);
      }
    }
  }
};

inline bool wins(AuctionOutcome const &out, OwnerId i)
{
  return std::binary_search(out.winners.begin(), out.winners.end(), i);
}

/// Utility of owner i with true cost `cost` in an outcome.
inline double utility_in(AuctionOutcome const &out, OwnerId i, double cost)
{
  return wins(out, i) ? out.payments[i] - cost : 0.0;
}

/// Winners are paid at least their bids and never lose money; losers are
/// paid nothing.
inline PropertyReport check_ir(Mechanism const &mechanism, std::span<const DataOwner> owners,
                               std::uint64_t instance_seed = 0)
{
  PropertyReport r;
  r.check     = "ir";
  r.instances = 1;
  auto const out = mechanism(owners);
  for (OwnerId i = 0; i < owners.size(); ++i)
  {
    ++r.trials;
    if (wins(out, i))
    {
      double const v = owners[i].bid - out.payments[i];
      if (v > kUtilityTolerance)
      {
        r.record({instance_seed, i, v, "payment below bid"});
      }
    }
    else if (out.payments[i] != 0.0)
    {
      r.record({instance_seed, i, std::abs(out.payments[i]), "loser paid"});
    }
  }
  return r;
}

/// Random bid misreports, above and below the truth, of randomly chosen
/// owners. The owners' reported bids are taken as their true costs.
inline PropertyReport check_ic_bid(Mechanism const &mechanism, std::span<const DataOwner> owners, int trials,
                                   std::mt19937_64 &rng, std::uint64_t instance_seed = 0)
{
  PropertyReport r;
  r.check     = "ic_bid";
  r.instances = 1;
  if (owners.empty())
  {
    return r;
  }
  auto const                                 truth = mechanism(owners);
  std::vector<DataOwner>                     lied(owners.begin(), owners.end());
  std::uniform_int_distribution<std::size_t> pick(0, owners.size() - 1);
  std::uniform_real_distribution<double>     u01(0.0, 1.0);
  for (int t = 0; t < trials; ++t)
  {
    OwnerId const i    = pick(rng);
    double const  cost = owners[i].bid;
    // alternate below and above; multiplicative factor in [0.05, 1] or [1, 20]
    double const f = t % 2 == 0 ? 0.05 + 0.95 * u01(rng) : std::exp(u01(rng) * std::log(20.0));
    lied[i].bid    = cost * f + (t % 4 == 3 ? u01(rng) : 0.0);
    auto const   out = mechanism(lied);
    double const gain = utility_in(out, i, cost) - utility_in(truth, i, cost);
    ++r.trials;
    if (gain > kUtilityTolerance)
    {
      r.record({instance_seed, i, gain, "bid " + std::to_string(lied[i].bid) + " vs " + std::to_string(cost)});
    }
    lied[i].bid = cost;
  }
  return r;
}

/// Random misreports in the feasible direction: smaller data size, larger
/// EMD, or both. The bid and the true cost stay as reported.
inline PropertyReport check_ic_quality(Mechanism const &mechanism, std::span<const DataOwner> owners, int trials,
                                       double emd_cap, std::mt19937_64 &rng, std::uint64_t instance_seed = 0)
{
  PropertyReport r;
  r.check     = "ic_quality";
  r.instances = 1;
  if (owners.empty())
  {
    return r;
  }
  auto const                                 truth = mechanism(owners);
  std::vector<DataOwner>                     lied(owners.begin(), owners.end());
  std::uniform_int_distribution<std::size_t> pick(0, owners.size() - 1);
  std::uniform_real_distribution<double>     u01(0.0, 1.0);
  for (int t = 0; t < trials; ++t)
  {
    OwnerId const i    = pick(rng);
    double const  cost = owners[i].bid;
    int const     kind = t % 3;
    if (kind != 1)
    {
      lied[i].data_size = owners[i].data_size * u01(rng);
    }
    if (kind != 0)
    {
      lied[i].emd = owners[i].emd + (std::max(emd_cap, owners[i].emd) - owners[i].emd) * u01(rng);
    }
    auto const   out  = mechanism(lied);
    double const gain = utility_in(out, i, cost) - utility_in(truth, i, cost);
    ++r.trials;
    if (gain > kUtilityTolerance)
    {
      r.record({instance_seed, i, gain,
                "d " + std::to_string(lied[i].data_size) + "/" + std::to_string(owners[i].data_size) + " emd " +
                  std::to_string(lied[i].emd) + "/" + std::to_string(owners[i].emd)});
    }
    lied[i] = owners[i];
  }
  return r;
}

/// Each winner's payment against the bisection critical bid.
inline PropertyReport check_payment_criticality(Mechanism const &mechanism, std::span<const DataOwner> owners,
                                                MarketConfig const &cfg, std::uint64_t instance_seed = 0)
{
  PropertyReport r;
  r.check     = "payment_criticality";
  r.instances = 1;
  auto const out = mechanism(owners);
  for (OwnerId i : out.winners)
  {
    ++r.trials;
    double const p = out.payments[i];
    try
    {
      auto const b = oracle::critical_bid_bisection(mechanism, owners, i, cfg);
      if (!b)
      {
        r.record({instance_seed, i, std::abs(p), "winner does not win on re-run"});
        continue;
      }
      double const err = std::abs(p - *b);
      if (err > kPaymentTolerance * (1.0 + std::abs(p)))
      {
        r.record({instance_seed, i, err,
                  "payment " + std::to_string(p) + " vs critical bid " + std::to_string(*b)});
      }
    }
    catch (OracleViolation const &e)
    {
      r.record({instance_seed, i, std::abs(p), e.what()});
    }
  }
  return r;
}

/// Winners form an independent set, ids ascend and the payment vector covers
/// every owner.
inline PropertyReport check_feasibility(AuctionOutcome const &out, std::span<const DataOwner> owners,
                                        ConflictGraph const &graph, std::uint64_t instance_seed = 0)
{
  PropertyReport r;
  r.check     = "feasibility";
  r.instances = 1;
  r.trials    = 1;
  if (out.payments.size() != owners.size())
  {
    r.record({instance_seed, 0, 1.0, "payment vector has the wrong length"});
  }
  else if (!std::is_sorted(out.winners.begin(), out.winners.end()) || !graph.is_feasible(out.winners))
  {
    r.record({instance_seed, 0, 1.0, "winner set is not a conflict-free set"});
  }
  return r;
}

/// Platform utility plus worker utilities equals social welfare.
inline PropertyReport check_accounting(AuctionOutcome const &out, std::span<const DataOwner> owners,
                                       MarketConfig const &cfg, std::uint64_t instance_seed = 0)
{
  PropertyReport r;
  r.check     = "accounting";
  r.instances        = 1;
  r.trials           = 1;
  double const total = market::accounted_welfare(out, owners, cfg);
  double const s     = market::social_welfare(out.winners, owners, cfg);
  double const err   = std::abs(total - s);
  if (err > kUtilityTolerance)
  {
    r.record({instance_seed, 0, err, "platform plus worker utility differs from welfare"});
  }
  return r;
}

inline void write_reports_csv(std::ostream &os, std::span<const PropertyReport> reports)
{
  os << "check,instances,trials,failures,worst_violation\n";
  os.precision(10);
  for (auto const &r : reports)
  {
    os << r.check << ',' << r.instances << ',' << r.trials << ',' << r.failures << ',' << r.worst_violation
       << '\n';
  }
}

}  // namespace fedauction::properties

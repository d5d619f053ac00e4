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

// Closed-form economics of the federated-learning services market: label
// skew, the data-quality curve, owner and platform service costs, utilities
// and social welfare. Everything here is a pure function of its arguments.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "fedauction/errors.hpp"

namespace fedauction {

using OwnerId  = std::size_t;
using OwnerSet = std::vector<OwnerId>;

/// Model constants shared by every mechanism. Defaults are the calibrated
/// values of the reference market; B and R are a unit calibration.
struct MarketConfig
{
  // data-quality curve q(D, Δ) = α(Δ) − κ1·exp(−κ2·(κ3·D)^α(Δ)),
  // α(Δ) = κ4·exp(−((Δ + κ5)/κ6)²), utility φ = κ7·q
  double kappa1 = 0.361;
  double kappa2 = 4.348;
  double kappa3 = 1e-3;
  double kappa4 = 0.993;
  double kappa5 = 0.31;
  double kappa6 = 1.743;
  double kappa7 = 100.0;

  double sigma_max = 1.2;
  double d_max     = 10.0;
  int    groups    = 10;

  double local_epochs  = 5.0;   // δ_l
  double global_epochs = 10.0;  // δ_g
  double model_size    = 0.5;   // M
  double bandwidth     = 1e4;   // B, per channel
  double rate          = 1e6;   // R, required uplink rate

  double platform_compute_cost  = 5e-2;  // α̂
  double platform_transmit_cost = 5e-5;  // β̂

  std::size_t label_count   = 10;
  std::size_t channel_count = 100;

  void validate() const
  {
    for (double k : {kappa1, kappa2, kappa3, kappa4, kappa5, kappa6, kappa7})
    {
      if (!(k > 0.0))
      {
        throw InvalidInput("market config: every kappa must be positive");
      }
    }
    // α is maximal at Δ = 0 because κ5 > 0
    if (!(kappa4 * std::exp(-std::pow(kappa5 / kappa6, 2)) < 1.0))
    {
      throw InvalidInput("market config: alpha(0) must stay below 1");
    }
    if (groups < 1)
    {
      throw InvalidInput("market config: groups must be >= 1");
    }
    if (!(bandwidth > 0.0) || !(rate > 0.0))
    {
      throw InvalidInput("market config: bandwidth and rate must be positive");
    }
    if (!(sigma_max > 0.0) || !(d_max > 0.0))
    {
      throw InvalidInput("market config: sigma_max and d_max must be positive");
    }
    if (global_epochs < 0.0 || local_epochs < 0.0 || model_size < 0.0)
    {
      throw InvalidInput("market config: epochs and model size must be non-negative");
    }
    if (label_count == 0 || channel_count == 0)
    {
      throw InvalidInput("market config: label and channel counts must be positive");
    }
  }
};

/// One bidder. `bid`, `data_size`, `emd` and `channels` are what the owner
/// reports; the three unit costs are private and only read when evaluating
/// true service cost.
struct DataOwner
{
  double           bid          = 0.0;
  double           data_size    = 0.0;
  double           emd          = 0.0;
  std::vector<int> channels;
  double           channel_gain = 1.0;

  double unit_data_cost    = 0.0;  // γ
  double unit_compute_cost = 0.0;  // α
  double unit_energy_cost  = 0.0;  // β
};

struct AuctionOutcome
{
  OwnerSet            winners;   // ascending ids
  std::vector<double> payments;  // one entry per owner, zero for losers
  double              social_welfare = 0.0;
};

namespace market {

inline std::vector<double> uniform_distribution(std::size_t labels)
{
  if (labels == 0)
  {
    throw InvalidInput("uniform_distribution: label count must be positive");
  }
  return std::vector<double>(labels, 1.0 / static_cast<double>(labels));
}

/// Earth mover's distance between a local label distribution and the
/// reference one, as the L1 gap between probability vectors.
inline double emd(std::span<const double> local, std::span<const double> reference)
{
  if (local.size() != reference.size())
  {
    throw InvalidInput("emd: label distributions have different lengths");
  }
  double total = 0.0;
  for (std::size_t j = 0; j < local.size(); ++j)
  {
    total += std::abs(local[j] - reference[j]);
  }
  return total;
}

inline double quality_alpha(double delta, MarketConfig const &cfg)
{
  double const z = (delta + cfg.kappa5) / cfg.kappa6;
  return cfg.kappa4 * std::exp(-z * z);
}

inline double data_quality(double total_data, double delta, MarketConfig const &cfg)
{
  double const a = quality_alpha(delta, cfg);
  return a - cfg.kappa1 * std::exp(-cfg.kappa2 * std::pow(cfg.kappa3 * total_data, a));
}

/// κ1·κ7·exp(−κ2·(κ3·z)^alpha): the part of the data utility that shrinks as
/// total data z grows. Convex and decreasing in z for alpha in (0, 1).
inline double utility_shortfall(double total_data, double alpha, MarketConfig const &cfg)
{
  return cfg.kappa1 * cfg.kappa7 *
         std::exp(-cfg.kappa2 * std::pow(cfg.kappa3 * total_data, alpha));
}

inline double total_data(std::span<const OwnerId> workers, std::span<const DataOwner> owners)
{
  double d = 0.0;
  for (OwnerId i : workers)
  {
    d += owners[i].data_size;
  }
  return d;
}

/// Mean EMD of the worker set; zero for the empty set.
inline double mean_emd(std::span<const OwnerId> workers, std::span<const DataOwner> owners)
{
  if (workers.empty())
  {
    return 0.0;
  }
  double s = 0.0;
  for (OwnerId i : workers)
  {
    s += owners[i].emd;
  }
  return s / static_cast<double>(workers.size());
}

/// Platform data utility φ. The empty worker set earns nothing.
inline double data_utility(std::span<const OwnerId> workers, std::span<const DataOwner> owners,
                           MarketConfig const &cfg)
{
  if (workers.empty())
  {
    return 0.0;
  }
  return cfg.kappa7 * data_quality(total_data(workers, owners), mean_emd(workers, owners), cfg);
}

inline double owner_data_cost(double data_size, double unit_data_cost)
{
  return data_size * unit_data_cost;
}

inline double owner_compute_cost(double data_size, MarketConfig const &cfg, double unit_compute_cost)
{
  return data_size * cfg.local_epochs * cfg.global_epochs * cfg.model_size * unit_compute_cost;
}

/// Transmit power needed to sustain rate R over `channel_count` channels
/// (Shannon capacity inverted), divided by the normalized channel gain.
inline double comm_power(std::size_t channel_count, double channel_gain, MarketConfig const &cfg)
{
  if (channel_count == 0 || !(channel_gain > 0.0))
  {
    throw InvalidInput("comm_power: need at least one channel and a positive gain");
  }
  double const total_bw = cfg.bandwidth * static_cast<double>(channel_count);
  return std::expm1(cfg.rate / total_bw * std::log(2.0)) * total_bw / channel_gain;
}

inline double owner_comm_cost(std::size_t channel_count, double channel_gain, MarketConfig const &cfg,
                              double unit_energy_cost)
{
  return comm_power(channel_count, channel_gain, cfg) * (cfg.model_size / cfg.rate) *
         cfg.global_epochs * unit_energy_cost;
}

/// True service cost c_i: data collection plus local computation plus uplink.
inline double owner_total_cost(DataOwner const &owner, MarketConfig const &cfg)
{
  return owner_data_cost(owner.data_size, owner.unit_data_cost) +
         owner_compute_cost(owner.data_size, cfg, owner.unit_compute_cost) +
         owner_comm_cost(owner.channels.size(), owner.channel_gain, cfg, owner.unit_energy_cost);
}

/// The platform-side cost of downlinking the global model to one worker.
inline double platform_transmit_cost(DataOwner const &owner, MarketConfig const &cfg)
{
  return owner_comm_cost(owner.channels.size(), owner.channel_gain, cfg,
                         cfg.platform_transmit_cost);
}

/// Model-averaging cost per additional worker beyond the first.
inline double platform_compute_increment(MarketConfig const &cfg)
{
  return cfg.global_epochs * cfg.model_size * cfg.platform_compute_cost;
}

inline double platform_cost(std::span<const OwnerId> workers, std::span<const DataOwner> owners,
                            MarketConfig const &cfg)
{
  if (workers.empty())
  {
    return 0.0;
  }
  double c = platform_compute_increment(cfg) * static_cast<double>(workers.size() - 1);
  for (OwnerId i : workers)
  {
    c += platform_transmit_cost(owners[i], cfg);
  }
  return c;
}

/// Social welfare with true service costs. S(∅) = 0.
inline double social_welfare(std::span<const OwnerId> workers, std::span<const DataOwner> owners,
                             MarketConfig const &cfg)
{
  if (workers.empty())
  {
    return 0.0;
  }
  double s = data_utility(workers, owners, cfg) - platform_cost(workers, owners, cfg);
  for (OwnerId i : workers)
  {
    s -= owner_total_cost(owners[i], cfg);
  }
  return s;
}

/// Welfare as the auctioneer sees it, with bids standing in for costs.
inline double declared_welfare(std::span<const OwnerId> workers, std::span<const DataOwner> owners,
                               MarketConfig const &cfg)
{
  if (workers.empty())
  {
    return 0.0;
  }
  double s = data_utility(workers, owners, cfg) - platform_cost(workers, owners, cfg);
  for (OwnerId i : workers)
  {
    s -= owners[i].bid;
  }
  return s;
}

inline double worker_utility(double payment, double cost)
{
  return payment - cost;
}

inline double platform_utility(AuctionOutcome const &outcome, std::span<const DataOwner> owners,
                               MarketConfig const &cfg)
{
  double u = data_utility(outcome.winners, owners, cfg) - platform_cost(outcome.winners, owners, cfg);
  for (OwnerId i : outcome.winners)
  {
    u -= outcome.payments.at(i);
  }
  return u;
}

/// û + Σ u_i over winners, which equals S when payments are internally
/// consistent.
inline double accounted_welfare(AuctionOutcome const &outcome, std::span<const DataOwner> owners,
                                MarketConfig const &cfg)
{
  double total = platform_utility(outcome, owners, cfg);
  for (OwnerId i : outcome.winners)
  {
    total += worker_utility(outcome.payments.at(i), owner_total_cost(owners[i], cfg));
  }
  return total;
}

}  // namespace market
}  // namespace fedauction

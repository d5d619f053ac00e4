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

#include <cmath>
#include <cstdint>
#include <vector>

#include "fedauction/fedauction.hpp"

namespace fedauction::testing {

/// Owner with explicit reported fields and zero private costs unless given.
inline DataOwner owner(double bid, double data_size, double emd, std::vector<int> channels,
                       double gain = 1e6)
{
  DataOwner o;
  o.bid          = bid;
  o.data_size    = data_size;
  o.emd          = emd;
  o.channels     = std::move(channels);
  o.channel_gain = gain;
  return o;
}

/// Config whose platform-side costs vanish.
inline MarketConfig free_platform()
{
  MarketConfig c;
  c.platform_compute_cost  = 0.0;
  c.platform_transmit_cost = 0.0;
  return c;
}

/// Shortfall o(z) evaluated from the raw constants.
inline double shortfall(double z, double alpha)
{
  return 0.361 * 100.0 * std::exp(-4.348 * std::pow(1e-3 * z, alpha));
}

inline double alpha_of(double delta)
{
  double const t = (delta + 0.31) / 1.743;
  return 0.993 * std::exp(-t * t);
}

inline std::vector<std::vector<DataOwner>> random_markets(std::size_t count, std::size_t n, std::uint64_t seed,
                                                          MarketConfig const &cfg = {})
{
  experiments::ScenarioConfig scn;
  scn.owners = n;
  return experiments::generate_instances(scn, cfg, count, seed).markets;
}

}  // namespace fedauction::testing

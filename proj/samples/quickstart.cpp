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

// Generates one market, runs both auctions and the bid-only benchmark on it,
// and compares them with the exact optimum.

#include <fmt/core.h>

#include "fedauction/fedauction.hpp"

namespace fa = fedauction;
namespace ex = fedauction::experiments;

int main()
{
  fa::MarketConfig const cfg;
  ex::ScenarioConfig     scn;
  scn.owners = 12;

  std::uint64_t const seed   = 2024;
  auto const          owners = ex::generate_instance(scn, cfg, seed);

  auto const rma   = fa::rma::run_rma(owners, cfg, seed);
  auto const bench = ex::benchmark_bid_greedy(owners, cfg);
  auto const best  = fa::oracle::optimal_welfare(owners, cfg);

  // a short training run; real experiments use the defaults (500 episodes)
  fa::training::TrainConfig tc;
  tc.episodes = 60;
  tc.seed     = seed;
  auto const trained = fa::training::train(
    [&](std::mt19937_64 &rng) { return ex::generate_instance(scn, cfg, rng()); },
    ex::generate_instances(scn, cfg, 20, seed + 1).markets, cfg, tc, fa::drla::DrlaParams::init({}, seed));
  auto const drla = fa::drla::run_drla(owners, cfg, trained.best);

  auto show = [&](char const *name, fa::AuctionOutcome const &out) {
    double paid = 0.0;
    for (fa::OwnerId i : out.winners)
    {
      paid += out.payments[i];
    }
    fmt::print("{:<10} welfare {:7.3f}  workers {}  payments {:8.3f}  platform utility {:7.3f}\n", name,
               out.social_welfare, out.winners.size(), paid, fa::market::platform_utility(out, owners, cfg));
  };
  show("RMA", rma);
  show("DRLA", drla);
  show("benchmark", bench);
  fmt::print("{:<10} welfare {:7.3f}  workers {}\n", "optimum", best.best_welfare, best.best_set.size());
}

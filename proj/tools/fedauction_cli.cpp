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

// Command-line front end. Exit status: 0 success, 1 a checked property or
// a fit/training run failed, 2 bad usage or input.

#include <CLI11.hpp>
#include <fmt/core.h>

#include <cstdint>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "fedauction/fedauction.hpp"

namespace fa = fedauction;
namespace ex = fedauction::experiments;
namespace io = fedauction::io;
namespace mp = fedauction::properties;
namespace tr = fedauction::training;

namespace {

constexpr int kOk       = 0;
constexpr int kFailed   = 1;
constexpr int kBadInput = 2;

/// Options shared by every subcommand: a config file and key=value overrides.
struct Common
{
  std::string              config;
  std::vector<std::string> overrides;

  void attach(CLI::App *cmd)
  {
    cmd->add_option("-c,--config", config, "key = value config file")->check(CLI::ExistingFile);
    cmd->add_option("--set", overrides, "override a config key, KEY=VALUE (repeatable)");
  }

  io::KeyValues load() const
  {
    io::KeyValues kv;
    if (!config.empty())
    {
      kv = io::KeyValues::load(config);
    }
    for (auto const &o : overrides)
    {
      auto const eq = o.find('=');
      if (eq == std::string::npos || eq == 0 || eq + 1 == o.size())
      {
        throw fa::InvalidInput("--set expects KEY=VALUE, got '" + o + "'");
      }
      kv.set(o.substr(0, eq), o.substr(eq + 1));
    }
    auto const unknown = kv.unknown(io::known_keys());
    if (!unknown.empty())
    {
      throw fa::InvalidInput("unknown config key '" + unknown.front() + "'");
    }
    return kv;
  }
};

/// Output stream: a file when a path is given, stdout otherwise.
class Output
{
public:
  explicit Output(std::string const &path)
  {
    if (!path.empty())
    {
      file_ = std::make_unique<std::ofstream>(path);
      if (!*file_)
      {
        throw fa::InvalidInput("cannot write " + path);
      }
    }
  }

  std::ostream &stream()
  {
    return file_ ? *file_ : std::cout;
  }

private:
  std::unique_ptr<std::ofstream> file_;
};

template <typename T>
void put(io::KeyValues &kv, std::string const &key, std::optional<T> const &flag)
{
  if (flag)
  {
    std::ostringstream os;
    os.precision(17);
    os << *flag;
    kv.set(key, os.str());
  }
}

fa::MarketConfig market_config(io::KeyValues const &kv)
{
  fa::MarketConfig c;
  io::apply(kv, c);
  return c;
}

std::string join(fa::OwnerSet const &s)
{
  std::string out;
  for (fa::OwnerId i : s)
  {
    out += (out.empty() ? "" : ";") + std::to_string(i);
  }
  return out;
}

void write_outcomes(std::ostream &os, std::vector<fa::AuctionOutcome> const &outs, ex::InstanceSet const &set)
{
  os << "instance,seed,welfare,workers,total_payment,winners\n";
  os.precision(12);
  for (std::size_t k = 0; k < outs.size(); ++k)
  {
    double paid = 0.0;
    for (fa::OwnerId i : outs[k].winners)
    {
      paid += outs[k].payments[i];
    }
    os << k << ',' << set.seeds[k] << ',' << outs[k].social_welfare << ',' << outs[k].winners.size() << ',' << paid
       << ',' << join(outs[k].winners) << '\n';
  }
}

// --------------------------------------------------------------------------

struct GenArgs
{
  Common                     common;
  std::uint64_t              seed = 0;
  std::optional<std::size_t> owners, count;
  std::string                out;
};

int run_gen(GenArgs const &a)
{
  auto kv = a.common.load();
  put(kv, "owners", a.owners);
  put(kv, "instances", a.count);
  auto const         cfg = market_config(kv);
  ex::ScenarioConfig scn;
  io::apply(kv, scn);
  std::size_t count = 100;
  kv.read("instances", count);
  io::save_instances(a.out, ex::generate_instances(scn, cfg, count, a.seed));
  fmt::print(stderr, "wrote {} instances of {} owners to {}\n", count, scn.owners, a.out);
  return kOk;
}

struct RunArgs
{
  Common        common;
  std::string   instances, model, out;
  std::uint64_t seed = 0;
};

int run_rma(RunArgs const &a)
{
  auto const kv  = a.common.load();
  auto const cfg = market_config(kv);
  auto const set = io::load_instances(a.instances);
  std::vector<fa::AuctionOutcome> outs;
  for (std::size_t k = 0; k < set.markets.size(); ++k)
  {
    outs.push_back(fa::rma::run_rma(set.markets[k], cfg, ex::instance_seed(a.seed, k)));
  }
  Output o(a.out);
  write_outcomes(o.stream(), outs, set);
  return kOk;
}

int run_drla(RunArgs const &a)
{
  auto const kv    = a.common.load();
  auto const cfg   = market_config(kv);
  auto const set   = io::load_instances(a.instances);
  auto const model = fa::drla::load_params(a.model);
  std::vector<fa::AuctionOutcome> outs;
  for (auto const &m : set.markets)
  {
    outs.push_back(fa::drla::run_drla(m, cfg, model));
  }
  Output o(a.out);
  write_outcomes(o.stream(), outs, set);
  return kOk;
}

int run_oracle(RunArgs const &a)
{
  auto const kv  = a.common.load();
  auto const cfg = market_config(kv);
  auto const set = io::load_instances(a.instances);
  Output     o(a.out);
  auto      &os = o.stream();
  os << "instance,seed,optimal_welfare,workers,winners\n";
  os.precision(12);
  for (std::size_t k = 0; k < set.markets.size(); ++k)
  {
    auto const r = fa::oracle::optimal_welfare(set.markets[k], cfg);
    os << k << ',' << set.seeds[k] << ',' << r.best_welfare << ',' << r.best_set.size() << ','
       << join(r.best_set) << '\n';
  }
  return kOk;
}

struct TrainArgs
{
  Common                     common;
  std::uint64_t              seed = 0;
  std::optional<int>         episodes;
  std::optional<std::size_t> owners;
  std::string                out, log;
};

int run_train(TrainArgs const &a)
{
  auto kv = a.common.load();
  put(kv, "episodes", a.episodes);
  put(kv, "train_owners", a.owners);
  auto const         cfg = market_config(kv);
  ex::ScenarioConfig scn;
  io::apply(kv, scn);
  scn.owners = 10;
  kv.read("train_owners", scn.owners);
  std::size_t validation = 100;
  kv.read("validation_instances", validation);
  tr::TrainConfig tc;
  io::apply(kv, tc);
  tc.seed = a.seed;
  fa::drla::DrlaHyper h;
  io::apply(kv, h);

  auto const val = ex::generate_instances(scn, cfg, validation, ex::instance_seed(a.seed, 1u << 20));
  ex::Interval d_range, sigma_range;
  kv.read("train_d_max_min", d_range.lo);
  kv.read("train_d_max_max", d_range.hi);
  kv.read("train_sigma_max_min", sigma_range.lo);
  kv.read("train_sigma_max_max", sigma_range.hi);
  auto res = tr::train(
    [&](std::mt19937_64 &rng) {
      auto const c = ex::draw_market_config(cfg, d_range, sigma_range, rng);
      return ex::generate_instance(scn, c, rng());
    },
    val.markets, cfg, tc, fa::drla::DrlaParams::init(h, a.seed), [&](tr::EpisodeLog const &row) {
      if (row.episode % 50 == 0 || row.episode == tc.episodes)
      {
        fmt::print(stderr, "episode {:>5}  validation welfare {:.4f}  loss {:.4g}\n", row.episode,
                   row.validation_welfare, row.loss);
      }
    });
  fa::drla::save_params(res.best, a.out);
  if (!a.log.empty())
  {
    Output o(a.log);
    tr::write_log_csv(o.stream(), res.log);
  }
  fmt::print(stderr, "saved best validation checkpoint (episode {}) to {} after {} gradient steps\n", res.best_episode,
             a.out, res.gradient_steps);
  return kOk;
}

struct SweepArgs
{
  Common                     common;
  std::string                kind, values, mechanisms = "rma,benchmark", model, out;
  std::uint64_t              seed = 0;
  std::optional<std::size_t> count;
};

int run_sweep(SweepArgs const &a)
{
  auto kv = a.common.load();
  put(kv, "instances", a.count);
  auto const         cfg = market_config(kv);
  ex::ScenarioConfig scn;
  io::apply(kv, scn);
  std::size_t count = 1000;
  kv.read("instances", count);
  auto const kind   = ex::parse_sweep_kind(a.kind);
  auto const values = io::parse_double_list(a.values);

  std::optional<fa::drla::DrlaParams> model;
  std::vector<ex::NamedMechanism>     mechs;
  std::stringstream                   names(a.mechanisms);
  for (std::string name; std::getline(names, name, ',');)
  {
    if (name == "rma")
    {
      mechs.push_back({"RMA", [](std::span<const fa::DataOwner> o, fa::MarketConfig const &c, std::uint64_t s) {
                         return fa::rma::run_rma(o, c, s, false);
                       }});
    }
    else if (name == "benchmark")
    {
      mechs.push_back(
        {"benchmark", [](std::span<const fa::DataOwner> o, fa::MarketConfig const &c, std::uint64_t) {
           return ex::benchmark_bid_greedy(o, c, ex::BenchmarkOptions{false, {}});
         }});
    }
    else if (name == "drla")
    {
      if (a.model.empty())
      {
        throw fa::InvalidInput("sweep: the drla mechanism needs --model");
      }
      model = fa::drla::load_params(a.model);
      mechs.push_back({"DRLA", [&model](std::span<const fa::DataOwner> o, fa::MarketConfig const &c, std::uint64_t) {
                         return fa::drla::run_drla(o, c, *model, false);
                       }});
    }
    else
    {
      throw fa::InvalidInput("sweep: unknown mechanism '" + name + "' (rma, drla, benchmark)");
    }
  }
  auto const rows = ex::sweep(kind, values, mechs, scn, cfg, count, a.seed);
  Output     o(a.out);
  ex::write_sweep_csv(o.stream(), rows);
  return kOk;
}

struct FitArgs
{
  Common        common;
  std::uint64_t seed = 0;
  std::string   grid_out;
};

int run_fit(FitArgs const &a)
{
  auto const     kv = a.common.load();
  fa::fedsim::GridConfig g;
  io::apply(kv, g);
  g.seed        = a.seed;
  double radius = 4.0, spread = 1.0;
  int    test   = 200;
  kv.read("task_radius", radius);
  kv.read("task_spread", spread);
  kv.read("task_test_per_label", test);
  fa::MarketConfig const cfg  = market_config(kv);
  auto const             task = fa::fedsim::SyntheticTask::make(static_cast<int>(cfg.label_count), radius, spread,
                                                                test, a.seed);
  auto const             grid = fa::fedsim::accuracy_grid(task, g);
  if (!a.grid_out.empty())
  {
    Output o(a.grid_out);
    fa::fedsim::write_grid_csv(o.stream(), grid);
  }
  fa::fedsim::FitOptions opt;
  kv.read("fit_restarts", opt.restarts);
  opt.seed       = a.seed;
  auto const fit = fa::fedsim::fit_quality_params(grid, opt);
  for (std::size_t k = 0; k < 6; ++k)
  {
    fmt::print("kappa{} = {:.6g}\n", k + 1, fit.kappa[k]);
  }
  fmt::print("# R^2 {:.4f}, {} of {} restarts converged\n", fit.r_squared, fit.converged, fit.restarts);
  return kOk;
}

struct PropArgs
{
  Common        common;
  std::string   instances, mechanism = "rma", model, out;
  std::uint64_t seed   = 0;
  int           trials = 20;
};

int run_properties(PropArgs const &a)
{
  auto const kv  = a.common.load();
  auto const cfg = market_config(kv);
  auto const set = io::load_instances(a.instances);
  int        trials = a.trials;
  kv.read("trials", trials);

  std::optional<fa::drla::DrlaParams> model;
  if (a.mechanism == "drla")
  {
    if (a.model.empty())
    {
      throw fa::InvalidInput("properties: the drla mechanism needs --model");
    }
    model = fa::drla::load_params(a.model);
  }
  else if (a.mechanism != "rma" && a.mechanism != "benchmark")
  {
    throw fa::InvalidInput("properties: unknown mechanism '" + a.mechanism + "' (rma, drla, benchmark)");
  }

  std::vector<mp::PropertyReport> total(6);
  for (std::size_t k = 0; k < set.markets.size(); ++k)
  {
    std::uint64_t const s = ex::instance_seed(a.seed, k);
    mp::Mechanism       mech;
    if (a.mechanism == "rma")
    {
      mech = [&cfg, s](std::span<const fa::DataOwner> o) { return fa::rma::run_rma(o, cfg, s); };
    }
    else if (a.mechanism == "drla")
    {
      mech = [&cfg, &model](std::span<const fa::DataOwner> o) { return fa::drla::run_drla(o, cfg, *model); };
    }
    else
    {
      mech = [&cfg](std::span<const fa::DataOwner> o) { return ex::benchmark_bid_greedy(o, cfg); };
    }
    auto const     &m = set.markets[k];
    std::mt19937_64 rng(s);
    auto const      out = mech(m);
    mp::PropertyReport const parts[] = {
      mp::check_ir(mech, m, s),
      mp::check_ic_bid(mech, m, trials, rng, s),
      mp::check_ic_quality(mech, m, trials, cfg.sigma_max, rng, s),
      mp::check_payment_criticality(mech, m, cfg, s),
      mp::check_feasibility(out, m, fa::ConflictGraph::build(m), s),
      mp::check_accounting(out, m, cfg, s)};
    for (std::size_t p = 0; p < total.size(); ++p)
    {
      total[p].merge(parts[p]);
    }
  }
  Output o(a.out);
  mp::write_reports_csv(o.stream(), total);
  bool ok = true;
  for (auto const &r : total)
  {
    ok = ok && r.passed();
    for (auto const &f : r.failed)
    {
      fmt::print(stderr, "{}: instance seed {} owner {} violation {:.4g}: {}\n", r.check, f.instance_seed, f.owner,
                 f.violation, f.detail);
    }
  }
  return ok ? kOk : kFailed;
}

}  // namespace

int main(int argc, char **argv)
{
  CLI::App app{"Auctions for federated-learning data markets"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "fedauction 1.0.0");

  GenArgs gen;
  auto   *g = app.add_subcommand("gen", "generate random owner populations");
  gen.common.attach(g);
  g->add_option("--seed", gen.seed, "instance-set seed")->required();
  g->add_option("-n,--owners", gen.owners, "owners per instance");
  g->add_option("--count", gen.count, "number of instances");
  g->add_option("-o,--out", gen.out, "instance file to write")->required();

  RunArgs rma, drla_run, oracle;
  auto   *r = app.add_subcommand("run-rma", "run the greedy multi-dimensional auction");
  rma.common.attach(r);
  r->add_option("-i,--instances", rma.instances, "instance file")->required()->check(CLI::ExistingFile);
  r->add_option("--seed", rma.seed, "seed for the random group order")->required();
  r->add_option("-o,--out", rma.out, "CSV output (default stdout)");

  auto *d = app.add_subcommand("run-drla", "run the learned auction");
  drla_run.common.attach(d);
  d->add_option("-i,--instances", drla_run.instances, "instance file")->required()->check(CLI::ExistingFile);
  d->add_option("-m,--model", drla_run.model, "trained parameter file")->required()->check(CLI::ExistingFile);
  d->add_option("-o,--out", drla_run.out, "CSV output (default stdout)");

  auto *x = app.add_subcommand("oracle", "exact welfare optimum by enumeration (at most 20 owners)");
  oracle.common.attach(x);
  x->add_option("-i,--instances", oracle.instances, "instance file")->required()->check(CLI::ExistingFile);
  x->add_option("-o,--out", oracle.out, "CSV output (default stdout)");

  TrainArgs train;
  auto     *t = app.add_subcommand("train-drla", "train the learned auction's parameters");
  train.common.attach(t);
  t->add_option("--seed", train.seed, "training seed")->required();
  t->add_option("--episodes", train.episodes, "training episodes");
  t->add_option("-n,--owners", train.owners, "owners per training instance");
  t->add_option("-o,--out", train.out, "parameter file to write")->required();
  t->add_option("--log", train.log, "per-episode CSV log");

  SweepArgs sweep;
  auto     *s = app.add_subcommand("sweep", "mean welfare and worker count over a parameter range");
  sweep.common.attach(s);
  s->add_option("--kind", sweep.kind, "N, d_max, sigma_max or G")->required();
  s->add_option("--values", sweep.values, "comma-separated values")->required();
  s->add_option("--mechanisms", sweep.mechanisms, "comma-separated subset of rma,drla,benchmark")
    ->capture_default_str();
  s->add_option("-m,--model", sweep.model, "parameter file for drla")->check(CLI::ExistingFile);
  s->add_option("--seed", sweep.seed, "instance-set seed")->required();
  s->add_option("--count", sweep.count, "instances per value");
  s->add_option("-o,--out", sweep.out, "CSV output (default stdout)");

  FitArgs fit;
  auto   *f = app.add_subcommand("fedsim-fit", "fit the data-quality curve to simulated FedAvg accuracy");
  fit.common.attach(f);
  f->add_option("--seed", fit.seed, "simulation seed")->required();
  f->add_option("--grid-out", fit.grid_out, "CSV of the accuracy grid");

  PropArgs props;
  auto    *p = app.add_subcommand("properties", "check IR, IC, payment criticality and accounting");
  props.common.attach(p);
  p->add_option("-i,--instances", props.instances, "instance file")->required()->check(CLI::ExistingFile);
  p->add_option("--mechanism", props.mechanism, "rma, drla or benchmark")->capture_default_str();
  p->add_option("-m,--model", props.model, "parameter file for drla")->check(CLI::ExistingFile);
  p->add_option("--seed", props.seed, "seed for misreports and group order")->required();
  p->add_option("--trials", props.trials, "misreports per instance")->capture_default_str();
  p->add_option("-o,--out", props.out, "CSV report (default stdout)");

  try
  {
    app.parse(argc, argv);
  }
  catch (CLI::ParseError const &e)
  {
    return app.exit(e) == 0 ? kOk : kBadInput;
  }

  try
  {
    if (g->parsed())
    {
      return run_gen(gen);
    }
    if (r->parsed())
    {
      return run_rma(rma);
    }
    if (d->parsed())
    {
      return run_drla(drla_run);
    }
    if (x->parsed())
    {
      return run_oracle(oracle);
    }
    if (t->parsed())
    {
      return run_train(train);
    }
    if (s->parsed())
    {
      return run_sweep(sweep);
    }
    if (f->parsed())
    {
      return run_fit(fit);
    }
    if (p->parsed())
    {
      return run_properties(props);
    }
  }
  catch (fa::TrainingDiverged const &e)
  {
    fmt::print(stderr, "error: {}\n", e.what());
    return kFailed;
  }
  catch (fa::FitFailure const &e)
  {
    fmt::print(stderr, "error: {}\n", e.what());
    return kFailed;
  }
  catch (fa::OracleViolation const &e)
  {
    fmt::print(stderr, "error: {}\n", e.what());
    return kFailed;
  }
  catch (std::exception const &e)
  {
    fmt::print(stderr, "error: {}\n", e.what());
    return kBadInput;
  }
  return kBadInput;
}

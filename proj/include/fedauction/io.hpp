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

// Text formats.
//
// Instance file:
//   fedauction-instances 1
//   instance <index> <owner count> <seed>
//   <id> <bid> <data size> <emd> <gain> <unit data cost> <unit compute cost> <unit energy cost> <c1,c2,...>
//   ...
// Doubles are written with 17 significant digits so files round-trip exactly.
// Blank lines and lines starting with '#' are ignored.
//
// Config file: one `key = value` per line, '#' starts a comment.

#include <charconv>
#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "fedauction/drl_training.hpp"
#include "fedauction/errors.hpp"
#include "fedauction/experiments.hpp"
#include "fedauction/fedsim.hpp"
#include "fedauction/market_model.hpp"

namespace fedauction::io {

inline constexpr char const *kInstanceMagic   = "fedauction-instances";
inline constexpr int         kInstanceVersion = 1;

inline void write_instances(std::ostream &os, experiments::InstanceSet const &set)
{
  os << kInstanceMagic << ' ' << kInstanceVersion << '\n';
  for (std::size_t k = 0; k < set.markets.size(); ++k)
  {
    auto const &m = set.markets[k];
    os << fmt::format("instance {} {} {}\n", k, m.size(), k < set.seeds.size() ? set.seeds[k] : 0);
    for (std::size_t i = 0; i < m.size(); ++i)
    {
      auto const &o = m[i];
      os << fmt::format("{} {:.17g} {:.17g} {:.17g} {:.17g} {:.17g} {:.17g} {:.17g} {}\n", i, o.bid, o.data_size,
                        o.emd, o.channel_gain, o.unit_data_cost, o.unit_compute_cost, o.unit_energy_cost,
                        fmt::join(o.channels, ","));
    }
  }
}

namespace detail {

inline double parse_double(std::string const &tok, std::size_t line)
{
  double      v   = 0.0;
  char const *end = tok.data() + tok.size();
  auto [p, ec]    = std::from_chars(tok.data(), end, v);
  if (ec != std::errc() || p != end)
  {
    throw InvalidInput(fmt::format("line {}: '{}' is not a number", line, tok));
  }
  return v;
}

template <typename T>
T parse_integer(std::string const &tok, std::size_t line)
{
  T           v   = 0;
  char const *end = tok.data() + tok.size();
  auto [p, ec]    = std::from_chars(tok.data(), end, v);
  if (ec != std::errc() || p != end)
  {
    throw InvalidInput(fmt::format("line {}: '{}' is not an integer", line, tok));
  }
  return v;
}

inline std::vector<std::string> split_ws(std::string const &s)
{
  std::istringstream       in(s);
  std::vector<std::string> out;
  for (std::string t; in >> t;)
  {
    out.push_back(t);
  }
  return out;
}

inline std::string trim(std::string const &s)
{
  auto const b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos)
  {
    return {};
  }
  auto const e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace detail

inline experiments::InstanceSet read_instances(std::istream &is)
{
  experiments::InstanceSet set;
  std::string              raw;
  std::size_t              line = 0;
  bool                     header = false;
  std::size_t              expect = 0;
  while (std::getline(is, raw))
  {
    ++line;
    std::string const s = detail::trim(raw);
    if (s.empty() || s.front() == '#')
    {
      continue;
    }
    auto const tok = detail::split_ws(s);
    if (!header)
    {
      if (tok.size() != 2 || tok[0] != kInstanceMagic)
      {
        throw InvalidInput(fmt::format("line {}: missing '{} {}' header", line, kInstanceMagic, kInstanceVersion));
      }
      if (detail::parse_integer<int>(tok[1], line) != kInstanceVersion)
      {
        throw InvalidInput(fmt::format("line {}: unsupported instance format version {}", line, tok[1]));
      }
      header = true;
      continue;
    }
    if (tok[0] == "instance")
    {
      if (expect != 0)
      {
        throw InvalidInput(fmt::format("line {}: previous instance is missing {} owners", line, expect));
      }
      if (tok.size() != 4)
      {
        throw InvalidInput(fmt::format("line {}: expected 'instance <index> <count> <seed>'", line));
      }
      if (detail::parse_integer<std::size_t>(tok[1], line) != set.markets.size())
      {
        throw InvalidInput(fmt::format("line {}: instance indices must count up from 0", line));
      }
      expect = detail::parse_integer<std::size_t>(tok[2], line);
      set.seeds.push_back(detail::parse_integer<std::uint64_t>(tok[3], line));
      set.markets.emplace_back();
      continue;
    }
    if (set.markets.empty() || expect == 0)
    {
      throw InvalidInput(fmt::format("line {}: owner record outside an instance", line));
    }
    if (tok.size() != 9)
    {
      throw InvalidInput(fmt::format("line {}: owner record needs 9 fields, found {}", line, tok.size()));
    }
    auto &m = set.markets.back();
    if (detail::parse_integer<std::size_t>(tok[0], line) != m.size())
    {
      throw InvalidInput(fmt::format("line {}: owner ids must count up from 0", line));
    }
    DataOwner o;
    o.bid               = detail::parse_double(tok[1], line);
    o.data_size         = detail::parse_double(tok[2], line);
    o.emd               = detail::parse_double(tok[3], line);
    o.channel_gain      = detail::parse_double(tok[4], line);
    o.unit_data_cost    = detail::parse_double(tok[5], line);
    o.unit_compute_cost = detail::parse_double(tok[6], line);
    o.unit_energy_cost  = detail::parse_double(tok[7], line);
    std::stringstream ch(tok[8]);
    for (std::string c; std::getline(ch, c, ',');)
    {
      o.channels.push_back(detail::parse_integer<int>(c, line));
    }
    if (o.channels.empty() || !(o.channel_gain > 0.0) || o.data_size < 0.0 || o.emd < 0.0)
    {
      throw InvalidInput(fmt::format("line {}: owner needs channels, positive gain and non-negative d, EMD", line));
    }
    m.push_back(std::move(o));
    --expect;
  }
  if (!header)
  {
    throw InvalidInput("instance file is empty");
  }
  if (expect != 0)
  {
    throw InvalidInput(fmt::format("last instance is missing {} owners", expect));
  }
  return set;
}

inline void save_instances(std::string const &path, experiments::InstanceSet const &set)
{
  std::ofstream f(path);
  if (!f)
  {
    throw InvalidInput("cannot write " + path);
  }
  write_instances(f, set);
}

inline experiments::InstanceSet load_instances(std::string const &path)
{
  std::ifstream f(path);
  if (!f)
  {
    throw InvalidInput("cannot read " + path);
  }
  return read_instances(f);
}

// --------------------------------------------------------------------------
// Config

/// Parsed `key = value` file. Values stay strings until a typed getter or
/// one of the apply_* helpers reads them.
class KeyValues
{
public:
  static KeyValues parse(std::istream &is)
  {
    KeyValues   kv;
    std::string raw;
    std::size_t line = 0;
    while (std::getline(is, raw))
    {
      ++line;
      std::string s = raw.substr(0, raw.find('#'));
      s             = detail::trim(s);
      if (s.empty())
      {
        continue;
      }
      auto const eq = s.find('=');
      if (eq == std::string::npos)
      {
        throw InvalidInput(fmt::format("config line {}: expected 'key = value'", line));
      }
      std::string const key = detail::trim(s.substr(0, eq));
      std::string const val = detail::trim(s.substr(eq + 1));
      if (key.empty() || val.empty())
      {
        throw InvalidInput(fmt::format("config line {}: empty key or value", line));
      }
      kv.values_[key] = val;
    }
    return kv;
  }

  static KeyValues load(std::string const &path)
  {
    std::ifstream f(path);
    if (!f)
    {
      throw InvalidInput("cannot read config " + path);
    }
    return parse(f);
  }

  void set(std::string const &key, std::string const &value)
  {
    values_[key] = value;
  }

  bool has(std::string const &key) const
  {
    return values_.count(key) != 0;
  }

  template <typename T>
  void read(std::string const &key, T &target) const
  {
    auto const it = values_.find(key);
    if (it == values_.end())
    {
      return;
    }
    if constexpr (std::is_same_v<T, double>)
    {
      target = detail::parse_double(it->second, 0);
    }
    else if constexpr (std::is_same_v<T, std::string>)
    {
      target = it->second;
    }
    else
    {
      target = detail::parse_integer<T>(it->second, 0);
    }
  }

  /// Keys not in `known`; callers reject them to catch typos.
  std::vector<std::string> unknown(std::set<std::string> const &known) const
  {
    std::vector<std::string> out;
    for (auto const &[k, v] : values_)
    {
      if (!known.count(k))
      {
        out.push_back(k);
      }
    }
    return out;
  }

private:
  std::map<std::string, std::string> values_;
};

inline std::set<std::string> known_keys()
{
  return {"kappa1", "kappa2", "kappa3", "kappa4", "kappa5", "kappa6", "kappa7", "sigma_max", "d_max", "groups",
          "local_epochs", "global_epochs", "model_size", "bandwidth", "rate", "platform_compute_cost",
          "platform_transmit_cost", "label_count", "channel_count",
          "owners", "gain_min", "gain_max", "data_cost_min", "data_cost_max", "compute_cost_min",
          "compute_cost_max", "energy_cost_min", "energy_cost_max", "channels_min", "channels_max",
          "episodes", "max_steps", "n_step", "target_period", "batch_size", "discount", "replay_capacity",
          "epsilon_start", "epsilon_end", "epsilon_anneal", "learning_rate", "huber_delta", "grad_clip",
          "updates_per_step", "train_owners", "validation_instances", "train_d_max_min", "train_d_max_max",
          "train_sigma_max_min", "train_sigma_max_max",
          "embed_dim", "gcn_layers", "lattice_groups", "lattice_units", "channel_scale", "gain_scale",
          "fed_learning_rate", "fed_batch_size", "fed_local_epochs", "fed_global_rounds", "fed_sampled_workers",
          "fed_workers", "fed_seeds", "fed_sizes", "fed_labels_per_worker", "fed_loss", "task_radius",
          "task_spread", "task_test_per_label", "fit_restarts",
          "instances", "trials"};
}

inline void apply(KeyValues const &kv, MarketConfig &c)
{
  kv.read("kappa1", c.kappa1);
  kv.read("kappa2", c.kappa2);
  kv.read("kappa3", c.kappa3);
  kv.read("kappa4", c.kappa4);
  kv.read("kappa5", c.kappa5);
  kv.read("kappa6", c.kappa6);
  kv.read("kappa7", c.kappa7);
  kv.read("sigma_max", c.sigma_max);
  kv.read("d_max", c.d_max);
  kv.read("groups", c.groups);
  kv.read("local_epochs", c.local_epochs);
  kv.read("global_epochs", c.global_epochs);
  kv.read("model_size", c.model_size);
  kv.read("bandwidth", c.bandwidth);
  kv.read("rate", c.rate);
  kv.read("platform_compute_cost", c.platform_compute_cost);
  kv.read("platform_transmit_cost", c.platform_transmit_cost);
  kv.read("label_count", c.label_count);
  kv.read("channel_count", c.channel_count);
  c.validate();
}

inline void apply(KeyValues const &kv, experiments::ScenarioConfig &s)
{
  kv.read("owners", s.owners);
  kv.read("gain_min", s.gain_min);
  kv.read("gain_max", s.gain_max);
  kv.read("data_cost_min", s.data_cost_min);
  kv.read("data_cost_max", s.data_cost_max);
  kv.read("compute_cost_min", s.compute_cost_min);
  kv.read("compute_cost_max", s.compute_cost_max);
  kv.read("energy_cost_min", s.energy_cost_min);
  kv.read("energy_cost_max", s.energy_cost_max);
  kv.read("channels_min", s.channels_min);
  kv.read("channels_max", s.channels_max);
}

inline void apply(KeyValues const &kv, training::TrainConfig &t)
{
  kv.read("episodes", t.episodes);
  kv.read("max_steps", t.max_steps);
  kv.read("n_step", t.n_step);
  kv.read("target_period", t.target_period);
  kv.read("batch_size", t.batch_size);
  kv.read("discount", t.discount);
  kv.read("replay_capacity", t.replay_capacity);
  kv.read("epsilon_start", t.epsilon_start);
  kv.read("epsilon_end", t.epsilon_end);
  kv.read("epsilon_anneal", t.epsilon_anneal);
  kv.read("learning_rate", t.learning_rate);
  kv.read("huber_delta", t.huber_delta);
  kv.read("grad_clip", t.grad_clip);
  kv.read("updates_per_step", t.updates_per_step);
  t.validate();
}

inline void apply(KeyValues const &kv, drla::DrlaHyper &h)
{
  kv.read("embed_dim", h.embed_dim);
  kv.read("gcn_layers", h.gcn_layers);
  kv.read("lattice_groups", h.lattice_groups);
  kv.read("lattice_units", h.lattice_units);
  kv.read("channel_scale", h.channel_scale);
  kv.read("gain_scale", h.gain_scale);
  h.validate();
}

/// Comma-separated integers, e.g. "20,50,100".
inline std::vector<int> parse_int_list(std::string const &s)
{
  std::vector<int>  out;
  std::stringstream in(s);
  for (std::string t; std::getline(in, t, ',');)
  {
    out.push_back(detail::parse_integer<int>(detail::trim(t), 0));
  }
  return out;
}

inline std::vector<double> parse_double_list(std::string const &s)
{
  std::vector<double> out;
  std::stringstream   in(s);
  for (std::string t; std::getline(in, t, ',');)
  {
    out.push_back(detail::parse_double(detail::trim(t), 0));
  }
  return out;
}

inline void apply(KeyValues const &kv, fedsim::GridConfig &g)
{
  kv.read("fed_learning_rate", g.fed.learning_rate);
  kv.read("fed_batch_size", g.fed.batch_size);
  kv.read("fed_local_epochs", g.fed.local_epochs);
  kv.read("fed_global_rounds", g.fed.global_rounds);
  kv.read("fed_sampled_workers", g.fed.sampled_workers);
  kv.read("fed_workers", g.workers);
  kv.read("fed_seeds", g.seeds);
  if (kv.has("fed_sizes"))
  {
    std::string s;
    kv.read("fed_sizes", s);
    g.total_sizes = parse_int_list(s);
  }
  if (kv.has("fed_labels_per_worker"))
  {
    std::string s;
    kv.read("fed_labels_per_worker", s);
    g.labels_per_worker = parse_int_list(s);
  }
  if (kv.has("fed_loss"))
  {
    std::string s;
    kv.read("fed_loss", s);
    if (s == "cross_entropy")
    {
      g.fed.loss = fedsim::FedConfig::Loss::cross_entropy;
    }
    else if (s == "squared_error")
    {
      g.fed.loss = fedsim::FedConfig::Loss::squared_error;
    }
    else
    {
      throw InvalidInput("fed_loss must be cross_entropy or squared_error");
    }
  }
}

}  // namespace fedauction::io

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

// Double deep Q-learning for the learned auction: epsilon-greedy episodes
// over feasible owners, n-step returns, uniform experience replay and a
// periodically synchronised target network.

#include <cmath>
#include <cstdint>
#include <deque>
#include <functional>
#include <limits>
#include <memory>
#include <numeric>
#include <optional>
#include <ostream>
#include <random>
#include <span>
#include <unordered_map>
#include <vector>

#include "fedauction/conflict_graph.hpp"
#include "fedauction/drla.hpp"
#include "fedauction/errors.hpp"
#include "fedauction/exact_oracle.hpp"
#include "fedauction/market_model.hpp"
#include "fedauction/nn_core.hpp"

namespace fedauction::training {

using nn::Matrix;

struct TrainConfig
{
  int           episodes        = 500;
  int           max_steps       = 0;  // 0: one step per owner
  int           n_step          = 2;
  int           target_period   = 10;  // episodes between target syncs
  int           batch_size      = 128;
  double        discount        = 0.99;
  std::size_t   replay_capacity = 50000;
  double        epsilon_start   = 0.9;
  double        epsilon_end     = 0.05;
  int           epsilon_anneal  = 0;  // episodes; 0: all of them
  double        learning_rate   = 1e-3;
  double        huber_delta     = 1.0;
  double        grad_clip       = 10.0;  // global norm; 0 disables
  int           updates_per_step = 4;
  std::uint64_t seed            = 1;

  void validate() const
  {
    if (episodes < 1 || n_step < 1 || target_period < 1 || batch_size < 1 || updates_per_step < 0)
    {
      throw InvalidInput("TrainConfig: counts must be positive");
    }
    if (!(discount > 0.0 && discount <= 1.0))
    {
      throw InvalidInput("TrainConfig: discount must lie in (0, 1]");
    }
    if (!(epsilon_start >= epsilon_end) || epsilon_end < 0.0 || epsilon_start > 1.0)
    {
      throw InvalidInput("TrainConfig: epsilon must decrease within [0, 1]");
    }
    if (replay_capacity == 0 || !(learning_rate > 0.0) || !(huber_delta > 0.0) || grad_clip < 0.0)
    {
      throw InvalidInput("TrainConfig: invalid optimiser settings");
    }
  }

  double epsilon(int episode) const
  {
    int const span = epsilon_anneal > 0 ? epsilon_anneal : episodes;
    double const t = span <= 1 ? 1.0 : std::min(1.0, static_cast<double>(episode) / (span - 1));
    return t >= 1.0 ? epsilon_end : epsilon_start + (epsilon_end - epsilon_start) * t;
  }
};

/// An owner population with its conflict graph, shared by the experiences
/// drawn from it.
struct Instance
{
  std::vector<DataOwner> owners;
  ConflictGraph          graph;
  Matrix                 norm_adj;

  explicit Instance(std::vector<DataOwner> o)
    : owners(std::move(o))
    , graph(ConflictGraph::build(owners))
    , norm_adj(graph.normalized_adjacency())
  {}
};

using InstancePtr = std::shared_ptr<Instance const>;

struct Experience
{
  InstancePtr         instance;
  OwnerSet            state;  // selected owners before the action
  OwnerId             action = 0;
  std::vector<double> step_rewards;
  double              reward = 0.0;  // sum of step_rewards
  OwnerSet            next_state;
  OwnerSet            next_actions;  // feasible owners after the last step
  bool                terminal = false;
};

/// S(V ∪ {a}) − S(V) with true costs.
inline double step_reward(std::span<const OwnerId> set, OwnerId action, std::span<const DataOwner> owners,
                          MarketConfig const &cfg)
{
  OwnerSet bigger(set.begin(), set.end());
  bigger.push_back(action);
  return market::social_welfare(bigger, owners, cfg) - market::social_welfare(set, owners, cfg);
}

/// Owners neither selected nor conflicting with a selected owner.
inline OwnerSet feasible_actions(std::span<const OwnerId> set, ConflictGraph const &graph)
{
  std::vector<char> out(graph.size(), 0);
  for (OwnerId i : set)
  {
    out[i] = 1;
    for (OwnerId k : graph.neighbours(i))
    {
      out[k] = 1;
    }
  }
  OwnerSet actions;
  for (OwnerId k = 0; k < graph.size(); ++k)
  {
    if (!out[k])
    {
      actions.push_back(k);
    }
  }
  return actions;
}

/// Candidate scores of every owner under the given parameters.
inline std::vector<double> instance_scores(Instance const &inst, drla::DrlaParams const &p)
{
  Matrix const          emb = drla::gcn_embed(inst.norm_adj, p);
  Eigen::VectorXd const q   = drla::q_scores({}, inst.owners, emb, p);
  return {q.data(), q.data() + q.size()};
}

inline OwnerId best_action(std::span<const OwnerId> actions, std::span<const double> scores)
{
  OwnerId best = actions.front();
  for (OwnerId k : actions)
  {
    if (scores[k] > scores[best])
    {
      best = k;
    }
  }
  return best;
}

/// One episode on one instance. Call step() until done(); each call returns
/// the experiences that became complete.
class Rollout
{
public:
  Rollout(InstancePtr inst, MarketConfig const &cfg, int n_step, int max_steps)
    : inst_(std::move(inst))
    , cfg_(cfg)
    , n_step_(n_step)
    , max_steps_(max_steps > 0 ? max_steps : static_cast<int>(inst_->owners.size()))
  {
    for (DataOwner const &o : inst_->owners)
    {
      viable_.push_back(o.bid <= oracle::standalone_bound(o, cfg_));
    }
    feasible_ = actions_after({});
    done_     = feasible_.empty();
  }

  bool done() const noexcept
  {
    return done_;
  }

  OwnerSet const &selected() const noexcept
  {
    return selected_;
  }

  std::vector<OwnerId> const &actions() const noexcept
  {
    return taken_;
  }

  std::vector<double> const &rewards() const noexcept
  {
    return rewards_;
  }

  std::vector<Experience> step(drla::DrlaParams const &p, double epsilon, std::mt19937_64 &rng)
  {
    if (done_)
    {
      throw InvalidInput("Rollout::step: episode already finished");
    }
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    OwnerId                                a;
    if (u01(rng) < epsilon)
    {
      std::uniform_int_distribution<std::size_t> pick(0, feasible_.size() - 1);
      a = feasible_[pick(rng)];
    }
    else
    {
      a = best_action(feasible_, instance_scores(*inst_, p));
    }
    double const r = step_reward(selected_, a, inst_->owners, cfg_);
    states_.push_back(selected_);
    taken_.push_back(a);
    rewards_.push_back(r);
    selected_.push_back(a);
    feasible_ = actions_after(selected_);

    std::vector<Experience> out;
    done_ = r < 0.0 || feasible_.empty() || static_cast<int>(taken_.size()) >= max_steps_;
    if (done_)
    {
      while (emitted_ < taken_.size())
      {
        out.push_back(make(emitted_, taken_.size(), true));
        ++emitted_;
      }
    }
    else if (taken_.size() >= static_cast<std::size_t>(n_step_))
    {
      out.push_back(make(emitted_, emitted_ + static_cast<std::size_t>(n_step_), false));
      ++emitted_;
    }
    return out;
  }

private:
  // owners whose bid exceeds their standalone utility can only end an
  // episode at a loss, so they are never proposed
  OwnerSet actions_after(std::span<const OwnerId> set) const
  {
    OwnerSet out = feasible_actions(set, inst_->graph);
    std::erase_if(out, [this](OwnerId k) { return !viable_[k]; });
    return out;
  }

  Experience make(std::size_t from, std::size_t to, bool terminal) const
  {
    Experience e;
    e.instance = inst_;
    e.state    = states_[from];
    e.action   = taken_[from];
    e.step_rewards.assign(rewards_.begin() + static_cast<std::ptrdiff_t>(from),
                          rewards_.begin() + static_cast<std::ptrdiff_t>(to));
    e.reward     = std::accumulate(e.step_rewards.begin(), e.step_rewards.end(), 0.0);
    e.next_state = to < states_.size() ? states_[to] : selected_;
    e.terminal   = terminal;
    if (!terminal)
    {
      e.next_actions = feasible_;
    }
    return e;
  }

  InstancePtr            inst_;
  MarketConfig           cfg_;
  int                    n_step_;
  int                    max_steps_;
  OwnerSet               selected_;
  OwnerSet               feasible_;
  std::vector<char>      viable_;
  std::vector<OwnerSet>  states_;
  std::vector<OwnerId>   taken_;
  std::vector<double>    rewards_;
  std::size_t            emitted_ = 0;
  bool                   done_    = false;
};

struct Trajectory
{
  std::vector<OwnerId>    actions;
  std::vector<double>     rewards;
  OwnerSet                selected;
  std::vector<Experience> experiences;
};

/// Full episode with fixed parameters.
inline Trajectory episode_rollout(InstancePtr inst, drla::DrlaParams const &p, double epsilon,
                                  std::mt19937_64 &rng, MarketConfig const &cfg, int n_step = 2,
                                  int max_steps = 0)
{
  Rollout    r(std::move(inst), cfg, n_step, max_steps);
  Trajectory t;
  while (!r.done())
  {
    for (auto &e : r.step(p, epsilon, rng))
    {
      t.experiences.push_back(std::move(e));
    }
  }
  t.actions  = r.actions();
  t.rewards  = r.rewards();
  t.selected = r.selected();
  return t;
}

/// R + λ^n · Q_target(s', argmax over feasible a of Q_eval(s', a)).
inline double ddqn_target(double reward, bool terminal, std::span<const OwnerId> next_actions,
                          std::span<const double> eval_scores, std::span<const double> target_scores,
                          double discount, int n_step)
{
  if (terminal || next_actions.empty())
  {
    return reward;
  }
  OwnerId const a = best_action(next_actions, eval_scores);
  return reward + std::pow(discount, n_step) * target_scores[a];
}

inline double ddqn_target(Experience const &e, drla::DrlaParams const &eval, drla::DrlaParams const &target,
                          TrainConfig const &tc)
{
  if (e.terminal || e.next_actions.empty())
  {
    return e.reward;
  }
  return ddqn_target(e.reward, e.terminal, e.next_actions, instance_scores(*e.instance, eval),
                     instance_scores(*e.instance, target), tc.discount, tc.n_step);
}

/// One gradient step on a minibatch; returns the mean loss before the step.
inline double train_batch(std::span<Experience const *const> batch, drla::DrlaParams &eval,
                          drla::DrlaParams const &target, nn::AdamState &adam, TrainConfig const &tc)
{
  struct Cached
  {
    std::vector<double> eval, target;
  };
  std::unordered_map<Instance const *, Cached> scores;
  Matrix                                       y(static_cast<Eigen::Index>(batch.size()), 1);
  for (std::size_t b = 0; b < batch.size(); ++b)
  {
    Experience const &e = *batch[b];
    double            v = e.reward;
    if (!e.terminal && !e.next_actions.empty())
    {
      auto it = scores.find(e.instance.get());
      if (it == scores.end())
      {
        it = scores
               .emplace(e.instance.get(),
                        Cached{instance_scores(*e.instance, eval), instance_scores(*e.instance, target)})
               .first;
      }
      v = ddqn_target(e.reward, false, e.next_actions, it->second.eval, it->second.target, tc.discount,
                      tc.n_step);
    }
    y(static_cast<Eigen::Index>(b), 0) = v;
  }

  for (nn::Parameter *q : eval.all())
  {
    q->zero_grad();
  }
  nn::Tape                                      tape;
  drla::BoundParams                             bp(tape, eval);
  std::unordered_map<Instance const *, nn::Var> embeddings;
  std::vector<drla::ScoredRow>                  rows;
  rows.reserve(batch.size());
  for (Experience const *e : batch)
  {
    auto it = embeddings.find(e->instance.get());
    if (it == embeddings.end())
    {
      it = embeddings.emplace(e->instance.get(), drla::gcn_embed(tape, e->instance->norm_adj, bp)).first;
    }
    rows.push_back(drla::scored_row(tape, it->second, e->instance->owners, e->action, 0.0, eval.hyper));
  }
  nn::Var q    = drla::q_scores(tape, rows, bp);
  nn::Var diff = nn::sub(q, tape.constant(y));
  nn::Var loss = std::isinf(tc.huber_delta) ? nn::mean_all(nn::square(diff))
                                            : nn::mean_all(nn::huber(diff, tc.huber_delta));
  double const value = loss.scalar();
  if (!std::isfinite(value))
  {
    throw TrainingDiverged("training loss became non-finite");
  }
  tape.backward(loss);
  auto params = eval.all();
  if (tc.grad_clip > 0.0)
  {
    nn::clip_grad_norm(params, tc.grad_clip);
  }
  nn::adam_step(params, adam);
  return value;
}

/// Mean true welfare of the learned allocation over a validation set.
inline double validation_welfare(std::span<const InstancePtr> validation, drla::DrlaParams const &p,
                                 MarketConfig const &cfg)
{
  if (validation.empty())
  {
    return std::numeric_limits<double>::quiet_NaN();
  }
  double total = 0.0;
  for (auto const &inst : validation)
  {
    auto const q   = instance_scores(*inst, p);
    auto const set = drla::allocate(q, inst->graph);
    total += market::social_welfare(set, inst->owners, cfg);
  }
  return total / static_cast<double>(validation.size());
}

struct EpisodeLog
{
  int    episode               = 0;
  double validation_welfare    = 0.0;
  double loss                  = std::numeric_limits<double>::quiet_NaN();  // NaN before any update
  double epsilon               = 0.0;
  int    updates               = 0;
};

struct TrainResult
{
  drla::DrlaParams        params;  // after the last episode
  drla::DrlaParams        best;    // highest validation welfare after any update
  int                     best_episode = 0;
  double                  best_validation = -std::numeric_limits<double>::infinity();
  std::vector<EpisodeLog> log;
  long                    gradient_steps = 0;
};

using InstanceSampler = std::function<std::vector<DataOwner>(std::mt19937_64 &)>;

inline TrainResult train(InstanceSampler const &sample, std::span<const std::vector<DataOwner>> validation,
                         MarketConfig const &cfg, TrainConfig const &tc, drla::DrlaParams initial,
                         std::function<void(EpisodeLog const &)> const &on_episode = {})
{
  tc.validate();
  cfg.validate();
  std::mt19937_64 rng(tc.seed);

  std::vector<InstancePtr> val;
  for (auto const &v : validation)
  {
    val.push_back(std::make_shared<Instance const>(v));
  }

  TrainResult res;
  res.params             = std::move(initial);
  res.best                = res.params;
  drla::DrlaParams target = res.params;
  nn::AdamState    adam;
  adam.lr = tc.learning_rate;
  std::deque<Experience> replay;

  for (int k = 0; k < tc.episodes; ++k)
  {
    double const eps  = tc.epsilon(k);
    auto         inst = std::make_shared<Instance const>(sample(rng));
    Rollout      roll(inst, cfg, tc.n_step, tc.max_steps);
    double       loss_sum = 0.0;
    int          updates  = 0;
    while (!roll.done())
    {
      for (auto &e : roll.step(res.params, eps, rng))
      {
        replay.push_back(std::move(e));
        if (replay.size() > tc.replay_capacity)
        {
          replay.pop_front();
        }
      }
      if (replay.size() < static_cast<std::size_t>(tc.batch_size))
      {
        continue;
      }
      for (int u = 0; u < tc.updates_per_step; ++u)
      {
        std::uniform_int_distribution<std::size_t> pick(0, replay.size() - 1);
        std::vector<Experience const *>            batch;
        batch.reserve(static_cast<std::size_t>(tc.batch_size));
        for (int b = 0; b < tc.batch_size; ++b)
        {
          batch.push_back(&replay[pick(rng)]);
        }
        loss_sum += train_batch(batch, res.params, target, adam, tc);
        ++updates;
        ++res.gradient_steps;
      }
    }
    if ((k + 1) % tc.target_period == 0)
    {
      target = res.params;
    }
    EpisodeLog row;
    row.episode            = k + 1;
    row.validation_welfare = validation_welfare(val, res.params, cfg);
    row.loss               = updates > 0 ? loss_sum / updates : std::numeric_limits<double>::quiet_NaN();
    row.epsilon            = eps;
    row.updates            = updates;
    res.log.push_back(row);
    if (res.gradient_steps > 0 && row.validation_welfare > res.best_validation)
    {
      res.best            = res.params;
      res.best_episode    = row.episode;
      res.best_validation = row.validation_welfare;
    }
    if (on_episode)
    {
      on_episode(row);
    }
  }
  return res;
}

inline void write_log_csv(std::ostream &os, std::span<const EpisodeLog> log)
{
  os << "episode,mean_validation_welfare,loss,epsilon\n";
  os.precision(10);
  for (auto const &r : log)
  {
    os << r.episode << ',' << r.validation_welfare << ',' << r.loss << ',' << r.epsilon << '\n';
  }
}

}  // namespace fedauction::training

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

// Learned auction: graph-convolution embeddings of the conflict graph, a
// per-owner score that is affine and strictly decreasing in the bid, a
// monotone lattice network over (data size, EMD), greedy allocation by score
// and critical-bid payments.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "fedauction/conflict_graph.hpp"
#include "fedauction/errors.hpp"
#include "fedauction/exact_oracle.hpp"
#include "fedauction/market_model.hpp"
#include "fedauction/nn_core.hpp"

namespace fedauction::drla {

using nn::Matrix;

inline constexpr char const *kParamsFormat  = "fedauction-drla-params";
inline constexpr int         kParamsVersion = 1;

struct DrlaHyper
{
  int    embed_dim     = 64;
  int    gcn_layers    = 2;
  int    lattice_groups = 8;  // J
  int    lattice_units  = 8;  // K: units per group and hidden width per unit
  double channel_scale  = 0.1;
  double gain_scale     = 1e-7;

  int feature_dim() const noexcept
  {
    return 2 * embed_dim + 3;
  }

  void validate() const
  {
    if (embed_dim < 1 || gcn_layers < 1 || lattice_groups < 1 || lattice_units < 1)
    {
      throw InvalidInput("DrlaHyper: dimensions must be positive");
    }
    if (!(channel_scale > 0.0) || !(gain_scale > 0.0))
    {
      throw InvalidInput("DrlaHyper: feature scales must be positive");
    }
  }

  bool operator==(DrlaHyper const &) const = default;
};

struct DrlaParams
{
  DrlaHyper                  hyper;
  std::vector<nn::Parameter> gcn;       // embed_dim x embed_dim per layer
  nn::Parameter              q_hidden;  // feature_dim x feature_dim
  nn::Parameter              q_out;     // feature_dim x 1
  nn::Parameter              bid_log;   // 1x1, bid coefficient exp(.)
  nn::Parameter              gain_log;  // 1x1, lattice coefficient exp(.)
  nn::Parameter              lat_w1;    // 2 x (J*K*K), log weights
  nn::Parameter              lat_b1;    // 1 x (J*K*K)
  nn::Parameter              lat_w2;    // 1 x (J*K*K), log weights
  nn::Parameter              lat_b2;    // 1 x (J*K)

  std::vector<nn::Parameter *> all()
  {
    std::vector<nn::Parameter *> out;
    for (auto &p : gcn)
    {
      out.push_back(&p);
    }
    for (nn::Parameter *p : {&q_hidden, &q_out, &bid_log, &gain_log, &lat_w1, &lat_b1, &lat_w2, &lat_b2})
    {
      out.push_back(p);
    }
    return out;
  }

  std::vector<nn::Parameter const *> all() const
  {
    std::vector<nn::Parameter const *> out;
    for (auto &p : gcn)
    {
      out.push_back(&p);
    }
    for (nn::Parameter const *p :
         {&q_hidden, &q_out, &bid_log, &gain_log, &lat_w1, &lat_b1, &lat_w2, &lat_b2})
    {
      out.push_back(p);
    }
    return out;
  }

  double bid_coefficient() const
  {
    return std::exp(bid_log.value(0, 0));
  }

  double gain_coefficient() const
  {
    return std::exp(gain_log.value(0, 0));
  }

  /// Zero-filled parameters of the right shapes.
  static DrlaParams zeros(DrlaHyper const &h)
  {
    h.validate();
    DrlaParams   p;
    p.hyper      = h;
    int const w  = h.embed_dim;
    int const f  = h.feature_dim();
    int const jk = h.lattice_groups * h.lattice_units;
    for (int l = 0; l < h.gcn_layers; ++l)
    {
      p.gcn.emplace_back("gcn_" + std::to_string(l), Matrix::Zero(w, w));
    }
    p.q_hidden = nn::Parameter("q_hidden", Matrix::Zero(f, f));
    p.q_out    = nn::Parameter("q_out", Matrix::Zero(f, 1));
    p.bid_log  = nn::Parameter("bid_log", Matrix::Zero(1, 1));
    p.gain_log = nn::Parameter("gain_log", Matrix::Zero(1, 1));
    p.lat_w1   = nn::Parameter("lattice_w1", Matrix::Zero(2, jk * h.lattice_units));
    p.lat_b1   = nn::Parameter("lattice_b1", Matrix::Zero(1, jk * h.lattice_units));
    p.lat_w2   = nn::Parameter("lattice_w2", Matrix::Zero(1, jk * h.lattice_units));
    p.lat_b2   = nn::Parameter("lattice_b2", Matrix::Zero(1, jk));
    return p;
  }

  /// Random initialisation; the bid and lattice coefficients start at 1.
  static DrlaParams init(DrlaHyper const &h, std::uint64_t seed)
  {
    DrlaParams                       p = zeros(h);
    std::mt19937_64                  rng(seed);
    std::normal_distribution<double> n01(0.0, 1.0);
    auto fill = [&](Matrix &m, double mean, double sd) {
      m = m.unaryExpr([&](double) { return mean + sd * n01(rng); });
    };
    for (auto &g : p.gcn)
    {
      fill(g.value, 0.0, 1.0 / std::sqrt(static_cast<double>(h.embed_dim)));
    }
    double const f = static_cast<double>(h.feature_dim());
    fill(p.q_hidden.value, 0.0, 1.0 / std::sqrt(f));
    fill(p.q_out.value, 0.0, 0.1 / std::sqrt(f));
    fill(p.lat_w1.value, -1.0, 0.3);
    fill(p.lat_b1.value, 0.0, 0.1);
    fill(p.lat_w2.value, -1.0, 0.3);
    fill(p.lat_b2.value, 0.0, 0.1);
    return p;
  }
};

// --------------------------------------------------------------------------
// Serialization

inline nlohmann::json to_json(DrlaParams const &p)
{
  auto const list = p.all();
  return {{"format", kParamsFormat},
          {"version", kParamsVersion},
          {"hyper",
           {{"embed_dim", p.hyper.embed_dim},
            {"gcn_layers", p.hyper.gcn_layers},
            {"lattice_groups", p.hyper.lattice_groups},
            {"lattice_units", p.hyper.lattice_units},
            {"channel_scale", p.hyper.channel_scale},
            {"gain_scale", p.hyper.gain_scale}}},
          {"params", nn::to_json(std::span<nn::Parameter const *const>(list))}};
}

inline DrlaParams params_from_json(nlohmann::json const &j)
{
  try
  {
    if (j.at("format").get<std::string>() != kParamsFormat)
    {
      throw InvalidInput("DRLA params: unknown format tag");
    }
    if (j.at("version").get<int>() != kParamsVersion)
    {
      throw InvalidInput("DRLA params: unsupported version " +
                         std::to_string(j.at("version").get<int>()));
    }
    auto const &h = j.at("hyper");
    DrlaHyper   hyper;
    hyper.embed_dim      = h.at("embed_dim").get<int>();
    hyper.gcn_layers     = h.at("gcn_layers").get<int>();
    hyper.lattice_groups = h.at("lattice_groups").get<int>();
    hyper.lattice_units  = h.at("lattice_units").get<int>();
    hyper.channel_scale  = h.at("channel_scale").get<double>();
    hyper.gain_scale     = h.at("gain_scale").get<double>();
    DrlaParams p         = DrlaParams::zeros(hyper);
    auto       list      = p.all();
    nn::from_json(j.at("params"), std::span<nn::Parameter *const>(list));
    for (nn::Parameter const *q : list)
    {
      if (!q->value.allFinite())
      {
        throw InvalidInput("DRLA params: non-finite value in '" + q->name + "'");
      }
    }
    return p;
  }
  catch (nlohmann::json::exception const &e)
  {
    throw InvalidInput(std::string("DRLA params: malformed record: ") + e.what());
  }
}

inline void save_params(DrlaParams const &p, std::string const &path)
{
  std::ofstream f(path);
  if (!f)
  {
    throw InvalidInput("cannot write " + path);
  }
  f << to_json(p).dump() << '\n';
}

inline DrlaParams load_params(std::string const &path)
{
  std::ifstream f(path);
  if (!f)
  {
    throw InvalidInput("cannot read " + path);
  }
  nlohmann::json j;
  try
  {
    f >> j;
  }
  catch (nlohmann::json::exception const &e)
  {
    throw InvalidInput("DRLA params: " + path + " is not valid JSON: " + e.what());
  }
  return params_from_json(j);
}

// --------------------------------------------------------------------------
// Inference

/// Per owner [node embedding | graph embedding]; input features are all ones.
inline Matrix gcn_embed(Matrix const &norm_adj, DrlaParams const &p)
{
  auto const n = norm_adj.rows();
  auto const w = p.hyper.embed_dim;
  Matrix     h = Matrix::Ones(n, w);
  for (auto const &layer : p.gcn)
  {
    h = (norm_adj * h * layer.value).cwiseMax(0.0);
  }
  Matrix out(n, 2 * w);
  out.leftCols(w) = h;
  if (n > 0)
  {
    out.rightCols(w).rowwise() = h.colwise().sum();
  }
  return out;
}

inline Matrix gcn_embed(ConflictGraph const &graph, DrlaParams const &p)
{
  return gcn_embed(graph.normalized_adjacency(), p);
}

namespace detail {

/// Column index sets of the K units inside each of the J groups.
inline std::vector<std::vector<Eigen::Index>> lattice_groups(DrlaHyper const &h)
{
  std::vector<std::vector<Eigen::Index>> groups(static_cast<std::size_t>(h.lattice_groups));
  for (int j = 0; j < h.lattice_groups; ++j)
  {
    for (int k = 0; k < h.lattice_units; ++k)
    {
      groups[static_cast<std::size_t>(j)].push_back(j * h.lattice_units + k);
    }
  }
  return groups;
}

/// Sums each unit's K hidden columns: (J*K*K) x (J*K).
inline Matrix unit_summer(DrlaHyper const &h)
{
  int const units = h.lattice_groups * h.lattice_units;
  Matrix    s     = Matrix::Zero(units * h.lattice_units, units);
  for (int u = 0; u < units; ++u)
  {
    s.block(u * h.lattice_units, u, h.lattice_units, 1).setOnes();
  }
  return s;
}

}  // namespace detail

/// Lattice network on rows of [d, -σ]; returns one value per row.
inline Eigen::VectorXd monotonic_g(Matrix const &inputs, DrlaParams const &p)
{
  DrlaHyper const &h      = p.hyper;
  Matrix           hidden = inputs * p.lat_w1.value.array().exp().matrix();
  hidden.rowwise() += p.lat_b1.value.row(0);
  hidden = hidden.cwiseMax(0.0);
  hidden.array().rowwise() *= p.lat_w2.value.row(0).array().exp();
  Matrix units = hidden * detail::unit_summer(h);
  units.rowwise() += p.lat_b2.value.row(0);
  units = units.cwiseMax(0.0);

  Eigen::VectorXd out(inputs.rows());
  for (Eigen::Index r = 0; r < inputs.rows(); ++r)
  {
    double best = -std::numeric_limits<double>::infinity();
    for (int j = 0; j < h.lattice_groups; ++j)
    {
      best = std::max(best, units.row(r).segment(j * h.lattice_units, h.lattice_units).minCoeff());
    }
    out(r) = best;
  }
  return out;
}

inline double monotonic_g(double data_size, double emd, DrlaParams const &p)
{
  Matrix x(1, 2);
  x << data_size, -emd;
  return monotonic_g(x, p)(0);
}

/// Row i: [embedding_i, s_i, scaled C_i, scaled h_i].
inline Matrix owner_features(std::span<const DataOwner> owners, Matrix const &embedding,
                             std::span<const char> state, DrlaHyper const &h)
{
  auto const n = static_cast<Eigen::Index>(owners.size());
  Matrix     f(n, h.feature_dim());
  f.leftCols(2 * h.embed_dim) = embedding;
  for (Eigen::Index i = 0; i < n; ++i)
  {
    auto const &o                   = owners[static_cast<std::size_t>(i)];
    f(i, 2 * h.embed_dim)           = state.empty() ? 0.0 : static_cast<double>(state[static_cast<std::size_t>(i)]);
    f(i, 2 * h.embed_dim + 1)       = h.channel_scale * static_cast<double>(o.channels.size());
    f(i, 2 * h.embed_dim + 2)       = h.gain_scale * o.channel_gain;
  }
  return f;
}

inline Matrix lattice_inputs(std::span<const DataOwner> owners)
{
  Matrix x(static_cast<Eigen::Index>(owners.size()), 2);
  for (std::size_t i = 0; i < owners.size(); ++i)
  {
    x(static_cast<Eigen::Index>(i), 0) = owners[i].data_size;
    x(static_cast<Eigen::Index>(i), 1) = -owners[i].emd;
  }
  return x;
}

/// Bid-independent part of each owner's score, for a given state.
struct ScoreContext
{
  Eigen::VectorXd base;  // branch + lattice term
  Eigen::VectorXd gain;  // lattice value per owner
  double          bid_coefficient = 1.0;

  double score(OwnerId i, double bid) const
  {
    return base(static_cast<Eigen::Index>(i)) - bid * bid_coefficient;
  }
};

inline ScoreContext score_context(std::span<const DataOwner> owners, Matrix const &embedding,
                                  std::span<const char> state, DrlaParams const &p)
{
  ScoreContext ctx;
  ctx.bid_coefficient = p.bid_coefficient();
  if (owners.empty())
  {
    return ctx;
  }
  Matrix const f      = owner_features(owners, embedding, state, p.hyper);
  Matrix const branch = (f * p.q_hidden.value).cwiseMax(0.0) * p.q_out.value;
  ctx.gain            = monotonic_g(lattice_inputs(owners), p);
  ctx.base            = branch.col(0) + p.gain_coefficient() * ctx.gain;
  return ctx;
}

/// Q_i for every owner under state s (s_i = 1 marks a selected owner).
inline Eigen::VectorXd q_scores(std::span<const char> state, std::span<const DataOwner> owners,
                                Matrix const &embedding, DrlaParams const &p)
{
  ScoreContext const ctx = score_context(owners, embedding, state, p);
  Eigen::VectorXd    q(static_cast<Eigen::Index>(owners.size()));
  for (OwnerId i = 0; i < owners.size(); ++i)
  {
    q(static_cast<Eigen::Index>(i)) = ctx.score(i, owners[i].bid);
  }
  return q;
}

/// Greedy selection by score among owners that are neither selected nor in
/// conflict with a selected owner. Candidates are always unselected, so their
/// score does not depend on the rest of the state. Ties go to the smaller id.
inline OwnerSet allocate(std::span<const double> scores, ConflictGraph const &graph,
                         std::optional<OwnerId> skip = std::nullopt)
{
  std::size_t const n = scores.size();
  std::vector<char> live(n, 1);
  if (skip)
  {
    live[*skip] = 0;
  }
  OwnerSet picked;
  for (;;)
  {
    std::optional<OwnerId> best;
    for (OwnerId k = 0; k < n; ++k)
    {
      if (live[k] && (!best || scores[k] > scores[*best]))
      {
        best = k;
      }
    }
    if (!best || !(scores[*best] > 0.0))
    {
      break;
    }
    picked.push_back(*best);
    live[*best] = 0;
    for (OwnerId k : graph.neighbours(*best))
    {
      live[k] = 0;
    }
  }
  return picked;
}

inline std::vector<double> candidate_scores(std::span<const DataOwner> owners, ConflictGraph const &graph,
                                            DrlaParams const &p)
{
  Matrix const          emb = gcn_embed(graph, p);
  Eigen::VectorXd const q   = q_scores({}, owners, emb, p);
  return {q.data(), q.data() + q.size()};
}

/// Winners in selection order.
inline OwnerSet allocate(std::span<const DataOwner> owners, ConflictGraph const &graph,
                         DrlaParams const &p)
{
  std::vector<double> const q = candidate_scores(owners, graph, p);
  return allocate(q, graph);
}

/// Score that winner i must beat: the score of the first owner picked in the
/// replay without i that conflicts with i, or zero if the replay stops first.
inline double critical_score(std::span<const double> scores, ConflictGraph const &graph, OwnerId i)
{
  for (OwnerId k : allocate(scores, graph, i))
  {
    if (graph.adjacent(i, k))
    {
      return scores[k];
    }
  }
  return 0.0;
}

/// Largest bid at which i still wins, from the bid-affine score.
inline double critical_payment_drla(ScoreContext const &ctx, std::span<const double> scores,
                                    ConflictGraph const &graph, OwnerId i)
{
  double const target = critical_score(scores, graph, i);
  return (ctx.base(static_cast<Eigen::Index>(i)) - target) / ctx.bid_coefficient;
}

inline double critical_payment_drla(std::span<const DataOwner> owners, ConflictGraph const &graph,
                                    DrlaParams const &p, OwnerId i)
{
  if (i >= owners.size())
  {
    throw InvalidInput("critical_payment_drla: owner index out of range");
  }
  Matrix const              emb = gcn_embed(graph, p);
  ScoreContext const        ctx = score_context(owners, emb, {}, p);
  std::vector<double> const q   = candidate_scores(owners, graph, p);
  return critical_payment_drla(ctx, q, graph, i);
}

inline AuctionOutcome run_drla(std::span<const DataOwner> owners, MarketConfig const &cfg,
                               ConflictGraph const &graph, DrlaParams const &p,
                               bool with_payments = true)
{
  AuctionOutcome out;
  out.payments.assign(owners.size(), 0.0);
  if (owners.empty())
  {
    return out;
  }
  Matrix const       emb = gcn_embed(graph, p);
  ScoreContext const ctx = score_context(owners, emb, {}, p);
  std::vector<double> q(owners.size());
  for (OwnerId i = 0; i < owners.size(); ++i)
  {
    q[i] = ctx.score(i, owners[i].bid);
  }
  out.winners = allocate(q, graph);
  if (with_payments)
  {
    for (OwnerId i : out.winners)
    {
      out.payments[i] = critical_payment_drla(ctx, q, graph, i);
    }
  }
  std::sort(out.winners.begin(), out.winners.end());
  out.social_welfare = market::social_welfare(out.winners, owners, cfg);
  return out;
}

inline AuctionOutcome run_drla(std::span<const DataOwner> owners, MarketConfig const &cfg,
                               DrlaParams const &p, bool with_payments = true)
{
  ConflictGraph const graph = ConflictGraph::build(owners);
  return run_drla(owners, cfg, graph, p, with_payments);
}

/// Payment of winner i by bisecting over i's bid with the allocation re-run.
inline std::optional<double> critical_payment_bisection(std::span<const DataOwner> owners,
                                                        MarketConfig const &cfg, DrlaParams const &p,
                                                        OwnerId i,
                                                        oracle::BisectionOptions const &opt = {})
{
  oracle::Mechanism mech = [&cfg, &p](std::span<const DataOwner> o) {
    return run_drla(o, cfg, p, false);
  };
  return oracle::critical_bid_bisection(mech, owners, i, cfg, opt);
}

// --------------------------------------------------------------------------
// Differentiable forward pass for training

/// Parameters bound as leaves of one tape.
struct BoundParams
{
  std::vector<nn::Var> gcn;
  nn::Var              q_hidden, q_out, bid_log, gain_log, lat_w1, lat_b1, lat_w2, lat_b2;
  nn::Var              unit_summer;
  DrlaHyper            hyper;

  BoundParams(nn::Tape &t, DrlaParams &p)
    : hyper(p.hyper)
  {
    for (auto &g : p.gcn)
    {
      gcn.push_back(t.parameter(g));
    }
    q_hidden    = t.parameter(p.q_hidden);
    q_out       = t.parameter(p.q_out);
    bid_log     = t.parameter(p.bid_log);
    gain_log    = t.parameter(p.gain_log);
    lat_w1      = t.parameter(p.lat_w1);
    lat_b1      = t.parameter(p.lat_b1);
    lat_w2      = t.parameter(p.lat_w2);
    lat_b2      = t.parameter(p.lat_b2);
    unit_summer = t.constant(detail::unit_summer(p.hyper));
  }
};

inline nn::Var gcn_embed(nn::Tape &t, Matrix const &norm_adj, BoundParams const &bp)
{
  auto const n   = norm_adj.rows();
  auto const w   = bp.hyper.embed_dim;
  nn::Var    adj = t.constant(norm_adj);
  nn::Var    h   = t.constant(Matrix::Ones(n, w));
  for (nn::Var layer : bp.gcn)
  {
    h = nn::relu(nn::matmul(nn::matmul(adj, h), layer));
  }
  nn::Var graph_sum = nn::sum_rows(h);
  nn::Var repeated  = nn::matmul(t.constant(Matrix::Ones(n, 1)), graph_sum);
  return nn::concat_cols({h, repeated});
}

inline nn::Var monotonic_g(nn::Tape &t, Matrix const &inputs, BoundParams const &bp)
{
  nn::Var x      = t.constant(inputs);
  nn::Var hidden = nn::relu(nn::add_row(nn::matmul(x, nn::exp(bp.lat_w1)), bp.lat_b1));
  nn::Var units  = nn::matmul(nn::mul_row(hidden, nn::exp(bp.lat_w2)), bp.unit_summer);
  units          = nn::relu(nn::add_row(units, bp.lat_b2));
  nn::Var mins   = nn::min_over(units, detail::lattice_groups(bp.hyper));
  std::vector<std::vector<Eigen::Index>> all(1);
  for (int j = 0; j < bp.hyper.lattice_groups; ++j)
  {
    all[0].push_back(j);
  }
  return nn::max_over(mins, all);
}

/// One scored owner: its feature row (embedding row plus state/channel/gain)
/// as a tape node and its bid, data size and EMD.
struct ScoredRow
{
  nn::Var features;
  double  bid;
  double  data_size;
  double  emd;
};

inline ScoredRow scored_row(nn::Tape &t, nn::Var embedding, std::span<const DataOwner> owners,
                            OwnerId i, double state_bit, DrlaHyper const &h)
{
  DataOwner const &o = owners[i];
  Matrix           extra(1, 3);
  extra << state_bit, h.channel_scale * static_cast<double>(o.channels.size()), h.gain_scale * o.channel_gain;
  nn::Var row = nn::concat_cols({nn::row(embedding, static_cast<Eigen::Index>(i)), t.constant(extra)});
  return {row, o.bid, o.data_size, o.emd};
}

/// Scores of a batch of rows as a (B x 1) node.
inline nn::Var q_scores(nn::Tape &t, std::vector<ScoredRow> const &rows, BoundParams const &bp)
{
  std::vector<nn::Var> feats;
  auto const           b = static_cast<Eigen::Index>(rows.size());
  Matrix               bids(b, 1), lat(b, 2);
  for (Eigen::Index r = 0; r < b; ++r)
  {
    auto const &sr = rows[static_cast<std::size_t>(r)];
    feats.push_back(sr.features);
    bids(r, 0) = sr.bid;
    lat(r, 0)  = sr.data_size;
    lat(r, 1)  = -sr.emd;
  }
  nn::Var f      = nn::stack_rows(feats);
  nn::Var branch = nn::matmul(nn::relu(nn::matmul(f, bp.q_hidden)), bp.q_out);
  nn::Var bidt   = nn::scalar_mul(nn::exp(bp.bid_log), t.constant(bids));
  nn::Var gain   = nn::scalar_mul(nn::exp(bp.gain_log), monotonic_g(t, lat, bp));
  return nn::add(nn::sub(branch, bidt), gain);
}

}  // namespace fedauction::drla

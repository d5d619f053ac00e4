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

// Desk-scale federated averaging on Gaussian label clusters, used to produce
// (total data, EMD, accuracy) grids and to refit the data-quality curve.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <numeric>
#include <ostream>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fedauction/errors.hpp"
#include "fedauction/market_model.hpp"

namespace fedauction::fedsim {

using Matrix = Eigen::MatrixXd;

struct Dataset
{
  Matrix           features;  // n x dim
  std::vector<int> labels;

  std::size_t size() const noexcept
  {
    return labels.size();
  }
};

/// L isotropic Gaussian clusters with means evenly spaced on a circle.
struct SyntheticTask
{
  int    labels         = 10;
  double radius         = 4.0;
  double spread         = 1.0;
  int    test_per_label = 200;

  Matrix  means;  // labels x 2
  Dataset test;

  static SyntheticTask make(int labels, double radius, double spread, int test_per_label, std::uint64_t seed)
  {
    if (labels < 2 || !(radius > 0.0) || !(spread > 0.0) || test_per_label < 1)
    {
      throw InvalidInput("SyntheticTask: need >= 2 labels and positive radius, spread and test size");
    }
    SyntheticTask t;
    t.labels         = labels;
    t.radius         = radius;
    t.spread         = spread;
    t.test_per_label = test_per_label;
    t.means.resize(labels, 2);
    for (int l = 0; l < labels; ++l)
    {
      double const a = 2.0 * std::numbers::pi * l / labels;
      t.means(l, 0)  = radius * std::cos(a);
      t.means(l, 1)  = radius * std::sin(a);
    }
    std::mt19937_64  rng(seed);
    std::vector<int> counts(static_cast<std::size_t>(labels), test_per_label);
    t.test = t.draw(counts, rng);
    return t;
  }

  static SyntheticTask make(std::uint64_t seed)
  {
    return make(10, 4.0, 1.0, 200, seed);
  }

  int dim() const noexcept
  {
    return 2;
  }

  /// counts[l] samples of label l, in label order.
  Dataset draw(std::span<const int> counts, std::mt19937_64 &rng) const
  {
    std::normal_distribution<double> n01(0.0, 1.0);
    int const total = std::accumulate(counts.begin(), counts.end(), 0);
    Dataset   d;
    d.features.resize(total, 2);
    d.labels.reserve(static_cast<std::size_t>(total));
    Eigen::Index r = 0;
    for (std::size_t l = 0; l < counts.size(); ++l)
    {
      for (int c = 0; c < counts[l]; ++c, ++r)
      {
        d.features(r, 0) = means(static_cast<Eigen::Index>(l), 0) + spread * n01(rng);
        d.features(r, 1) = means(static_cast<Eigen::Index>(l), 1) + spread * n01(rng);
        d.labels.push_back(static_cast<int>(l));
      }
    }
    return d;
  }
};

struct FedConfig
{
  double        learning_rate  = 0.01;  // η
  int           batch_size     = 10;    // δ_B
  int           local_epochs   = 5;     // δ_l
  int           global_rounds  = 10;    // δ_g
  int           sampled_workers = 0;    // δ_s; 0 samples every worker
  std::uint64_t seed           = 1;

  enum class Loss
  {
    cross_entropy,
    squared_error
  } loss = Loss::cross_entropy;

  void validate(std::size_t workers) const
  {
    if (!(learning_rate >= 0.0) || batch_size < 1 || local_epochs < 0 || global_rounds < 0)
    {
      throw InvalidInput("FedConfig: invalid optimiser settings");
    }
    if (sampled_workers < 0 || static_cast<std::size_t>(sampled_workers) > workers)
    {
      throw InvalidInput("FedConfig: sampled workers exceed the worker count");
    }
  }
};

/// Linear classifier: weights (dim + 1) x labels, last row the bias.
struct Model
{
  Matrix weights;

  static Model zeros(int dim, int labels)
  {
    return {Matrix::Zero(dim + 1, labels)};
  }

  Matrix logits(Matrix const &x) const
  {
    auto const d = weights.rows() - 1;
    Matrix     z = x * weights.topRows(d);
    z.rowwise() += weights.row(d);
    return z;
  }

  int predict(Eigen::RowVectorXd const &x) const
  {
    Eigen::Index best;
    logits(x).row(0).maxCoeff(&best);
    return static_cast<int>(best);
  }
};

inline Matrix one_hot(std::span<const int> labels, Eigen::Index classes)
{
  Matrix y = Matrix::Zero(static_cast<Eigen::Index>(labels.size()), classes);
  for (std::size_t r = 0; r < labels.size(); ++r)
  {
    y(static_cast<Eigen::Index>(r), labels[r]) = 1.0;
  }
  return y;
}

inline Matrix softmax_rows(Matrix z)
{
  for (Eigen::Index r = 0; r < z.rows(); ++r)
  {
    z.row(r).array() -= z.row(r).maxCoeff();
    z.row(r) = z.row(r).array().exp().matrix();
    z.row(r) /= z.row(r).sum();
  }
  return z;
}

/// Mean loss over a batch.
inline double loss_value(Model const &m, Matrix const &x, std::span<const int> labels, FedConfig::Loss kind)
{
  Matrix const z = m.logits(x);
  Matrix const y = one_hot(labels, z.cols());
  auto const   n = static_cast<double>(x.rows());
  if (kind == FedConfig::Loss::squared_error)
  {
    return 0.5 * (z - y).squaredNorm() / n;
  }
  Matrix const p = softmax_rows(z);
  double       s = 0.0;
  for (Eigen::Index r = 0; r < x.rows(); ++r)
  {
    s -= std::log(std::max(p(r, labels[static_cast<std::size_t>(r)]), 1e-300));
  }
  return s / n;
}

/// Gradient of the mean batch loss with respect to the weights.
inline Matrix loss_gradient(Model const &m, Matrix const &x, std::span<const int> labels, FedConfig::Loss kind)
{
  Matrix const z     = m.logits(x);
  Matrix const y     = one_hot(labels, z.cols());
  Matrix const delta = kind == FedConfig::Loss::squared_error ? Matrix(z - y) : Matrix(softmax_rows(z) - y);
  auto const   d     = m.weights.rows() - 1;
  Matrix       g(m.weights.rows(), m.weights.cols());
  g.topRows(d) = x.transpose() * delta;
  g.row(d)     = delta.colwise().sum();
  return g / static_cast<double>(x.rows());
}

/// δ_l epochs of shuffled minibatch SGD.
inline Model local_train(Model model, Dataset const &data, FedConfig const &cfg, std::mt19937_64 &rng)
{
  if (data.size() == 0 || cfg.learning_rate == 0.0)
  {
    return model;
  }
  std::vector<Eigen::Index> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  Matrix           xb;
  std::vector<int> yb;
  for (int e = 0; e < cfg.local_epochs; ++e)
  {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t at = 0; at < order.size(); at += static_cast<std::size_t>(cfg.batch_size))
    {
      std::size_t const end = std::min(order.size(), at + static_cast<std::size_t>(cfg.batch_size));
      xb.resize(static_cast<Eigen::Index>(end - at), data.features.cols());
      yb.clear();
      for (std::size_t k = at; k < end; ++k)
      {
        xb.row(static_cast<Eigen::Index>(k - at)) = data.features.row(order[k]);
        yb.push_back(data.labels[static_cast<std::size_t>(order[k])]);
      }
      model.weights -= cfg.learning_rate * loss_gradient(model, xb, yb, cfg.loss);
    }
  }
  return model;
}

/// Data-size weighted mean of the workers' parameters.
inline Model fedavg_round(std::span<const Model> models, std::span<const double> sizes)
{
  if (models.empty() || models.size() != sizes.size())
  {
    throw InvalidInput("fedavg_round: need one size per model");
  }
  double const total = std::accumulate(sizes.begin(), sizes.end(), 0.0);
  if (!(total > 0.0) || std::any_of(sizes.begin(), sizes.end(), [](double s) { return s < 0.0; }))
  {
    throw InvalidInput("fedavg_round: sizes must be non-negative with a positive sum");
  }
  Model out{Matrix::Zero(models.front().weights.rows(), models.front().weights.cols())};
  for (std::size_t k = 0; k < models.size(); ++k)
  {
    out.weights += (sizes[k] / total) * models[k].weights;
  }
  return out;
}

inline double accuracy(Model const &m, Dataset const &data)
{
  if (data.size() == 0)
  {
    return 0.0;
  }
  Matrix const z       = m.logits(data.features);
  std::size_t  correct = 0;
  for (Eigen::Index r = 0; r < z.rows(); ++r)
  {
    Eigen::Index best;
    z.row(r).maxCoeff(&best);
    correct += static_cast<int>(best) == data.labels[static_cast<std::size_t>(r)];
  }
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

struct Partition
{
  std::vector<Dataset> workers;
  std::vector<double>  emd;  // per worker, against the uniform label distribution
};

/// Every worker holds the same `labels_per_worker` consecutive labels
/// starting at label 0, so the federation as a whole misses exactly the
/// labels that raise each worker's EMD. Samples are split evenly over the
/// held labels.
inline Partition partition_noniid(SyntheticTask const &task, int worker_count, int labels_per_worker,
                                  std::span<const int> sizes, std::mt19937_64 &rng)
{
  if (worker_count < 1 || static_cast<int>(sizes.size()) != worker_count)
  {
    throw InvalidInput("partition_noniid: need one size per worker");
  }
  if (labels_per_worker < 1 || labels_per_worker > task.labels)
  {
    throw InvalidInput("partition_noniid: labels per worker must lie in [1, L]");
  }
  Partition                 p;
  std::vector<double> const uniform = market::uniform_distribution(static_cast<std::size_t>(task.labels));
  for (int w = 0; w < worker_count; ++w)
  {
    std::vector<int> counts(static_cast<std::size_t>(task.labels), 0);
    for (int s = 0; s < sizes[static_cast<std::size_t>(w)]; ++s)
    {
      ++counts[static_cast<std::size_t>(s % labels_per_worker)];
    }
    std::vector<double> dist(counts.size());
    int const           n = std::max(1, sizes[static_cast<std::size_t>(w)]);
    for (std::size_t l = 0; l < counts.size(); ++l)
    {
      dist[l] = static_cast<double>(counts[l]) / n;
    }
    p.emd.push_back(sizes[static_cast<std::size_t>(w)] > 0 ? market::emd(dist, uniform) : 0.0);
    p.workers.push_back(task.draw(counts, rng));
  }
  return p;
}

/// Test accuracy of the global model after δ_g rounds.
inline double run_fedavg(SyntheticTask const &task, Partition const &part, FedConfig const &cfg)
{
  cfg.validate(part.workers.size());
  std::mt19937_64  rng(cfg.seed);
  Model            global = Model::zeros(task.dim(), task.labels);
  std::vector<int> ids(part.workers.size());
  std::iota(ids.begin(), ids.end(), 0);
  std::size_t const take = cfg.sampled_workers == 0 ? ids.size() : static_cast<std::size_t>(cfg.sampled_workers);
  for (int round = 0; round < cfg.global_rounds; ++round)
  {
    std::shuffle(ids.begin(), ids.end(), rng);
    std::vector<int> chosen(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(take));
    std::sort(chosen.begin(), chosen.end());
    std::vector<Model>  locals;
    std::vector<double> sizes;
    for (int w : chosen)
    {
      locals.push_back(local_train(global, part.workers[static_cast<std::size_t>(w)], cfg, rng));
      sizes.push_back(static_cast<double>(part.workers[static_cast<std::size_t>(w)].size()));
    }
    if (std::accumulate(sizes.begin(), sizes.end(), 0.0) > 0.0)
    {
      global = fedavg_round(locals, sizes);
    }
  }
  return accuracy(global, task.test);
}

// --------------------------------------------------------------------------
// Accuracy grid

struct GridPoint
{
  double total_data;
  double emd;
  double accuracy;
  double stddev = 0.0;
  int    seeds  = 1;
};

struct GridConfig
{
  std::vector<int> total_sizes       = {20, 35, 60, 100, 180, 320, 560, 1000, 1800, 3200, 5000};
  std::vector<int> labels_per_worker = {10, 9, 8, 7, 6, 5, 4};
  int              workers           = 2;
  int              seeds             = 5;
  std::uint64_t    seed              = 1;
  FedConfig        fed;
};

/// Mean test accuracy per (total data, labels per worker) cell over seeds.
/// The cell's EMD is the workers' common EMD.
inline std::vector<GridPoint> accuracy_grid(SyntheticTask const &task, GridConfig const &g)
{
  if (g.seeds < 1 || g.workers < 1)
  {
    throw InvalidInput("accuracy_grid: need at least one seed and one worker");
  }
  std::vector<GridPoint> out;
  std::uint64_t          cell = 0;
  for (int k : g.labels_per_worker)
  {
    for (int total : g.total_sizes)
    {
      // per-worker size rounded to a multiple of k keeps the label split exact
      int const per = std::max(k, static_cast<int>(std::lround(static_cast<double>(total) / g.workers / k)) * k);
      std::vector<int> sizes(static_cast<std::size_t>(g.workers), per);
      std::vector<double> acc;
      double              delta = 0.0;
      for (int s = 0; s < g.seeds; ++s)
      {
        std::seed_seq   ss{g.seed, cell, static_cast<std::uint64_t>(s)};
        std::mt19937_64 rng(ss);
        Partition const part = partition_noniid(task, g.workers, k, sizes, rng);
        FedConfig       fc   = g.fed;
        fc.seed              = rng();
        acc.push_back(run_fedavg(task, part, fc));
        delta = part.emd.front();
      }
      double const mean = std::accumulate(acc.begin(), acc.end(), 0.0) / static_cast<double>(acc.size());
      double       var  = 0.0;
      for (double a : acc)
      {
        var += (a - mean) * (a - mean);
      }
      double const sd = acc.size() > 1 ? std::sqrt(var / static_cast<double>(acc.size() - 1)) : 0.0;
      out.push_back({static_cast<double>(per * g.workers), delta, mean, sd, g.seeds});
      ++cell;
    }
  }
  return out;
}

inline void write_grid_csv(std::ostream &os, std::span<const GridPoint> grid)
{
  os << "D,Delta,mean_accuracy,std,seeds\n";
  os.precision(10);
  for (auto const &p : grid)
  {
    os << p.total_data << ',' << p.emd << ',' << p.accuracy << ',' << p.stddev << ',' << p.seeds << '\n';
  }
}

// --------------------------------------------------------------------------
// Curve fit

struct QualityFit
{
  std::array<double, 6> kappa{};  // κ1..κ6
  double                sse        = 0.0;
  double                r_squared  = 0.0;
  int                   restarts   = 0;
  int                   converged  = 0;
  int                   iterations = 0;  // of the winning restart

  double alpha(double delta) const
  {
    double const z = (delta + kappa[4]) / kappa[5];
    return kappa[3] * std::exp(-z * z);
  }

  double quality(double total_data, double delta) const
  {
    double const a = alpha(delta);
    return a - kappa[0] * std::exp(-kappa[1] * std::pow(kappa[2] * total_data, a));
  }
};

struct FitOptions
{
  int           restarts       = 20;
  int           max_iterations = 500;
  std::uint64_t seed           = 7;
};

namespace detail {

// parameters: log κ1, log κ2, log κ3, log κ4, κ5, log κ6
inline std::array<double, 6> to_kappa(Eigen::Matrix<double, 6, 1> const &t)
{
  return {std::exp(t(0)), std::exp(t(1)), std::exp(t(2)), std::exp(t(3)), t(4), std::exp(t(5))};
}

inline Eigen::VectorXd residuals(Eigen::Matrix<double, 6, 1> const &t, std::span<const GridPoint> grid)
{
  QualityFit f;
  f.kappa = to_kappa(t);
  Eigen::VectorXd r(static_cast<Eigen::Index>(grid.size()));
  for (std::size_t k = 0; k < grid.size(); ++k)
  {
    r(static_cast<Eigen::Index>(k)) = f.quality(grid[k].total_data, grid[k].emd) - grid[k].accuracy;
  }
  return r;
}

inline double sse(Eigen::VectorXd const &r)
{
  double const s = r.squaredNorm();
  return std::isfinite(s) ? s : std::numeric_limits<double>::infinity();
}

struct LmResult
{
  Eigen::Matrix<double, 6, 1> theta;
  double                      sse;
  int                         iterations;
  bool                        converged;
};

/// Levenberg-Marquardt with a central-difference Jacobian.
inline LmResult levenberg_marquardt(Eigen::Matrix<double, 6, 1> theta, std::span<const GridPoint> grid,
                                    int max_iterations)
{
  Eigen::VectorXd r      = residuals(theta, grid);
  double          cost   = sse(r);
  double          lambda = 1e-3;
  LmResult        res{theta, cost, 0, false};
  if (!std::isfinite(cost))
  {
    return res;
  }
  auto const m = static_cast<Eigen::Index>(grid.size());
  for (int it = 0; it < max_iterations; ++it)
  {
    res.iterations = it + 1;
    Matrix jac(m, 6);
    for (int c = 0; c < 6; ++c)
    {
      double const h  = 1e-6 * std::max(1.0, std::abs(theta(c)));
      auto         tp = theta, tm = theta;
      tp(c) += h;
      tm(c) -= h;
      jac.col(c) = (residuals(tp, grid) - residuals(tm, grid)) / (2.0 * h);
    }
    if (!jac.allFinite())
    {
      return res;
    }
    Eigen::ColPivHouseholderQR<Matrix> qr(jac);
    if (qr.rank() < 6)
    {
      return res;  // rank-deficient: let the caller restart elsewhere
    }
    Matrix const          a    = jac.transpose() * jac;
    Eigen::VectorXd const g    = jac.transpose() * r;
    bool                  step = false;
    for (int tries = 0; tries < 30 && !step; ++tries)
    {
      Matrix damped = a;
      damped.diagonal() += lambda * a.diagonal().cwiseMax(1e-12);
      Eigen::Matrix<double, 6, 1> const delta = damped.ldlt().solve(-g);
      Eigen::Matrix<double, 6, 1> const cand  = theta + delta;
      Eigen::VectorXd const             rc    = residuals(cand, grid);
      double const                      cc    = sse(rc);
      if (cc < cost)
      {
        bool const done = (cost - cc) <= 1e-14 * (1.0 + cost) || delta.norm() < 1e-12;
        theta           = cand;
        r               = rc;
        cost            = cc;
        lambda          = std::max(lambda / 3.0, 1e-12);
        step            = true;
        if (done)
        {
          res = {theta, cost, it + 1, true};
          return res;
        }
      }
      else
      {
        lambda *= 4.0;
      }
    }
    if (!step)
    {
      res = {theta, cost, it + 1, true};  // no descent direction left
      return res;
    }
    res = {theta, cost, it + 1, false};
  }
  return res;
}

}  // namespace detail

/// Least-squares fit of the data-quality curve to (D, Δ, accuracy) samples.
/// Throws FitFailure on a degenerate grid or when no restart produces a
/// finite fit.
inline QualityFit fit_quality_params(std::span<const GridPoint> grid, FitOptions const &opt = {})
{
  if (grid.size() < 7)
  {
    throw FitFailure("fit_quality_params: need at least 7 grid points, got " + std::to_string(grid.size()));
  }
  double mean = 0.0, top = 0.0;
  for (auto const &p : grid)
  {
    mean += p.accuracy;
    top = std::max(top, p.accuracy);
  }
  mean /= static_cast<double>(grid.size());
  double sst = 0.0;
  for (auto const &p : grid)
  {
    sst += (p.accuracy - mean) * (p.accuracy - mean);
  }
  if (!(sst > 1e-12 * static_cast<double>(grid.size())))
  {
    throw FitFailure("fit_quality_params: degenerate grid, accuracy is constant");
  }

  // starting points: a coarse grid over κ4..κ6, random κ1..κ3
  std::vector<std::array<double, 3>> coarse;
  for (double k4 : {top, std::min(0.999, 1.05 * top)})
  {
    for (double k5 : {-0.5, 0.0, 0.5})
    {
      for (double k6 : {0.7, 2.0})
      {
        coarse.push_back({k4, k5, k6});
      }
    }
  }
  std::mt19937_64                        rng(opt.seed);
  std::uniform_real_distribution<double> u01(0.0, 1.0);

  QualityFit best;
  best.sse       = std::numeric_limits<double>::infinity();
  best.restarts  = opt.restarts;
  for (int k = 0; k < opt.restarts; ++k)
  {
    auto const                 &c = coarse[static_cast<std::size_t>(k) % coarse.size()];
    Eigen::Matrix<double, 6, 1> t;
    t << std::log(0.1 + 0.9 * u01(rng)), std::log(0.5) + u01(rng) * std::log(20.0),
      std::log(1e-4) + u01(rng) * std::log(1e3), std::log(c[0]), c[1], std::log(c[2]);
    auto const lm = detail::levenberg_marquardt(t, grid, opt.max_iterations);
    if (lm.converged)
    {
      ++best.converged;
    }
    if (std::isfinite(lm.sse) && lm.sse < best.sse)
    {
      best.kappa      = detail::to_kappa(lm.theta);
      best.sse        = lm.sse;
      best.iterations = lm.iterations;
    }
  }
  if (!std::isfinite(best.sse))
  {
    throw FitFailure("fit_quality_params: all " + std::to_string(opt.restarts) +
                     " restarts failed to produce a finite fit");
  }
  best.r_squared = 1.0 - best.sse / sst;
  return best;
}

}  // namespace fedauction::fedsim

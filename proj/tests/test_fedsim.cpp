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

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "test_support.hpp"

namespace fa = fedauction;
namespace fs = fedauction::fedsim;
using fs::Matrix;

namespace {

double mean_of(std::vector<double> const &v)
{
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double std_error(std::vector<double> const &v)
{
  double const m = mean_of(v);
  double       s = 0.0;
  for (double x : v)
  {
    s += (x - m) * (x - m);
  }
  return std::sqrt(s / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
}

TEST(Fedsim, PartitionEmdExamples)
{
  auto const      task = fs::SyntheticTask::make(1);
  std::mt19937_64 rng(1);
  std::vector<int> sizes{100, 100};
  auto const       all  = fs::partition_noniid(task, 2, 10, sizes, rng);
  auto const       five = fs::partition_noniid(task, 2, 5, sizes, rng);
  auto const       one  = fs::partition_noniid(task, 2, 1, sizes, rng);
  EXPECT_NEAR(all.emd[0], 0.0, 1e-12);
  EXPECT_NEAR(five.emd[1], 1.0, 1e-12);
  EXPECT_NEAR(one.emd[0], 1.8, 1e-12);
  EXPECT_EQ(five.workers[0].size(), 100u);

  // each worker only holds its own label window
  for (std::size_t w = 0; w < 2; ++w)
  {
    std::vector<int> seen(10, 0);
    for (int l : five.workers[w].labels)
    {
      seen[static_cast<std::size_t>(l)] = 1;
    }
    EXPECT_EQ(std::accumulate(seen.begin(), seen.end(), 0), 5);
  }
  EXPECT_THROW((void)fs::partition_noniid(task, 2, 11, sizes, rng), fa::InvalidInput);
  EXPECT_THROW((void)fs::partition_noniid(task, 3, 5, sizes, rng), fa::InvalidInput);
}

TEST(Fedsim, TestSetIsLabelBalanced)
{
  auto const       task = fs::SyntheticTask::make(2);
  std::vector<int> count(10, 0);
  for (int l : task.test.labels)
  {
    ++count[static_cast<std::size_t>(l)];
  }
  for (int c : count)
  {
    EXPECT_EQ(c, 200);
  }
}

TEST(Fedsim, ZeroLearningRateLeavesModel)
{
  auto const       task = fs::SyntheticTask::make(3);
  std::mt19937_64  rng(2);
  std::vector<int> counts(10, 5);
  auto const       data = task.draw(counts, rng);
  fs::Model        m    = fs::Model::zeros(2, 10);
  m.weights(0, 3)       = 0.7;
  fs::FedConfig fc;
  fc.learning_rate = 0.0;
  EXPECT_EQ(fs::local_train(m, data, fc, rng).weights, m.weights);
}

TEST(Fedsim, SingleSampleStepMovesAgainstGradient)
{
  fs::Dataset d;
  d.features = Matrix{{1.0, -2.0}};
  d.labels   = {3};
  fs::FedConfig fc;
  fc.local_epochs = 1;
  fc.batch_size   = 1;
  fs::Model const m0 = fs::Model::zeros(2, 10);
  std::mt19937_64 rng(1);
  auto const      m1 = fs::local_train(m0, d, fc, rng);
  Matrix const    g  = fs::loss_gradient(m0, d.features, d.labels, fc.loss);
  EXPECT_TRUE(m1.weights.isApprox(m0.weights - 0.01 * g));
  EXPECT_LT(fs::loss_value(m1, d.features, d.labels, fc.loss), fs::loss_value(m0, d.features, d.labels, fc.loss));
}

TEST(Fedsim, LossGradientsMatchFiniteDifferences)
{
  std::mt19937_64                  rng(9);
  std::normal_distribution<double> n01(0.0, 1.0);
  Matrix                           x(6, 2);
  for (Eigen::Index k = 0; k < x.size(); ++k)
  {
    x(k) = n01(rng);
  }
  std::vector<int> y{0, 1, 2, 1, 0, 2};
  for (auto kind : {fs::FedConfig::Loss::cross_entropy, fs::FedConfig::Loss::squared_error})
  {
    fs::Model m{Matrix::Zero(3, 3)};
    for (Eigen::Index k = 0; k < m.weights.size(); ++k)
    {
      m.weights(k) = 0.5 * n01(rng);
    }
    Matrix const g = fs::loss_gradient(m, x, y, kind);
    for (Eigen::Index k = 0; k < m.weights.size(); ++k)
    {
      fs::Model up = m, dn = m;
      up.weights(k) += 1e-6;
      dn.weights(k) -= 1e-6;
      double const fd = (fs::loss_value(up, x, y, kind) - fs::loss_value(dn, x, y, kind)) / 2e-6;
      EXPECT_NEAR(g(k), fd, 1e-6 * (1.0 + std::abs(fd)));
    }
  }
}

TEST(Fedsim, SquaredErrorLossValue)
{
  fs::Model m{Matrix::Zero(2, 2)};
  Matrix    x{{1.0}};
  std::vector<int> y{1};
  // logits zero, one-hot target (0, 1): 0.5 * 1 / 1
  EXPECT_DOUBLE_EQ(fs::loss_value(m, x, y, fs::FedConfig::Loss::squared_error), 0.5);
}

TEST(Fedsim, LossDecreasesOverEpochsOnSeparableData)
{
  auto const       task = fs::SyntheticTask::make(10, 8.0, 0.3, 10, 4);
  std::mt19937_64  rng(3);
  std::vector<int> counts(10, 20);
  auto const       data = task.draw(counts, rng);
  fs::FedConfig    fc;
  fc.local_epochs = 1;
  fs::Model m     = fs::Model::zeros(2, 10);
  double    prev  = fs::loss_value(m, data.features, data.labels, fc.loss);
  for (int e = 0; e < 10; ++e)
  {
    m               = fs::local_train(m, data, fc, rng);
    double const l  = fs::loss_value(m, data.features, data.labels, fc.loss);
    EXPECT_LE(l, prev + 1e-9);
    prev = l;
  }
}

TEST(Fedsim, FedavgWeightedMeanIdentities)
{
  fs::Model a{Matrix::Constant(3, 2, 1.0)}, b{Matrix::Constant(3, 2, 5.0)};
  std::vector<fs::Model> same{a, a, a};
  std::vector<double>    w3{1, 2, 3};
  EXPECT_TRUE(fs::fedavg_round(same, w3).weights.isApprox(a.weights));

  std::vector<fs::Model> ab{a, b}, ba{b, a};
  std::vector<double>    s13{1, 3}, s31{3, 1};
  EXPECT_TRUE(fs::fedavg_round(ab, s13).weights.isApprox(Matrix::Constant(3, 2, 0.25 * 1 + 0.75 * 5)));
  EXPECT_EQ(fs::fedavg_round(ab, s13).weights, fs::fedavg_round(ba, s31).weights);

  std::vector<double> bad{1};
  EXPECT_THROW((void)fs::fedavg_round(ab, bad), fa::InvalidInput);
  std::vector<double> zero{0, 0};
  EXPECT_THROW((void)fs::fedavg_round(ab, zero), fa::InvalidInput);
}

TEST(Fedsim, SingleWorkerMatchesCentralizedTraining)
{
  auto const       task = fs::SyntheticTask::make(5);
  std::vector<double> fed, central;
  for (std::uint64_t s = 0; s < 5; ++s)
  {
    std::mt19937_64  rng(s);
    std::vector<int> sizes{1000};
    auto const       part = fs::partition_noniid(task, 1, 10, sizes, rng);
    fs::FedConfig    fc;
    fc.seed = s;
    fed.push_back(fs::run_fedavg(task, part, fc));

    fs::FedConfig c = fc;
    c.local_epochs  = fc.local_epochs * fc.global_rounds;
    std::mt19937_64 crng(s + 100);
    central.push_back(fs::accuracy(fs::local_train(fs::Model::zeros(2, 10), part.workers[0], c, crng), task.test));
  }
  EXPECT_NEAR(mean_of(fed), mean_of(central), 0.02);
}

TEST(Fedsim, AccuracyTrendsInDataAndSkew)
{
  auto const task = fs::SyntheticTask::make(6);
  auto const cell = [&](int total, int k) {
    std::vector<double> acc;
    for (std::uint64_t s = 0; s < 20; ++s)
    {
      std::mt19937_64  rng(1000 * s + static_cast<std::uint64_t>(total + k));
      std::vector<int> sizes{total / 2, total / 2};
      auto const       part = fs::partition_noniid(task, 2, k, sizes, rng);
      fs::FedConfig    fc;
      fc.seed = s;
      acc.push_back(fs::run_fedavg(task, part, fc));
    }
    return acc;
  };
  std::vector<std::vector<double>> by_size{cell(40, 10), cell(200, 10), cell(1000, 10)};
  for (std::size_t k = 0; k + 1 < by_size.size(); ++k)
  {
    EXPECT_GE(mean_of(by_size[k + 1]) + std_error(by_size[k + 1]) + std_error(by_size[k]), mean_of(by_size[k]));
  }
  std::vector<std::vector<double>> by_skew{cell(600, 10), cell(600, 7), cell(600, 4)};
  for (std::size_t k = 0; k + 1 < by_skew.size(); ++k)
  {
    EXPECT_LE(mean_of(by_skew[k + 1]) - std_error(by_skew[k + 1]) - std_error(by_skew[k]), mean_of(by_skew[k]));
  }
  EXPECT_GT(mean_of(by_size[2]), mean_of(by_size[0]));
  EXPECT_LT(mean_of(by_skew[2]), mean_of(by_skew[0]));
}

TEST(Fedsim, GridShapeAndCsv)
{
  auto const     task = fs::SyntheticTask::make(7);
  fs::GridConfig g;
  g.total_sizes       = {20, 100};
  g.labels_per_worker = {10, 5};
  g.seeds             = 2;
  auto const grid     = fs::accuracy_grid(task, g);
  ASSERT_EQ(grid.size(), 4u);
  EXPECT_DOUBLE_EQ(grid[0].emd, 0.0);
  EXPECT_DOUBLE_EQ(grid[3].emd, 1.0);
  EXPECT_DOUBLE_EQ(grid[1].total_data, 100.0);
  for (auto const &p : grid)
  {
    EXPECT_GE(p.accuracy, 0.0);
    EXPECT_LE(p.accuracy, 1.0);
    EXPECT_EQ(p.seeds, 2);
  }
  EXPECT_EQ(fs::accuracy_grid(task, g)[2].accuracy, grid[2].accuracy);
  std::ostringstream os;
  fs::write_grid_csv(os, grid);
  std::string const text = os.str();
  EXPECT_EQ(text.substr(0, text.find('\n')), "D,Delta,mean_accuracy,std,seeds");
}

std::vector<fs::GridPoint> synthetic_grid(fa::MarketConfig const &c, double noise, std::uint64_t seed)
{
  std::mt19937_64                  rng(seed);
  std::normal_distribution<double> n(0.0, noise);
  std::vector<fs::GridPoint>       grid;
  for (double d : {20.0, 50.0, 100.0, 200.0, 500.0, 1000.0, 2000.0, 5000.0, 10000.0, 20000.0, 50000.0})
  {
    for (double delta : {0.0, 0.2, 0.4, 0.6, 0.8, 1.0, 1.2, 1.4, 1.6})
    {
      grid.push_back({d, delta, fa::market::data_quality(d, delta, c) + n(rng)});
    }
  }
  return grid;
}

TEST(Fedsim, FitRecoversGeneratingConstants)
{
  fa::MarketConfig const c;
  auto const             grid = synthetic_grid(c, 0.005, 11);
  auto const             fit  = fs::fit_quality_params(grid);
  std::array<double, 6> const truth{c.kappa1, c.kappa2, c.kappa3, c.kappa4, c.kappa5, c.kappa6};
  for (std::size_t k = 0; k < 6; ++k)
  {
    EXPECT_NEAR(fit.kappa[k], truth[k], 0.1 * truth[k]) << "kappa" << k + 1;
  }
  EXPECT_GT(fit.r_squared, 0.99);
  EXPECT_GT(fit.converged, 0);
}

TEST(Fedsim, ConstantGridFailsToFit)
{
  std::vector<fs::GridPoint> grid;
  for (int k = 0; k < 20; ++k)
  {
    grid.push_back({10.0 * (k + 1), 0.1 * (k % 5), 0.5});
  }
  EXPECT_THROW((void)fs::fit_quality_params(grid), fa::FitFailure);
  grid.resize(3);
  EXPECT_THROW((void)fs::fit_quality_params(grid), fa::FitFailure);
}

}  // namespace

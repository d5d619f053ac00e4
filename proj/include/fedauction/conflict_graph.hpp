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

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "fedauction/market_model.hpp"

namespace fedauction {

/// Pairwise channel-conflict structure: owners i != j are adjacent iff their
/// requested channel sets intersect. Immutable once built.
class ConflictGraph
{
public:
  ConflictGraph() = default;

  static ConflictGraph build(std::span<const std::vector<int>> channel_requests)
  {
    ConflictGraph g;
    std::size_t const n = channel_requests.size();
    g.n_ = n;
    g.adjacent_.assign(n * n, 0);
    g.neighbours_.assign(n, {});

    std::vector<std::vector<int>> sorted(channel_requests.begin(), channel_requests.end());
    for (auto &c : sorted)
    {
      std::sort(c.begin(), c.end());
    }
    for (std::size_t i = 0; i < n; ++i)
    {
      for (std::size_t j = i + 1; j < n; ++j)
      {
        if (intersects(sorted[i], sorted[j]))
        {
          g.adjacent_[i * n + j] = 1;
          g.adjacent_[j * n + i] = 1;
          g.neighbours_[i].push_back(j);
          g.neighbours_[j].push_back(i);
        }
      }
    }
    return g;
  }

  static ConflictGraph build(std::span<const DataOwner> owners)
  {
    std::vector<std::vector<int>> requests;
    requests.reserve(owners.size());
    for (auto const &o : owners)
    {
      requests.push_back(o.channels);
    }
    return build(requests);
  }

  std::size_t size() const noexcept
  {
    return n_;
  }

  bool adjacent(OwnerId i, OwnerId j) const
  {
    return adjacent_[i * n_ + j] != 0;
  }

  std::size_t degree(OwnerId i) const
  {
    return neighbours_[i].size();
  }

  std::span<const OwnerId> neighbours(OwnerId i) const
  {
    return neighbours_[i];
  }

  /// Owners outside `members` that conflict with at least one member.
  OwnerSet conflict_set(std::span<const OwnerId> members) const
  {
    std::vector<char> in(n_, 0), hit(n_, 0);
    for (OwnerId i : members)
    {
      in[i] = 1;
    }
    for (OwnerId i : members)
    {
      for (OwnerId j : neighbours_[i])
      {
        if (!in[j])
        {
          hit[j] = 1;
        }
      }
    }
    OwnerSet out;
    for (OwnerId j = 0; j < n_; ++j)
    {
      if (hit[j])
      {
        out.push_back(j);
      }
    }
    return out;
  }

  /// True iff no two members share a channel.
  bool is_feasible(std::span<const OwnerId> members) const
  {
    for (std::size_t a = 0; a < members.size(); ++a)
    {
      for (std::size_t b = a + 1; b < members.size(); ++b)
      {
        if (members[a] == members[b] || adjacent(members[a], members[b]))
        {
          return false;
        }
      }
    }
    return true;
  }

  /// B^{-1/2}(A + I)B^{-1/2} with B the row sums of A + I.
  Eigen::MatrixXd normalized_adjacency() const
  {
    Eigen::MatrixXd m = Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(n_),
                                                  static_cast<Eigen::Index>(n_));
    for (std::size_t i = 0; i < n_; ++i)
    {
      for (OwnerId j : neighbours_[i])
      {
        m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = 1.0;
      }
    }
    Eigen::VectorXd inv_sqrt(static_cast<Eigen::Index>(n_));
    for (std::size_t i = 0; i < n_; ++i)
    {
      inv_sqrt(static_cast<Eigen::Index>(i)) = 1.0 / std::sqrt(static_cast<double>(degree(i) + 1));
    }
    return inv_sqrt.asDiagonal() * m * inv_sqrt.asDiagonal();
  }

private:
  static bool intersects(std::vector<int> const &a, std::vector<int> const &b)
  {
    auto ia = a.begin();
    auto ib = b.begin();
    while (ia != a.end() && ib != b.end())
    {
      if (*ia == *ib)
      {
        return true;
      }
      if (*ia < *ib)
      {
        ++ia;
      }
      else
      {
        ++ib;
      }
    }
    return false;
  }

  std::size_t                       n_ = 0;
  std::vector<std::uint8_t>         adjacent_;
  std::vector<std::vector<OwnerId>> neighbours_;
};

}  // namespace fedauction

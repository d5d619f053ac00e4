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

// Minimal reverse-mode automatic differentiation over dense double matrices.
// A Tape records one forward computation; Var is a handle into it. Trainable
// values live in Parameter objects that outlive tapes and collect gradients.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "fedauction/errors.hpp"

namespace fedauction::nn {

using Matrix = Eigen::MatrixXd;

struct Parameter
{
  std::string name;
  Matrix      value;
  Matrix      grad;

  Parameter() = default;
  Parameter(std::string n, Matrix v)
    : name(std::move(n))
    , value(std::move(v))
    , grad(Matrix::Zero(value.rows(), value.cols()))
  {}

  void zero_grad()
  {
    grad.setZero(value.rows(), value.cols());
  }
};

class Tape;

/// Handle to a node on a tape. Cheap to copy; valid while the tape lives.
class Var
{
public:
  Var() = default;
  Var(Tape *tape, std::size_t id)
    : tape_(tape)
    , id_(id)
  {}

  Matrix const &value() const;
  Matrix const &grad() const;
  double        scalar() const;
  Eigen::Index  rows() const
  {
    return value().rows();
  }
  Eigen::Index cols() const
  {
    return value().cols();
  }

  Tape *tape() const noexcept
  {
    return tape_;
  }
  std::size_t id() const noexcept
  {
    return id_;
  }

private:
  Tape       *tape_ = nullptr;
  std::size_t id_   = 0;
};

class Tape
{
public:
  struct Node
  {
    Matrix                 value;
    Matrix                 grad;
    bool                   needs_grad = false;
    Parameter             *param      = nullptr;
    std::function<void()>  backward;
  };

  Var constant(Matrix value)
  {
    return push(std::move(value), false);
  }

  Var constant(double value)
  {
    return constant(Matrix::Constant(1, 1, value));
  }

  /// Leaf bound to a parameter; backward() adds into param.grad.
  Var parameter(Parameter &p)
  {
    Var v       = push(p.value, true);
    nodes_[v.id()].param = &p;
    return v;
  }

  Node &node(Var v)
  {
    return nodes_[v.id()];
  }
  Node const &node(Var v) const
  {
    return nodes_[v.id()];
  }

  std::size_t size() const noexcept
  {
    return nodes_.size();
  }

  /// Reverse sweep from a 1x1 loss node.
  void backward(Var loss)
  {
    Node &root = nodes_.at(loss.id());
    if (root.value.rows() != 1 || root.value.cols() != 1)
    {
      throw InvalidInput("backward: loss must be a 1x1 scalar");
    }
    for (auto &n : nodes_)
    {
      if (n.needs_grad)
      {
        n.grad.setZero(n.value.rows(), n.value.cols());
      }
    }
    root.grad = Matrix::Ones(1, 1);
    for (std::size_t k = loss.id() + 1; k-- > 0;)
    {
      Node &n = nodes_[k];
      if (!n.needs_grad)
      {
        continue;
      }
      if (n.backward)
      {
        n.backward();
      }
      if (n.param != nullptr)
      {
        n.param->grad += n.grad;
      }
    }
  }

  // node creation used by the op functions below
  Var push(Matrix value, bool needs_grad, std::function<void()> backward = {})
  {
    Node n;
    n.value      = std::move(value);
    n.needs_grad = needs_grad;
    n.backward   = std::move(backward);
    nodes_.push_back(std::move(n));
    return Var(this, nodes_.size() - 1);
  }

  Matrix &grad_of(std::size_t id)
  {
    return nodes_[id].grad;
  }
  bool needs_grad(std::size_t id) const
  {
    return nodes_[id].needs_grad;
  }

private:
  std::vector<Node> nodes_;
};

inline Matrix const &Var::value() const
{
  return tape_->node(*this).value;
}
inline Matrix const &Var::grad() const
{
  return tape_->node(*this).grad;
}
inline double Var::scalar() const
{
  Matrix const &v = value();
  if (v.rows() != 1 || v.cols() != 1)
  {
    throw InvalidInput("Var::scalar: not a 1x1 value");
  }
  return v(0, 0);
}

namespace detail {

inline void require_same_tape(Var a, Var b)
{
  if (a.tape() != b.tape())
  {
    throw InvalidInput("nn: operands recorded on different tapes");
  }
}

inline void require_same_shape(Var a, Var b, char const *op)
{
  if (a.rows() != b.rows() || a.cols() != b.cols())
  {
    throw InvalidInput(std::string("nn::") + op + ": shape mismatch");
  }
}

}  // namespace detail

inline Var matmul(Var a, Var b)
{
  detail::require_same_tape(a, b);
  if (a.cols() != b.rows())
  {
    throw InvalidInput("nn::matmul: inner dimensions differ");
  }
  Tape       *t  = a.tape();
  std::size_t ia = a.id(), ib = b.id();
  bool const  ng = t->needs_grad(ia) || t->needs_grad(ib);
  Var         out = t->push(a.value() * b.value(), ng);
  std::size_t io  = out.id();
  if (ng)
  {
    t->node(out).backward = [t, ia, ib, io] {
      Matrix const &g = t->grad_of(io);
      if (t->needs_grad(ia))
      {
        t->grad_of(ia).noalias() += g * t->node(Var(t, ib)).value.transpose();
      }
      if (t->needs_grad(ib))
      {
        t->grad_of(ib).noalias() += t->node(Var(t, ia)).value.transpose() * g;
      }
    };
  }
  return out;
}

inline Var add(Var a, Var b)
{
  detail::require_same_tape(a, b);
  detail::require_same_shape(a, b, "add");
  Tape       *t  = a.tape();
  std::size_t ia = a.id(), ib = b.id();
  bool const  ng = t->needs_grad(ia) || t->needs_grad(ib);
  Var         out = t->push(a.value() + b.value(), ng);
  std::size_t io  = out.id();
  if (ng)
  {
    t->node(out).backward = [t, ia, ib, io] {
      if (t->needs_grad(ia))
      {
        t->grad_of(ia) += t->grad_of(io);
      }
      if (t->needs_grad(ib))
      {
        t->grad_of(ib) += t->grad_of(io);
      }
    };
  }
  return out;
}

/// a + k·b for a constant k; covers subtraction with k = -1.
inline Var add_scaled(Var a, Var b, double k)
{
  detail::require_same_tape(a, b);
  detail::require_same_shape(a, b, "add_scaled");
  Tape       *t  = a.tape();
  std::size_t ia = a.id(), ib = b.id();
  bool const  ng = t->needs_grad(ia) || t->needs_grad(ib);
  Var         out = t->push(a.value() + k * b.value(), ng);
  std::size_t io  = out.id();
  if (ng)
  {
    t->node(out).backward = [t, ia, ib, io, k] {
      if (t->needs_grad(ia))
      {
        t->grad_of(ia) += t->grad_of(io);
      }
      if (t->needs_grad(ib))
      {
        t->grad_of(ib) += k * t->grad_of(io);
      }
    };
  }
  return out;
}

inline Var sub(Var a, Var b)
{
  return add_scaled(a, b, -1.0);
}

inline Var hadamard(Var a, Var b)
{
  detail::require_same_tape(a, b);
  detail::require_same_shape(a, b, "hadamard");
  Tape       *t  = a.tape();
  std::size_t ia = a.id(), ib = b.id();
  bool const  ng = t->needs_grad(ia) || t->needs_grad(ib);
  Var         out = t->push(a.value().cwiseProduct(b.value()), ng);
  std::size_t io  = out.id();
  if (ng)
  {
    t->node(out).backward = [t, ia, ib, io] {
      Matrix const &g = t->grad_of(io);
      if (t->needs_grad(ia))
      {
        t->grad_of(ia) += g.cwiseProduct(t->node(Var(t, ib)).value);
      }
      if (t->needs_grad(ib))
      {
        t->grad_of(ib) += g.cwiseProduct(t->node(Var(t, ia)).value);
      }
    };
  }
  return out;
}

inline Var scale(Var a, double k)
{
  Tape       *t  = a.tape();
  std::size_t ia = a.id();
  bool const  ng = t->needs_grad(ia);
  Var         out = t->push(k * a.value(), ng);
  std::size_t io  = out.id();
  if (ng)
  {
    t->node(out).backward = [t, ia, io, k] { t->grad_of(ia) += k * t->grad_of(io); };
  }
  return out;
}

/// Scalar (1x1) times matrix.
inline Var scalar_mul(Var s, Var m)
{
  detail::require_same_tape(s, m);
  if (s.rows() != 1 || s.cols() != 1)
  {
    throw InvalidInput("nn::scalar_mul: first operand must be 1x1");
  }
  Tape       *t  = s.tape();
  std::size_t is = s.id(), im = m.id();
  bool const  ng = t->needs_grad(is) || t->needs_grad(im);
  Var         out = t->push(s.scalar() * m.value(), ng);
  std::size_t io  = out.id();
  if (ng)
  {
    t->node(out).backward = [t, is, im, io] {
      Matrix const &g = t->grad_of(io);
      if (t->needs_grad(is))
      {
        t->grad_of(is)(0, 0) += g.cwiseProduct(t->node(Var(t, im)).value).sum();
      }
      if (t->needs_grad(im))
      {
        t->grad_of(im) += t->node(Var(t, is)).value(0, 0) * g;
      }
    };
  }
  return out;
}

/// max(0, x); the subgradient at 0 is 0.
inline Var relu(Var a)
{
  Tape       *t  = a.tape();
  std::size_t ia = a.id();
  bool const  ng = t->needs_grad(ia);
  Var         out = t->push(a.value().cwiseMax(0.0), ng);
  std::size_t io  = out.id();
  if (ng)
  {
    t->node(out).backward = [t, ia, io] {
      Matrix const &x = t->node(Var(t, ia)).value;
      t->grad_of(ia) += (x.array() > 0.0).cast<double>().matrix().cwiseProduct(t->grad_of(io));
    };
  }
  return out;
}

inline Var exp(Var a)
{
  Tape       *t  = a.tape();
  std::size_t ia = a.id();
  bool const  ng = t->needs_grad(ia);
  Var         out = t->push(a.value().array().exp().matrix(), ng);
  std::size_t io  = out.id();
  if (ng)
  {
    t->node(out).backward = [t, ia, io] {
      t->grad_of(ia) += t->node(Var(t, io)).value.cwiseProduct(t->grad_of(io));
    };
  }
  return out;
}

inline Var square(Var a)
{
  return hadamard(a, a);
}

/// Sum over rows: (r x c) -> (1 x c).
inline Var sum_rows(Var a)
{
  Tape       *t  = a.tape();
  std::size_t ia = a.id();
  bool const  ng = t->needs_grad(ia);
  Var         out = t->push(a.value().colwise().sum(), ng);
  std::size_t io  = out.id();
  if (ng)
  {
    t->node(out).backward = [t, ia, io] {
      t->grad_of(ia).rowwise() += t->grad_of(io).row(0);
    };
  }
  return out;
}

/// Sum over columns: (r x c) -> (r x 1).
inline Var sum_cols(Var a)
{
  Tape       *t  = a.tape();
  std::size_t ia = a.id();
  bool const  ng = t->needs_grad(ia);
  Var         out = t->push(a.value().rowwise().sum(), ng);
  std::size_t io  = out.id();
  if (ng)
  {
    t->node(out).backward = [t, ia, io] {
      t->grad_of(ia).colwise() += t->grad_of(io).col(0);
    };
  }
  return out;
}

inline Var row(Var a, Eigen::Index r)
{
  if (r < 0 || r >= a.rows())
  {
    throw InvalidInput("nn::row: index out of range");
  }
  Tape       *t  = a.tape();
  std::size_t ia = a.id();
  bool const  ng = t->needs_grad(ia);
  Var         out = t->push(a.value().row(r), ng);
  std::size_t io  = out.id();
  if (ng)
  {
    t->node(out).backward = [t, ia, io, r] { t->grad_of(ia).row(r) += t->grad_of(io).row(0); };
  }
  return out;
}

/// Horizontal concatenation of equal-height blocks.
inline Var concat_cols(std::vector<Var> const &parts)
{
  if (parts.empty())
  {
    throw InvalidInput("nn::concat_cols: nothing to concatenate");
  }
  Tape        *t    = parts.front().tape();
  Eigen::Index rows = parts.front().rows();
  Eigen::Index cols = 0;
  bool         ng   = false;
  for (Var p : parts)
  {
    detail::require_same_tape(parts.front(), p);
    if (p.rows() != rows)
    {
      throw InvalidInput("nn::concat_cols: row counts differ");
    }
    cols += p.cols();
    ng = ng || t->needs_grad(p.id());
  }
  Matrix       v(rows, cols);
  Eigen::Index at = 0;
  std::vector<std::pair<std::size_t, Eigen::Index>> spans;
  for (Var p : parts)
  {
    v.middleCols(at, p.cols()) = p.value();
    spans.emplace_back(p.id(), at);
    at += p.cols();
  }
  Var         out = t->push(std::move(v), ng);
  std::size_t io  = out.id();
  if (ng)
  {
    t->node(out).backward = [t, spans, io] {
      for (auto const &[id, offset] : spans)
      {
        if (t->needs_grad(id))
        {
          Matrix &g = t->grad_of(id);
          g += t->grad_of(io).middleCols(offset, g.cols());
        }
      }
    };
  }
  return out;
}

namespace detail {

template <typename Better>
Var reduce_over(Var a, std::vector<std::vector<Eigen::Index>> const &groups, Better better)
{
  Tape                     *t    = a.tape();
  std::size_t               ia   = a.id();
  Eigen::Index const        rows = a.rows();
  auto const                G    = static_cast<Eigen::Index>(groups.size());
  Matrix                    v(rows, G);
  std::vector<Eigen::Index> chosen(static_cast<std::size_t>(rows * G));
  for (Eigen::Index g = 0; g < G; ++g)
  {
    auto const &idx = groups[static_cast<std::size_t>(g)];
    if (idx.empty())
    {
      throw InvalidInput("nn::max_over/min_over: empty index set");
    }
    for (Eigen::Index k : idx)
    {
      if (k < 0 || k >= a.cols())
      {
        throw InvalidInput("nn::max_over/min_over: index out of range");
      }
    }
    for (Eigen::Index r = 0; r < rows; ++r)
    {
      Eigen::Index best = idx.front();
      for (Eigen::Index k : idx)
      {
        if (better(a.value()(r, k), a.value()(r, best)))
        {
          best = k;  // strict comparison keeps the first attaining index
        }
      }
      chosen[static_cast<std::size_t>(r * G + g)] = best;
      v(r, g)                                      = a.value()(r, best);
    }
  }
  bool const  ng  = t->needs_grad(ia);
  Var         out = t->push(std::move(v), ng);
  std::size_t io  = out.id();
  if (ng)
  {
    t->node(out).backward = [t, ia, io, G, chosen = std::move(chosen)] {
      Matrix const &g = t->grad_of(io);
      for (Eigen::Index r = 0; r < g.rows(); ++r)
      {
        for (Eigen::Index c = 0; c < G; ++c)
        {
          t->grad_of(ia)(r, chosen[static_cast<std::size_t>(r * G + c)]) += g(r, c);
        }
      }
    };
  }
  return out;
}

}  // namespace detail

/// Row-wise maximum over each column index set: (r x c) -> (r x sets).
/// Gradient goes to the first index attaining it.
inline Var max_over(Var a, std::vector<std::vector<Eigen::Index>> const &groups)
{
  return detail::reduce_over(a, groups, [](double x, double y) { return x > y; });
}

inline Var min_over(Var a, std::vector<std::vector<Eigen::Index>> const &groups)
{
  return detail::reduce_over(a, groups, [](double x, double y) { return x < y; });
}

/// Adds a 1 x c row to every row of an r x c matrix.
inline Var add_row(Var a, Var row_vec)
{
  detail::require_same_tape(a, row_vec);
  if (row_vec.rows() != 1 || row_vec.cols() != a.cols())
  {
    throw InvalidInput("nn::add_row: expected a 1 x cols row");
  }
  Tape       *t  = a.tape();
  std::size_t ia = a.id(), ib = row_vec.id();
  bool const  ng = t->needs_grad(ia) || t->needs_grad(ib);
  Matrix      v  = a.value();
  v.rowwise() += row_vec.value().row(0);
  Var         out = t->push(std::move(v), ng);
  std::size_t io  = out.id();
  if (ng)
  {
    t->node(out).backward = [t, ia, ib, io] {
      if (t->needs_grad(ia))
      {
        t->grad_of(ia) += t->grad_of(io);
      }
      if (t->needs_grad(ib))
      {
        t->grad_of(ib) += t->grad_of(io).colwise().sum();
      }
    };
  }
  return out;
}

/// Multiplies every row of an r x c matrix elementwise by a 1 x c row.
inline Var mul_row(Var a, Var row_vec)
{
  detail::require_same_tape(a, row_vec);
  if (row_vec.rows() != 1 || row_vec.cols() != a.cols())
  {
    throw InvalidInput("nn::mul_row: expected a 1 x cols row");
  }
  Tape       *t  = a.tape();
  std::size_t ia = a.id(), ib = row_vec.id();
  bool const  ng = t->needs_grad(ia) || t->needs_grad(ib);
  Matrix      v  = a.value().array().rowwise() * row_vec.value().row(0).array();
  Var         out = t->push(std::move(v), ng);
  std::size_t io  = out.id();
  if (ng)
  {
    t->node(out).backward = [t, ia, ib, io] {
      Matrix const &g = t->grad_of(io);
      if (t->needs_grad(ia))
      {
        t->grad_of(ia).array() +=
            g.array().rowwise() * t->node(Var(t, ib)).value.row(0).array();
      }
      if (t->needs_grad(ib))
      {
        t->grad_of(ib) += g.cwiseProduct(t->node(Var(t, ia)).value).colwise().sum();
      }
    };
  }
  return out;
}

/// Vertical concatenation of equal-width blocks.
inline Var stack_rows(std::vector<Var> const &parts)
{
  if (parts.empty())
  {
    throw InvalidInput("nn::stack_rows: nothing to stack");
  }
  Tape        *t    = parts.front().tape();
  Eigen::Index cols = parts.front().cols();
  Eigen::Index rows = 0;
  bool         ng   = false;
  for (Var p : parts)
  {
    detail::require_same_tape(parts.front(), p);
    if (p.cols() != cols)
    {
      throw InvalidInput("nn::stack_rows: column counts differ");
    }
    rows += p.rows();
    ng = ng || t->needs_grad(p.id());
  }
  Matrix       v(rows, cols);
  Eigen::Index at = 0;
  std::vector<std::pair<std::size_t, Eigen::Index>> spans;
  for (Var p : parts)
  {
    v.middleRows(at, p.rows()) = p.value();
    spans.emplace_back(p.id(), at);
    at += p.rows();
  }
  Var         out = t->push(std::move(v), ng);
  std::size_t io  = out.id();
  if (ng)
  {
    t->node(out).backward = [t, spans, io] {
      for (auto const &[id, offset] : spans)
      {
        if (t->needs_grad(id))
        {
          Matrix &g = t->grad_of(id);
          g += t->grad_of(io).middleRows(offset, g.rows());
        }
      }
    };
  }
  return out;
}

/// Elementwise Huber penalty: x^2 inside [-delta, delta], linear outside
/// with matching value and slope. An infinite delta gives plain x^2.
inline Var huber(Var a, double delta)
{
  if (!(delta > 0.0))
  {
    throw InvalidInput("nn::huber: delta must be positive");
  }
  Tape       *t  = a.tape();
  std::size_t ia = a.id();
  bool const  ng = t->needs_grad(ia);
  Matrix      v  = a.value().unaryExpr([delta](double x) {
    double const ax = std::abs(x);
    return ax <= delta ? x * x : delta * (2.0 * ax - delta);
  });
  Var         out = t->push(std::move(v), ng);
  std::size_t io  = out.id();
  if (ng)
  {
    t->node(out).backward = [t, ia, io, delta] {
      Matrix const &x = t->node(Var(t, ia)).value;
      t->grad_of(ia) += x.unaryExpr([delta](double z) { return 2.0 * std::clamp(z, -delta, delta); })
                            .cwiseProduct(t->grad_of(io));
    };
  }
  return out;
}

/// Mean of all entries as a 1x1 node.
inline Var mean_all(Var a)
{
  double const n = static_cast<double>(a.value().size());
  return scale(sum_cols(sum_rows(a)), 1.0 / n);
}

inline Var operator+(Var a, Var b)
{
  return add(a, b);
}
inline Var operator-(Var a, Var b)
{
  return sub(a, b);
}
inline Var operator*(double k, Var a)
{
  return scale(a, k);
}

// --------------------------------------------------------------------------
// ADAM

struct AdamState
{
  double lr      = 1e-3;
  double beta1   = 0.9;
  double beta2   = 0.999;
  double epsilon = 1e-8;
  long   step    = 0;

  std::vector<Matrix> first;
  std::vector<Matrix> second;
};

/// One bias-corrected ADAM update using each parameter's accumulated grad.
inline void adam_step(std::span<Parameter *const> params, AdamState &state)
{
  if (state.first.empty())
  {
    for (Parameter const *p : params)
    {
      state.first.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
      state.second.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
    }
  }
  if (state.first.size() != params.size())
  {
    throw InvalidInput("adam_step: parameter list changed between steps");
  }
  ++state.step;
  double const c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  double const c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  for (std::size_t k = 0; k < params.size(); ++k)
  {
    Parameter &p = *params[k];
    Matrix    &m = state.first[k];
    Matrix    &v = state.second[k];
    m = state.beta1 * m + (1.0 - state.beta1) * p.grad;
    v = state.beta2 * v + (1.0 - state.beta2) * p.grad.cwiseProduct(p.grad);
    p.value.array() -= state.lr * (m.array() / c1) / ((v.array() / c2).sqrt() + state.epsilon);
  }
}

/// Scales every gradient down so their joint L2 norm is at most max_norm.
/// Returns the norm before scaling.
inline double clip_grad_norm(std::span<Parameter *const> params, double max_norm)
{
  double sq = 0.0;
  for (Parameter const *p : params)
  {
    sq += p->grad.squaredNorm();
  }
  double const norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm)
  {
    for (Parameter *p : params)
    {
      p->grad *= max_norm / norm;
    }
  }
  return norm;
}

// --------------------------------------------------------------------------
// Serialization: an ordered list of {name, rows, cols, values (row-major)}.

inline nlohmann::json to_json(std::span<Parameter const *const> params)
{
  nlohmann::json list = nlohmann::json::array();
  for (Parameter const *p : params)
  {
    std::vector<double> values;
    values.reserve(static_cast<std::size_t>(p->value.size()));
    for (Eigen::Index r = 0; r < p->value.rows(); ++r)
    {
      for (Eigen::Index c = 0; c < p->value.cols(); ++c)
      {
        values.push_back(p->value(r, c));
      }
    }
    list.push_back({{"name", p->name}, {"rows", p->value.rows()}, {"cols", p->value.cols()},
                    {"values", std::move(values)}});
  }
  return list;
}

/// Loads values into existing parameters, matching by position; name and
/// shape must agree.
inline void from_json(nlohmann::json const &list, std::span<Parameter *const> params)
{
  if (!list.is_array() || list.size() != params.size())
  {
    throw InvalidInput("parameter record: expected " + std::to_string(params.size()) + " entries");
  }
  for (std::size_t k = 0; k < params.size(); ++k)
  {
    auto const &e = list[k];
    Parameter  &p = *params[k];
    if (e.at("name").get<std::string>() != p.name)
    {
      throw InvalidInput("parameter record: expected '" + p.name + "', found '" +
                         e.at("name").get<std::string>() + "'");
    }
    auto const rows = e.at("rows").get<Eigen::Index>();
    auto const cols = e.at("cols").get<Eigen::Index>();
    auto const vals = e.at("values").get<std::vector<double>>();
    if (rows != p.value.rows() || cols != p.value.cols() ||
        static_cast<Eigen::Index>(vals.size()) != rows * cols)
    {
      throw InvalidInput("parameter record: shape mismatch for '" + p.name + "'");
    }
    for (Eigen::Index r = 0; r < rows; ++r)
    {
      for (Eigen::Index c = 0; c < cols; ++c)
      {
        p.value(r, c) = vals[static_cast<std::size_t>(r * cols + c)];
      }
    }
    p.zero_grad();
  }
}

}  // namespace fedauction::nn

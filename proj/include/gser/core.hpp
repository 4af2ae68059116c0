// Copyright 2026 The gser Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Dense linear-algebra vocabulary and the activation/loss functions the
// recurrent cells are built from. Everything is templated on the scalar
// type; the toolkit itself instantiates double.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>

#include "gser/errors.hpp"

namespace gser {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using MatrixXd = Matrix<double>;
using VectorXd = Vector<double>;
using Index = Eigen::Index;

inline constexpr double kLossFloor = 1e-15;

/// Product M·v with a checked shape.
template <typename DerivedM, typename DerivedV>
Vector<typename DerivedM::Scalar> matvec(const Eigen::MatrixBase<DerivedM>& m,
                                         const Eigen::MatrixBase<DerivedV>& v) {
  if (m.cols() != v.size())
    throw ShapeError("matvec: matrix has " + std::to_string(m.cols()) +
                     " columns but vector has length " + std::to_string(v.size()));
  return m * v;
}

/// Logistic function, evaluated so that exp never overflows.
template <typename Scalar>
  requires std::is_arithmetic_v<Scalar>
Scalar sigmoid(Scalar x) {
  using std::exp;
  if (x >= Scalar(0)) return Scalar(1) / (Scalar(1) + exp(-x));
  const Scalar e = exp(x);
  return e / (Scalar(1) + e);
}

template <typename Derived>
Vector<typename Derived::Scalar> sigmoid(const Eigen::MatrixBase<Derived>& v) {
  using S = typename Derived::Scalar;
  return v.unaryExpr([](S x) { return sigmoid(x); });
}

template <typename Derived>
Vector<typename Derived::Scalar> tanh_act(const Eigen::MatrixBase<Derived>& v) {
  return v.array().tanh().matrix();
}

/// Max-subtracted softmax.
template <typename Derived>
Vector<typename Derived::Scalar> softmax(const Eigen::MatrixBase<Derived>& v) {
  if (v.size() == 0) throw SizeError("softmax: empty input");
  Vector<typename Derived::Scalar> e = (v.array() - v.maxCoeff()).exp().matrix();
  return e / e.sum();
}

/// Negative log-likelihood of `label` under `p`, floored at kLossFloor.
template <typename Derived>
typename Derived::Scalar cross_entropy(const Eigen::MatrixBase<Derived>& p, Index label) {
  using S = typename Derived::Scalar;
  using std::log;
  if (label < 0 || label >= p.size())
    throw IndexError("cross_entropy: label " + std::to_string(label) +
                     " out of range for " + std::to_string(p.size()) + " classes");
  return -log(std::max(p(label), S(kLossFloor)));
}

/// Index of the largest entry; ties resolve to the lowest index.
template <typename Derived>
Index argmax(const Eigen::MatrixBase<Derived>& v) {
  Index best = 0;
  for (Index i = 1; i < v.size(); ++i)
    if (v(i) > v(best)) best = i;
  return best;
}

}  // namespace gser

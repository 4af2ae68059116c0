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

// Vanilla RNN, peephole LSTM and GRU sequence classifiers: single-step
// updates, forward unrolling with a softmax readout, backpropagation through
// time and a finite-difference gradient check.
//
// Every gate stores an input map (hidden x input), a recurrent map
// (hidden x hidden), an optional diagonal peephole and an optional bias.
// Biases and peepholes are absent when their vectors are empty.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <string_view>
#include <tuple>
#include <type_traits>
#include <utility>
#include <variant>
#include <vector>

#include "gser/core.hpp"
#include "gser/random.hpp"

namespace gser {

enum class CellKind { rnn, lstm, gru };
enum class Readout { last, mean };

std::string_view to_string(CellKind kind);
/// "rnn", "lstm" or "gru"; throws ConfigError otherwise.
CellKind parse_cell_kind(std::string_view name);
std::string_view to_string(Readout readout);
Readout parse_readout(std::string_view name);

struct CellShape {
  int input_dim = 13;
  int hidden = 1;
  int classes = 7;
  bool use_bias = false;
  bool peepholes = true;  ///< LSTM only
};

template <typename Scalar>
struct Gate {
  Matrix<Scalar> input;
  Matrix<Scalar> recurrent;
  Vector<Scalar> peephole;
  Vector<Scalar> bias;
};

template <typename Scalar>
struct OutputLayer {
  Matrix<Scalar> weights;  ///< classes x hidden
  Vector<Scalar> bias;
};

template <typename Scalar>
struct RnnParams {
  static constexpr CellKind kind = CellKind::rnn;
  Gate<Scalar> hidden;
  OutputLayer<Scalar> output;
};

template <typename Scalar>
struct LstmParams {
  static constexpr CellKind kind = CellKind::lstm;
  Gate<Scalar> input_gate;
  Gate<Scalar> forget_gate;
  Gate<Scalar> output_gate;
  Gate<Scalar> candidate;  ///< never has a peephole
  OutputLayer<Scalar> output;
};

template <typename Scalar>
struct GruParams {
  static constexpr CellKind kind = CellKind::gru;
  Gate<Scalar> update;
  Gate<Scalar> reset;
  Gate<Scalar> candidate;
  OutputLayer<Scalar> output;
};

template <typename P>
inline constexpr bool is_cell_params_v = false;
template <typename S>
inline constexpr bool is_cell_params_v<RnnParams<S>> = true;
template <typename S>
inline constexpr bool is_cell_params_v<LstmParams<S>> = true;
template <typename S>
inline constexpr bool is_cell_params_v<GruParams<S>> = true;

/// Gradients share the parameter layout.
template <typename Params>
struct CellGradients {
  Params grads;
  double global_norm = 0.0;
};

// ---------------------------------------------------------------------------
// Tensor enumeration

namespace detail {

template <typename F, typename... G>
void visit_gate(std::string_view prefix, F& f, G&... gates) {
  const auto& first = std::get<0>(std::forward_as_tuple(gates...));
  const std::string p(prefix);
  f(p + ".input", gates.input...);
  f(p + ".recurrent", gates.recurrent...);
  if (first.peephole.size() > 0) f(p + ".peephole", gates.peephole...);
  if (first.bias.size() > 0) f(p + ".bias", gates.bias...);
}

template <typename F, typename... O>
void visit_output(F& f, O&... outs) {
  const auto& first = std::get<0>(std::forward_as_tuple(outs...));
  f(std::string("output.weights"), outs.weights...);
  if (first.bias.size() > 0) f(std::string("output.bias"), outs.bias...);
}

}  // namespace detail

/// Calls f(name, tensor_of_each_argument...) for every stored tensor, in a
/// fixed order. All arguments must have the same layout.
template <typename F, typename P, typename... Rest>
void visit_tensors(F&& f, P& first, Rest&... rest) {
  using Base = std::remove_const_t<P>;
  static_assert(is_cell_params_v<Base>);
  if constexpr (Base::kind == CellKind::rnn) {
    detail::visit_gate("hidden", f, first.hidden, rest.hidden...);
  } else if constexpr (Base::kind == CellKind::lstm) {
    detail::visit_gate("input_gate", f, first.input_gate, rest.input_gate...);
    detail::visit_gate("forget_gate", f, first.forget_gate, rest.forget_gate...);
    detail::visit_gate("output_gate", f, first.output_gate, rest.output_gate...);
    detail::visit_gate("candidate", f, first.candidate, rest.candidate...);
  } else {
    detail::visit_gate("update", f, first.update, rest.update...);
    detail::visit_gate("reset", f, first.reset, rest.reset...);
    detail::visit_gate("candidate", f, first.candidate, rest.candidate...);
  }
  detail::visit_output(f, first.output, rest.output...);
}

template <typename P>
P zeros_like(const P& params) {
  P out = params;
  visit_tensors([](const std::string&, auto& t) { t.setZero(); }, out);
  return out;
}

template <typename P>
double squared_norm(const P& params) {
  double acc = 0.0;
  visit_tensors([&](const std::string&, const auto& t) { acc += double(t.squaredNorm()); }, params);
  return acc;
}

template <typename P>
bool all_finite(const P& params) {
  bool ok = true;
  visit_tensors([&](const std::string&, const auto& t) { ok = ok && t.allFinite(); }, params);
  return ok;
}

/// Same parameters in another scalar type.
template <typename To, template <typename> class Params, typename From>
Params<To> cast_params(const Params<From>& params) {
  Params<To> out;
  visit_tensors([](const std::string&, const auto& src,
                   auto& dst) { dst = src.template cast<To>(); },
                params, out);
  return out;
}

template <typename P>
CellShape shape_of(const P& params) {
  CellShape s;
  const auto& gate = [&]() -> const auto& {
    if constexpr (P::kind == CellKind::rnn) return params.hidden;
    else if constexpr (P::kind == CellKind::lstm) return params.input_gate;
    else return params.update;
  }();
  s.input_dim = static_cast<int>(gate.input.cols());
  s.hidden = static_cast<int>(gate.input.rows());
  s.classes = static_cast<int>(params.output.weights.rows());
  s.use_bias = gate.bias.size() > 0;
  if constexpr (P::kind == CellKind::lstm) s.peepholes = gate.peephole.size() > 0;
  else s.peepholes = false;
  return s;
}

// ---------------------------------------------------------------------------
// Construction

namespace detail {

template <typename Scalar>
Gate<Scalar> make_gate(const CellShape& s, bool peephole, Rng* rng) {
  Gate<Scalar> g;
  g.input = Matrix<Scalar>::Zero(s.hidden, s.input_dim);
  g.recurrent = Matrix<Scalar>::Zero(s.hidden, s.hidden);
  if (peephole) g.peephole = Vector<Scalar>::Zero(s.hidden);
  if (s.use_bias) g.bias = Vector<Scalar>::Zero(s.hidden);
  if (rng) {
    const double in_scale = 1.0 / std::sqrt(double(s.input_dim));
    const double rec_scale = 1.0 / std::sqrt(double(s.hidden));
    for (Index i = 0; i < g.input.size(); ++i)
      g.input.data()[i] = Scalar(rng->uniform(-in_scale, in_scale));
    for (Index i = 0; i < g.recurrent.size(); ++i)
      g.recurrent.data()[i] = Scalar(rng->uniform(-rec_scale, rec_scale));
    for (Index i = 0; i < g.peephole.size(); ++i)
      g.peephole(i) = Scalar(rng->uniform(-rec_scale, rec_scale));
  }
  return g;
}

template <typename Scalar>
OutputLayer<Scalar> make_output(const CellShape& s, Rng* rng) {
  OutputLayer<Scalar> o;
  o.weights = Matrix<Scalar>::Zero(s.classes, s.hidden);
  if (s.use_bias) o.bias = Vector<Scalar>::Zero(s.classes);
  if (rng) {
    const double scale = 1.0 / std::sqrt(double(s.hidden));
    for (Index i = 0; i < o.weights.size(); ++i)
      o.weights.data()[i] = Scalar(rng->uniform(-scale, scale));
  }
  return o;
}

inline void check_shape(const CellShape& s) {
  if (s.input_dim < 1 || s.hidden < 1 || s.classes < 1)
    throw ShapeError("cell dimensions must be positive");
}

}  // namespace detail

/// Parameters with every weight drawn uniformly from +-1/sqrt(fan_in) and
/// biases at zero. With rng == nullptr everything is zero.
template <typename P>
P make_params(const CellShape& shape, Rng* rng = nullptr) {
  detail::check_shape(shape);
  using S = std::remove_cvref_t<decltype(std::declval<P>().output.weights(0, 0))>;
  P p;
  if constexpr (P::kind == CellKind::rnn) {
    p.hidden = detail::make_gate<S>(shape, false, rng);
  } else if constexpr (P::kind == CellKind::lstm) {
    p.input_gate = detail::make_gate<S>(shape, shape.peepholes, rng);
    p.forget_gate = detail::make_gate<S>(shape, shape.peepholes, rng);
    p.output_gate = detail::make_gate<S>(shape, shape.peepholes, rng);
    p.candidate = detail::make_gate<S>(shape, false, rng);
  } else {
    p.update = detail::make_gate<S>(shape, false, rng);
    p.reset = detail::make_gate<S>(shape, false, rng);
    p.candidate = detail::make_gate<S>(shape, false, rng);
  }
  p.output = detail::make_output<S>(shape, rng);
  return p;
}

/// Scalars stored by the recurrent unit, excluding the output layer.
std::size_t param_count(CellKind kind, int input_dim, int hidden, int classes, bool use_bias,
                        bool peepholes = true);
/// Scalars in the output projection (weights plus optional bias).
std::size_t output_param_count(int hidden, int classes, bool use_bias);

// ---------------------------------------------------------------------------
// Single steps

template <typename Scalar>
using VecRef = std::type_identity_t<Eigen::Ref<const Vector<Scalar>>>;

namespace detail {

template <typename Scalar>
void check_gate_inputs(const Gate<Scalar>& g, Index state_len, Index input_len) {
  if (g.input.cols() != input_len)
    throw ShapeError("input has length " + std::to_string(input_len) + ", expected " +
                     std::to_string(g.input.cols()));
  if (g.recurrent.cols() != state_len)
    throw ShapeError("state has length " + std::to_string(state_len) + ", expected " +
                     std::to_string(g.recurrent.cols()));
}

/// input·x + recurrent·h (+ bias)
template <typename Scalar>
Vector<Scalar> preactivation(const Gate<Scalar>& g, const VecRef<Scalar>& h,
                             const VecRef<Scalar>& x) {
  Vector<Scalar> a = g.input * x;
  a.noalias() += g.recurrent * h;
  if (g.bias.size() > 0) a += g.bias;
  return a;
}

template <typename Scalar>
Vector<Scalar> sigmoid_gate(Vector<Scalar> a) {
  for (Index i = 0; i < a.size(); ++i) a(i) = sigmoid(a(i));
  return a;
}

}  // namespace detail

/// s = tanh(recurrent·s_prev + input·x [+ bias])
template <typename Scalar>
Vector<Scalar> rnn_step(const RnnParams<Scalar>& p, const VecRef<Scalar>& s_prev,
                        const VecRef<Scalar>& x) {
  detail::check_gate_inputs(p.hidden, s_prev.size(), x.size());
  return detail::preactivation(p.hidden, s_prev, x).array().tanh().matrix();
}

template <typename Scalar>
struct LstmStep {
  Vector<Scalar> input_gate, forget_gate, output_gate, candidate;
  Vector<Scalar> cell, cell_tanh, hidden;
};

template <typename Scalar>
LstmStep<Scalar> lstm_step_full(const LstmParams<Scalar>& p, const VecRef<Scalar>& h_prev,
                                const VecRef<Scalar>& c_prev, const VecRef<Scalar>& x) {
  detail::check_gate_inputs(p.input_gate, h_prev.size(), x.size());
  if (c_prev.size() != h_prev.size()) throw ShapeError("lstm: cell and hidden state differ in length");
  LstmStep<Scalar> s;
  Vector<Scalar> ai = detail::preactivation(p.input_gate, h_prev, x);
  Vector<Scalar> af = detail::preactivation(p.forget_gate, h_prev, x);
  if (p.input_gate.peephole.size() > 0) {
    ai += p.input_gate.peephole.cwiseProduct(c_prev);
    af += p.forget_gate.peephole.cwiseProduct(c_prev);
  }
  s.input_gate = detail::sigmoid_gate(std::move(ai));
  s.forget_gate = detail::sigmoid_gate(std::move(af));
  s.candidate = detail::preactivation(p.candidate, h_prev, x).array().tanh().matrix();
  s.cell = s.forget_gate.cwiseProduct(c_prev) + s.input_gate.cwiseProduct(s.candidate);
  Vector<Scalar> ao = detail::preactivation(p.output_gate, h_prev, x);
  if (p.output_gate.peephole.size() > 0) ao += p.output_gate.peephole.cwiseProduct(s.cell);
  s.output_gate = detail::sigmoid_gate(std::move(ao));
  s.cell_tanh = s.cell.array().tanh().matrix();
  s.hidden = s.output_gate.cwiseProduct(s.cell_tanh);
  return s;
}

/// Returns (h, c).
template <typename Scalar>
std::pair<Vector<Scalar>, Vector<Scalar>> lstm_step(const LstmParams<Scalar>& p,
                                                    const VecRef<Scalar>& h_prev,
                                                    const VecRef<Scalar>& c_prev,
                                                    const VecRef<Scalar>& x) {
  auto s = lstm_step_full(p, h_prev, c_prev, x);
  return {std::move(s.hidden), std::move(s.cell)};
}

template <typename Scalar>
struct GruStep {
  Vector<Scalar> update, reset, candidate, hidden;
};

template <typename Scalar>
GruStep<Scalar> gru_step_full(const GruParams<Scalar>& p, const VecRef<Scalar>& h_prev,
                              const VecRef<Scalar>& x) {
  detail::check_gate_inputs(p.update, h_prev.size(), x.size());
  GruStep<Scalar> s;
  s.update = detail::sigmoid_gate(detail::preactivation(p.update, h_prev, x));
  s.reset = detail::sigmoid_gate(detail::preactivation(p.reset, h_prev, x));
  const Vector<Scalar> gated = s.reset.cwiseProduct(h_prev);
  s.candidate = detail::preactivation(p.candidate, gated, x).array().tanh().matrix();
  s.hidden = (Scalar(1) - s.update.array()).matrix().cwiseProduct(h_prev) +
             s.update.cwiseProduct(s.candidate);
  return s;
}

/// h = (1 - z)·h_prev + z·h~ with h~ computed from the reset-gated state.
template <typename Scalar>
Vector<Scalar> gru_step(const GruParams<Scalar>& p, const VecRef<Scalar>& h_prev,
                        const VecRef<Scalar>& x) {
  return gru_step_full(p, h_prev, x).hidden;
}

// ---------------------------------------------------------------------------
// Unrolling

/// Per-timestep record of one forward pass. Rows are timesteps.
template <typename Scalar>
struct Trace {
  Matrix<Scalar> hidden;  ///< T x p exposed states
  // LSTM: gates i, f, o, candidate, cell, tanh(cell); GRU: z, r, candidate.
  std::vector<Matrix<Scalar>> extra;
};

namespace detail {

template <typename Scalar>
void store(Matrix<Scalar>& m, Index t, const Vector<Scalar>& v) {
  m.row(t) = v.transpose();
}

template <typename P, typename Scalar>
Trace<Scalar> run_trace(const P& p, const Matrix<Scalar>& frames) {
  const Index steps = frames.rows();
  if (steps < 1) throw SizeError("cannot unroll an empty sequence");
  const Index hidden = p.output.weights.cols();
  Trace<Scalar> tr;
  tr.hidden.resize(steps, hidden);
  Vector<Scalar> h = Vector<Scalar>::Zero(hidden);
  if constexpr (P::kind == CellKind::rnn) {
    for (Index t = 0; t < steps; ++t) {
      h = rnn_step(p, h, frames.row(t).transpose());
      store(tr.hidden, t, h);
    }
  } else if constexpr (P::kind == CellKind::lstm) {
    tr.extra.assign(6, Matrix<Scalar>(steps, hidden));
    Vector<Scalar> c = Vector<Scalar>::Zero(hidden);
    for (Index t = 0; t < steps; ++t) {
      auto s = lstm_step_full(p, h, c, frames.row(t).transpose());
      store(tr.extra[0], t, s.input_gate);
      store(tr.extra[1], t, s.forget_gate);
      store(tr.extra[2], t, s.output_gate);
      store(tr.extra[3], t, s.candidate);
      store(tr.extra[4], t, s.cell);
      store(tr.extra[5], t, s.cell_tanh);
      store(tr.hidden, t, s.hidden);
      h = std::move(s.hidden);
      c = std::move(s.cell);
    }
  } else {
    tr.extra.assign(3, Matrix<Scalar>(steps, hidden));
    for (Index t = 0; t < steps; ++t) {
      auto s = gru_step_full(p, h, frames.row(t).transpose());
      store(tr.extra[0], t, s.update);
      store(tr.extra[1], t, s.reset);
      store(tr.extra[2], t, s.candidate);
      store(tr.hidden, t, s.hidden);
      h = std::move(s.hidden);
    }
  }
  return tr;
}

template <typename Scalar>
Vector<Scalar> pooled(const Matrix<Scalar>& hidden, Readout readout) {
  if (readout == Readout::last) return hidden.row(hidden.rows() - 1).transpose();
  return hidden.colwise().mean().transpose();
}

}  // namespace detail

template <typename Scalar>
struct ForwardResult {
  Matrix<Scalar> states;  ///< T x p
  Vector<Scalar> logits;
  Vector<Scalar> probs;
};

/// Zero initial state, steps left to right, logits = output·h_T (+ bias).
template <typename P, typename Scalar>
ForwardResult<Scalar> unroll_forward(const P& p, const Matrix<Scalar>& frames,
                                     Readout readout = Readout::last) {
  Trace<Scalar> tr = detail::run_trace(p, frames);
  ForwardResult<Scalar> out;
  out.logits = p.output.weights * detail::pooled(tr.hidden, readout);
  if (p.output.bias.size() > 0) out.logits += p.output.bias;
  out.probs = softmax(out.logits);
  out.states = std::move(tr.hidden);
  return out;
}

template <typename P, typename Scalar>
Scalar sequence_loss(const P& p, const Matrix<Scalar>& frames, Index label,
                     Readout readout = Readout::last) {
  return cross_entropy(unroll_forward(p, frames, readout).probs, label);
}

// ---------------------------------------------------------------------------
// Backpropagation through time

template <typename P>
struct BackwardResult {
  double loss = 0.0;
  CellGradients<P> gradients;
  /// ||d loss / d h_t||_2 for t = 1..T (index 0 is the first step).
  std::vector<double> state_grad_norms;
};

/// Exact reverse-mode gradients of cross_entropy(softmax(logits), label).
/// The log floor only guards the reported loss value; the logit gradient is
/// always probs - onehot(label).
template <typename P, typename Scalar>
BackwardResult<P> bptt_backward(const P& p, const Matrix<Scalar>& frames, Index label,
                                Readout readout = Readout::last) {
  const Trace<Scalar> tr = detail::run_trace(p, frames);
  const Index steps = frames.rows();
  const Index hidden = tr.hidden.cols();

  BackwardResult<P> out;
  out.state_grad_norms.assign(static_cast<std::size_t>(steps), 0.0);
  P& g = out.gradients.grads;
  g = zeros_like(p);

  const Vector<Scalar> pooled = detail::pooled(tr.hidden, readout);
  Vector<Scalar> logits = p.output.weights * pooled;
  if (p.output.bias.size() > 0) logits += p.output.bias;
  const Vector<Scalar> probs = softmax(logits);
  out.loss = double(cross_entropy(probs, label));

  Vector<Scalar> dlogits = probs;
  dlogits(label) -= Scalar(1);
  g.output.weights.noalias() += dlogits * pooled.transpose();
  if (g.output.bias.size() > 0) g.output.bias += dlogits;
  const Vector<Scalar> dpooled = p.output.weights.transpose() * dlogits;

  auto external = [&](Index t) -> Vector<Scalar> {
    if (readout == Readout::mean) return dpooled / Scalar(steps);
    return t == steps - 1 ? dpooled : Vector<Scalar>::Zero(hidden);
  };
  const Vector<Scalar> zero = Vector<Scalar>::Zero(hidden);
  auto prev_hidden = [&](Index t) -> Vector<Scalar> {
    return t == 0 ? zero : Vector<Scalar>(tr.hidden.row(t - 1).transpose());
  };
  auto row = [](const Matrix<Scalar>& m, Index t) -> Vector<Scalar> {
    return m.row(t).transpose();
  };
  auto accumulate = [](Gate<Scalar>& gg, const Vector<Scalar>& da, const auto& x,
                       const Vector<Scalar>& h_in) {
    gg.input.noalias() += da * x;
    gg.recurrent.noalias() += da * h_in.transpose();
    if (gg.bias.size() > 0) gg.bias += da;
  };

  Vector<Scalar> carry = Vector<Scalar>::Zero(hidden);
  if constexpr (P::kind == CellKind::rnn) {
    for (Index t = steps - 1; t >= 0; --t) {
      const Vector<Scalar> dh = external(t) + carry;
      out.state_grad_norms[t] = double(dh.norm());
      const Vector<Scalar> s = row(tr.hidden, t);
      const Vector<Scalar> da = dh.cwiseProduct((Scalar(1) - s.array().square()).matrix());
      accumulate(g.hidden, da, frames.row(t), prev_hidden(t));
      carry.noalias() = p.hidden.recurrent.transpose() * da;
    }
  } else if constexpr (P::kind == CellKind::lstm) {
    const bool peep = p.input_gate.peephole.size() > 0;
    Vector<Scalar> dcell_carry = Vector<Scalar>::Zero(hidden);
    for (Index t = steps - 1; t >= 0; --t) {
      const Vector<Scalar> dh = external(t) + carry;
      out.state_grad_norms[t] = double(dh.norm());
      const auto i = tr.extra[0].row(t).transpose().array();
      const auto f = tr.extra[1].row(t).transpose().array();
      const auto o = tr.extra[2].row(t).transpose().array();
      const auto cand = tr.extra[3].row(t).transpose().array();
      const Vector<Scalar> cell = row(tr.extra[4], t);
      const auto tc = tr.extra[5].row(t).transpose().array();
      const Vector<Scalar> c_prev = t == 0 ? zero : row(tr.extra[4], t - 1);
      const Vector<Scalar> h_prev = prev_hidden(t);

      const Vector<Scalar> dao = (dh.array() * tc * o * (Scalar(1) - o)).matrix();
      Vector<Scalar> dcell =
          (dh.array() * o * (Scalar(1) - tc.square())).matrix() + dcell_carry;
      if (peep) dcell += dao.cwiseProduct(p.output_gate.peephole);
      const Vector<Scalar> daf = (dcell.array() * c_prev.array() * f * (Scalar(1) - f)).matrix();
      const Vector<Scalar> dai = (dcell.array() * cand * i * (Scalar(1) - i)).matrix();
      const Vector<Scalar> dac = (dcell.array() * i * (Scalar(1) - cand.square())).matrix();

      const auto x = frames.row(t);
      accumulate(g.input_gate, dai, x, h_prev);
      accumulate(g.forget_gate, daf, x, h_prev);
      accumulate(g.output_gate, dao, x, h_prev);
      accumulate(g.candidate, dac, x, h_prev);
      if (peep) {
        g.input_gate.peephole += dai.cwiseProduct(c_prev);
        g.forget_gate.peephole += daf.cwiseProduct(c_prev);
        g.output_gate.peephole += dao.cwiseProduct(cell);
      }

      carry.noalias() = p.input_gate.recurrent.transpose() * dai;
      carry.noalias() += p.forget_gate.recurrent.transpose() * daf;
      carry.noalias() += p.output_gate.recurrent.transpose() * dao;
      carry.noalias() += p.candidate.recurrent.transpose() * dac;
      dcell_carry = (dcell.array() * f).matrix();
      if (peep) {
        dcell_carry += dai.cwiseProduct(p.input_gate.peephole);
        dcell_carry += daf.cwiseProduct(p.forget_gate.peephole);
      }
    }
  } else {
    for (Index t = steps - 1; t >= 0; --t) {
      const Vector<Scalar> dh = external(t) + carry;
      out.state_grad_norms[t] = double(dh.norm());
      const auto z = tr.extra[0].row(t).transpose().array();
      const auto r = tr.extra[1].row(t).transpose().array();
      const auto cand = tr.extra[2].row(t).transpose().array();
      const Vector<Scalar> h_prev = prev_hidden(t);
      const Vector<Scalar> gated = (r * h_prev.array()).matrix();

      const Vector<Scalar> daz =
          (dh.array() * (cand - h_prev.array()) * z * (Scalar(1) - z)).matrix();
      const Vector<Scalar> dac = (dh.array() * z * (Scalar(1) - cand.square())).matrix();
      const Vector<Scalar> dgated = p.candidate.recurrent.transpose() * dac;
      const Vector<Scalar> dar = (dgated.array() * h_prev.array() * r * (Scalar(1) - r)).matrix();

      const auto x = frames.row(t);
      accumulate(g.update, daz, x, h_prev);
      accumulate(g.reset, dar, x, h_prev);
      accumulate(g.candidate, dac, x, gated);

      carry = (dh.array() * (Scalar(1) - z) + dgated.array() * r).matrix();
      carry.noalias() += p.update.recurrent.transpose() * daz;
      carry.noalias() += p.reset.recurrent.transpose() * dar;
    }
  }

  out.gradients.global_norm = std::sqrt(squared_norm(g));
  return out;
}

/// Rescales `grads` so its global L2 norm is at most `max_norm` (no-op for
/// max_norm <= 0). Returns the norm before clipping.
template <typename P>
double clip_global_norm(CellGradients<P>& grads, double max_norm) {
  const double norm = std::sqrt(squared_norm(grads.grads));
  grads.global_norm = norm;
  if (max_norm > 0.0 && norm > max_norm) {
    const double scale = max_norm / norm;
    visit_tensors([&](const std::string&, auto& t) { t *= scale; }, grads.grads);
    grads.global_norm = std::sqrt(squared_norm(grads.grads));
  }
  return norm;
}

/// params -= learning_rate * grads
template <typename P>
void sgd_update(P& params, const P& grads, double learning_rate) {
  visit_tensors([&](const std::string&, auto& w, const auto& dw) { w -= learning_rate * dw; },
                params, grads);
}

// ---------------------------------------------------------------------------
// Gradient check

/// Largest |a - n| / max(|a|, |n|, 1e-12) over every coordinate, where n is
/// the central difference of the loss with step `eps` and a comes from
/// `analytic`. The differences are taken in long double so that rounding in
/// the loss does not swamp small gradient entries.
template <template <typename> class Params, typename Scalar>
double max_relative_error(const Params<Scalar>& params, const Matrix<Scalar>& frames, Index label,
                          double eps, const Params<Scalar>& analytic,
                          Readout readout = Readout::last) {
  if (!(eps > 0.0)) throw ConfigError("gradient check step must be positive");
  using Wide = long double;
  auto probe = cast_params<Wide>(params);
  const Matrix<Wide> wide_frames = frames.template cast<Wide>();
  const Wide step = static_cast<Wide>(eps);
  double worst = 0.0;
  visit_tensors(
      [&](const std::string&, auto& w, const auto& a) {
        for (Index k = 0; k < w.size(); ++k) {
          const Wide saved = w.data()[k];
          w.data()[k] = saved + step;
          const Wide up = sequence_loss(probe, wide_frames, label, readout);
          w.data()[k] = saved - step;
          const Wide down = sequence_loss(probe, wide_frames, label, readout);
          w.data()[k] = saved;
          const double numeric = double((up - down) / (2 * step));
          const double exact = double(a.data()[k]);
          const double denom = std::max({std::abs(exact), std::abs(numeric), 1e-12});
          worst = std::max(worst, std::abs(exact - numeric) / denom);
        }
      },
      probe, analytic);
  return worst;
}

template <typename P, typename Scalar>
double grad_check(const P& params, const Matrix<Scalar>& frames, Index label, double eps,
                  Readout readout = Readout::last) {
  if (!(eps > 0.0)) throw ConfigError("gradient check step must be positive");
  const auto bp = bptt_backward(params, frames, label, readout);
  return max_relative_error(params, frames, label, eps, bp.gradients.grads, readout);
}

// ---------------------------------------------------------------------------
// Runtime dispatch over the three cell kinds (double precision)

using AnyParams = std::variant<RnnParams<double>, LstmParams<double>, GruParams<double>>;

AnyParams make_any_params(CellKind kind, const CellShape& shape, Rng* rng = nullptr);
CellKind kind_of(const AnyParams& params);

}  // namespace gser

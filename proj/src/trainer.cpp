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

#include "gser/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <charconv>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>

#include "gser/errors.hpp"
#include "gser/random.hpp"

namespace gser {
namespace {

using Clock = std::chrono::steady_clock;

void check_dataset(const Dataset& data, Index input_dim, int classes, const char* what) {
  for (const auto& s : data) {
    if (s.frames.rows() < 1) throw SizeError(std::string(what) + ": empty sequence " + s.id);
    if (s.frames.cols() != input_dim)
      throw ShapeError(std::string(what) + ": sequence " + s.id + " has " +
                       std::to_string(s.frames.cols()) + " features per frame, expected " +
                       std::to_string(input_dim));
    if (s.label < 0 || s.label >= classes)
      throw IndexError(std::string(what) + ": label out of range in " + s.id);
  }
}

template <typename P>
void run_epochs(P& params, const Dataset& data, const TrainConfig& config, TrainReport& report) {
  Rng order_rng(derive_seed(config.seed, "order"));
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  double norm_sum = 0.0;
  auto& gn = report.grad_norms;
  gn.min = std::numeric_limits<double>::infinity();
  gn.max = 0.0;

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    order_rng.shuffle(order);
    double loss_sum = 0.0;
    for (std::size_t idx : order) {
      const auto& seq = data[idx];
      auto bp = bptt_backward(params, seq.frames, seq.label, config.readout);
      if (!std::isfinite(bp.loss)) throw DivergenceError(epoch);
      loss_sum += bp.loss;
      const double norm = clip_global_norm(bp.gradients, config.clip_norm);
      if (!std::isfinite(norm)) throw DivergenceError(epoch);
      gn.min = std::min(gn.min, norm);
      gn.max = std::max(gn.max, norm);
      norm_sum += norm;
      ++gn.count;
      sgd_update(params, bp.gradients.grads, config.learning_rate);
    }
    if (!all_finite(params)) throw DivergenceError(epoch);
    report.epoch_losses.push_back(loss_sum / static_cast<double>(data.size()));
  }
  if (gn.count == 0) gn.min = 0.0;
  gn.mean = gn.count ? norm_sum / static_cast<double>(gn.count) : 0.0;
}

}  // namespace

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate))
    throw ConfigError("learning rate must be positive and finite");
  if (hidden_cells < 1) throw ConfigError("hidden_cells must be at least 1");
  if (epochs < 0) throw ConfigError("epochs must be non-negative");
  if (classes < 2) throw ConfigError("need at least two classes");
  if (std::isnan(clip_norm)) throw ConfigError("clip_norm must be a number");
}

TrainResult train(CellKind kind, const Dataset& train_set, const TrainConfig& config,
                  const Dataset* validation) {
  config.validate();
  if (train_set.empty()) throw SizeError("train: empty training set");
  const Index input_dim = train_set.front().frames.cols();
  check_dataset(train_set, input_dim, config.classes, "train");
  if (validation) check_dataset(*validation, input_dim, config.classes, "validation");

  const auto start = Clock::now();
  CellShape shape;
  shape.input_dim = static_cast<int>(input_dim);
  shape.hidden = config.hidden_cells;
  shape.classes = config.classes;
  shape.use_bias = config.use_bias;
  shape.peepholes = config.peepholes;
  Rng init_rng(derive_seed(config.seed, "init"));
  TrainResult result{make_any_params(kind, shape, &init_rng), {}};
  std::visit([&](auto& p) { run_epochs(p, train_set, config, result.report); }, result.params);
  result.report.seconds = std::chrono::duration<double>(Clock::now() - start).count();

  const Dataset& scored = validation && !validation->empty() ? *validation : train_set;
  result.report.validation_error = evaluate(result.params, scored, config.readout);
  return result;
}

double evaluate(const AnyParams& params, const Dataset& dataset, Readout readout) {
  if (dataset.empty()) throw SizeError("evaluate: empty dataset");
  std::size_t wrong = 0;
  std::visit(
      [&](const auto& p) {
        for (const auto& seq : dataset) {
          const auto fwd = unroll_forward(p, seq.frames, readout);
          if (argmax(fwd.probs) != seq.label) ++wrong;
        }
      },
      params);
  return static_cast<double>(wrong) / static_cast<double>(dataset.size());
}

std::vector<double> gradient_norm_probe(const AnyParams& params, const MatrixXd& frames, int label,
                                        Readout readout) {
  if (frames.rows() < 2) throw SizeError("gradient probe needs at least two timesteps");
  return std::visit(
      [&](const auto& p) { return bptt_backward(p, frames, label, readout).state_grad_norms; },
      params);
}

double median(std::vector<double> values) {
  if (values.empty()) throw SizeError("median of an empty sample");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

BenchmarkResult benchmark(CellKind kind, const Dataset& dataset, const TrainConfig& config,
                          int repeats, const Dataset* validation) {
  if (repeats < 1) throw ConfigError("benchmark needs at least one repeat");
  BenchmarkResult out;
  out.raw_seconds.reserve(static_cast<std::size_t>(repeats));
  for (int r = 0; r < repeats; ++r) {
    const auto start = Clock::now();
    TrainResult result = train(kind, dataset, config, validation);
    out.raw_seconds.push_back(std::chrono::duration<double>(Clock::now() - start).count());
    if (r == repeats - 1) out.last = std::move(result);
  }
  out.median_seconds = median(out.raw_seconds);
  return out;
}

void write_train_report(std::ostream& os, const TrainReport& report, bool diverged) {
  auto num = [](double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
  };
  os << "epoch,mean_loss\n";
  for (std::size_t e = 0; e < report.epoch_losses.size(); ++e)
    os << (e + 1) << ',' << num(report.epoch_losses[e]) << '\n';
  os << '\n';
  os << "final_error = " << num(report.validation_error) << '\n';
  os << "seconds = " << num(report.seconds) << '\n';
  os << "diverged = " << (diverged ? "true" : "false") << '\n';
  os << "grad_norm_min = " << num(report.grad_norms.min) << '\n';
  os << "grad_norm_mean = " << num(report.grad_norms.mean) << '\n';
  os << "grad_norm_max = " << num(report.grad_norms.max) << '\n';
}

}  // namespace gser

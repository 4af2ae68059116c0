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

// Seeded per-sequence SGD with global-norm clipping, evaluation, the
// gradient-norm probe and median-of-N runtime benchmarking.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "gser/cells.hpp"

namespace gser {

struct LabeledSequence {
  MatrixXd frames;  ///< T x d
  int label = 0;
  std::string id;
};

using Dataset = std::vector<LabeledSequence>;

struct TrainConfig {
  double learning_rate = 1.0;
  bool use_bias = false;
  int hidden_cells = 1;
  int epochs = 50;
  std::uint64_t seed = 0;
  double clip_norm = 5.0;  ///< <= 0 disables clipping
  Readout readout = Readout::last;
  bool peepholes = true;
  int classes = 7;

  /// Positive finite learning rate, hidden_cells >= 1, epochs >= 0.
  void validate() const;
};

struct GradNormSummary {
  double min = 0.0;
  double mean = 0.0;
  double max = 0.0;
  std::size_t count = 0;
};

struct TrainReport {
  std::vector<double> epoch_losses;  ///< mean training loss per epoch
  double validation_error = 0.0;
  double seconds = 0.0;              ///< wall time of initialisation + epochs
  GradNormSummary grad_norms;        ///< pre-clip global norms
};

struct TrainResult {
  AnyParams params;
  TrainReport report;
};

/// Trains from seeded initial parameters. After training the model is scored
/// on `validation`, or on the training set when no validation set is given.
/// Throws DivergenceError when an epoch produces a non-finite loss.
TrainResult train(CellKind kind, const Dataset& train_set, const TrainConfig& config,
                  const Dataset* validation = nullptr);

/// Fraction of sequences whose argmax prediction differs from the label.
double evaluate(const AnyParams& params, const Dataset& dataset, Readout readout = Readout::last);

/// ||d loss / d h_t|| for every timestep of one sequence (T >= 2).
std::vector<double> gradient_norm_probe(const AnyParams& params, const MatrixXd& frames, int label,
                                        Readout readout = Readout::last);

struct BenchmarkResult {
  double median_seconds = 0.0;
  std::vector<double> raw_seconds;
  TrainResult last;  ///< result of the final repeat
};

/// Median of an odd-or-even sample (mean of the two middle values when even).
double median(std::vector<double> values);

/// Runs the full train loop `repeats` times on identical inputs and reports
/// the median wall-clock time of the train call.
BenchmarkResult benchmark(CellKind kind, const Dataset& dataset, const TrainConfig& config,
                          int repeats = 5, const Dataset* validation = nullptr);

/// `epoch,mean_loss` rows, a blank line, then `key = value` summary lines.
void write_train_report(std::ostream& os, const TrainReport& report, bool diverged = false);

}  // namespace gser

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

// End-to-end experiments: noisy-corpus construction, feature extraction,
// training grids (single point, learning-rate sweep, cell-count sweep),
// result tables, runtime comparison and plot-data emission.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "gser/corpus.hpp"
#include "gser/dsp.hpp"
#include "gser/mixer.hpp"
#include "gser/trainer.hpp"

namespace gser {

enum class SweepAxis { none, learning_rate, cells };

std::string_view to_string(SweepAxis axis);
SweepAxis parse_sweep_axis(std::string_view name);

/// Learning rates 1, 1e-1, ..., 1e-9.
std::vector<double> learning_rate_grid();
/// Hidden sizes 1, 2, 4, 8, 16, 32.
std::vector<int> cell_grid();

struct ExperimentConfig {
  std::filesystem::path corpus;
  std::filesystem::path noise_corpus;
  std::filesystem::path label_csv;  ///< optional label override
  std::filesystem::path output = "results";
  std::vector<std::string> noise_kinds = {"none"};  ///< "none" or one of the 8 kinds
  SnrSpec snr = SnrSpec::target(10.0);
  std::vector<CellKind> models = {CellKind::gru, CellKind::lstm};
  SweepAxis sweep = SweepAxis::none;
  TrainConfig base;
  std::uint64_t seed = 1;
  double train_fraction = 0.75;
  int max_per_class = 0;  ///< 0 keeps the whole corpus
  bool normalize = false;
  int bench_repeats = 5;
  MfccConfig mfcc;

  /// Checks field ranges; paths are checked when an experiment starts.
  void validate() const;
};

/// Parses `key = value` lines; `#` starts a comment. Throws ConfigError.
ExperimentConfig parse_config(std::istream& is);
ExperimentConfig load_config(const std::filesystem::path& path);
/// Applies one `key=value` override on top of an existing configuration.
void apply_config_entry(ExperimentConfig& config, const std::string& key, const std::string& value);

struct ExperimentRow {
  std::string noise;  ///< "none" for clean speech
  CellKind model = CellKind::gru;
  double learning_rate = 1.0;
  bool use_bias = false;
  int cells = 1;
  std::string snr_db;  ///< dB value, "raw", or "clean"
  double val_error = 0.0;
  double median_seconds = 0.0;  ///< not deterministic
  bool diverged = false;
  std::uint64_t seed = 0;
};

struct ExperimentResult {
  std::vector<ExperimentRow> rows;
  bool any_diverged() const;
};

inline constexpr std::string_view kResultsHeader =
    "noise,model,learning_rate,use_bias,cells,snr_db,val_error,median_seconds,diverged,seed";

void write_results_csv(const ExperimentResult& result, const std::filesystem::path& path);
ExperimentResult read_results_csv(const std::filesystem::path& path);

/// Seed of one experiment cell; independent of the order cells run in.
std::uint64_t cell_seed(std::uint64_t global_seed, std::string_view noise, CellKind model,
                        std::string_view sweep_point);

/// Clean utterances and the stratified split shared by every cell.
struct PreparedCorpus {
  std::vector<Utterance> train;
  std::vector<Utterance> validation;
};

PreparedCorpus prepare_corpus(const ExperimentConfig& config);

/// Mixes (unless noise is "none") and extracts MFCCs for every utterance.
Dataset build_dataset(const std::vector<Utterance>& utterances, const std::string& noise,
                      const std::optional<NoiseRecording>& recording,
                      const ExperimentConfig& config, const MfccExtractor& extractor);

/// Runs every (noise, model, sweep point) cell of the configured grid and
/// writes `results.csv` plus one report per cell under the output directory.
/// Cells whose report already exists are read back instead of re-run.
ExperimentResult run_experiment(const ExperimentConfig& config);
ExperimentResult sweep_learning_rate(ExperimentConfig config);
ExperimentResult sweep_cells(ExperimentConfig config);

struct RuntimePair {
  std::string noise;
  double lstm_seconds = 0.0;
  double gru_seconds = 0.0;
  double percent = 0.0;  ///< 100 (LSTM - GRU) / LSTM
};

struct RuntimeComparison {
  std::vector<RuntimePair> pairs;
  double aggregate_percent = 0.0;  ///< from the mean LSTM and mean GRU medians
};

/// Pairs GRU and LSTM rows with identical (noise, rate, bias, cells).
RuntimeComparison compare_runtime(const ExperimentResult& result);

/// Writes whitespace-delimited plot data into `dir` and returns the files.
std::vector<std::filesystem::path> emit_plot_data(const ExperimentResult& result,
                                                  const std::filesystem::path& dir);

/// Worker count from GATED_SER_THREADS, else the hardware concurrency.
unsigned worker_threads();

}  // namespace gser

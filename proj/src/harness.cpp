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

#include "gser/harness.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>
#include <tuple>

#include "gser/errors.hpp"
#include "gser/random.hpp"

namespace gser {
namespace {

std::string num(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

double parse_num(const std::string& s) {
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw FormatError("bad number '" + s + "'");
  return v;
}

std::uint64_t parse_u64(const std::string& s) {
  std::uint64_t v = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw FormatError("bad integer '" + s + "'");
  return v;
}

/// Runs fn(i) for i in [0, n) on the worker pool.
template <typename Fn>
void parallel_for(std::size_t n, Fn fn) {
  const unsigned workers = std::min<std::size_t>(worker_threads(), std::max<std::size_t>(n, 1));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

struct SweepPoint {
  double learning_rate;
  bool use_bias;
  int cells;

  std::string tag() const {
    return "lr" + num(learning_rate) + "-bias" + (use_bias ? "1" : "0") + "-p" +
           std::to_string(cells);
  }
};

std::vector<SweepPoint> sweep_points(const ExperimentConfig& c) {
  std::vector<SweepPoint> pts;
  switch (c.sweep) {
    case SweepAxis::none:
      pts.push_back({c.base.learning_rate, c.base.use_bias, c.base.hidden_cells});
      break;
    case SweepAxis::learning_rate:
      for (double lr : learning_rate_grid())
        for (bool bias : {false, true}) pts.push_back({lr, bias, c.base.hidden_cells});
      break;
    case SweepAxis::cells:
      for (int p : cell_grid())
        for (bool bias : {false, true}) pts.push_back({c.base.learning_rate, bias, p});
      break;
  }
  return pts;
}

std::map<std::string, std::string> read_key_values(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find(" = ");
    if (eq != std::string::npos) kv[line.substr(0, eq)] = line.substr(eq + 3);
  }
  return kv;
}

void write_cell_report(const std::filesystem::path& path, const ExperimentRow& row,
                       const TrainReport& report, const std::vector<double>& raw_seconds) {
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary);
    if (!os) throw IoError("cannot write " + tmp);
    write_train_report(os, report, row.diverged);
    os << "noise = " << row.noise << '\n';
    os << "model = " << to_string(row.model) << '\n';
    os << "learning_rate = " << num(row.learning_rate) << '\n';
    os << "use_bias = " << (row.use_bias ? 1 : 0) << '\n';
    os << "cells = " << row.cells << '\n';
    os << "snr_db = " << row.snr_db << '\n';
    os << "seed = " << row.seed << '\n';
    os << "median_seconds = " << num(row.median_seconds) << '\n';
    os << "raw_seconds =";
    for (double s : raw_seconds) os << ' ' << num(s);
    os << '\n';
    if (!os) throw IoError("write failed for " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace

std::vector<double> learning_rate_grid() {
  std::vector<double> rates;
  for (int e = 0; e <= 9; ++e) rates.push_back(std::pow(10.0, -e));
  return rates;
}

std::vector<int> cell_grid() { return {1, 2, 4, 8, 16, 32}; }

bool ExperimentResult::any_diverged() const {
  return std::any_of(rows.begin(), rows.end(), [](const auto& r) { return r.diverged; });
}

void write_results_csv(const ExperimentResult& result, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot write " + path.string());
  os << kResultsHeader << '\n';
  for (const auto& r : result.rows) {
    os << r.noise << ',' << to_string(r.model) << ',' << num(r.learning_rate) << ','
       << (r.use_bias ? 1 : 0) << ',' << r.cells << ',' << r.snr_db << ',' << num(r.val_error)
       << ',' << num(r.median_seconds) << ',' << (r.diverged ? 1 : 0) << ',' << r.seed << '\n';
  }
  if (!os) throw IoError("write failed for " + path.string());
}

ExperimentResult read_results_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  std::getline(in, line);
  if (line != kResultsHeader) throw FormatError("unexpected results header in " + path.string());
  ExperimentResult result;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::string field;
    std::istringstream is(line);
    while (std::getline(is, field, ',')) f.push_back(field);
    if (f.size() != 10) throw FormatError("results row needs 10 fields: " + line);
    ExperimentRow r;
    r.noise = f[0];
    r.model = parse_cell_kind(f[1]);
    r.learning_rate = parse_num(f[2]);
    r.use_bias = f[3] == "1";
    r.cells = static_cast<int>(parse_u64(f[4]));
    r.snr_db = f[5];
    r.val_error = parse_num(f[6]);
    r.median_seconds = parse_num(f[7]);
    r.diverged = f[8] == "1";
    r.seed = parse_u64(f[9]);
    result.rows.push_back(std::move(r));
  }
  return result;
}

std::uint64_t cell_seed(std::uint64_t global_seed, std::string_view noise, CellKind model,
                        std::string_view sweep_point) {
  return derive_seed(global_seed, noise, to_string(model), sweep_point);
}

unsigned worker_threads() {
  unsigned n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("GATED_SER_THREADS")) {
    const std::string_view s(env);
    unsigned cap = 0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), cap);
    if (res.ec == std::errc() && cap > 0) n = std::min(n, cap);
  }
  return n;
}

PreparedCorpus prepare_corpus(const ExperimentConfig& config) {
  if (config.corpus.empty() || !std::filesystem::is_directory(config.corpus))
    throw SetupError("corpus directory not found: " + config.corpus.string());
  const LabelOverrides overrides =
      config.label_csv.empty() ? LabelOverrides{} : read_label_overrides(config.label_csv);
  ManifestBuild build = build_manifest(config.corpus, overrides);
  for (const auto& w : build.warnings) std::clog << "warning: " << w << '\n';
  Manifest manifest = std::move(build.manifest);
  if (config.max_per_class > 0)
    manifest = subsample_per_class(manifest, config.max_per_class, derive_seed(config.seed, "subsample"));
  auto [train_m, val_m] =
      stratified_split(manifest, config.train_fraction, derive_seed(config.seed, "split"));

  auto load_all = [](const Manifest& m) {
    std::vector<Utterance> out(m.entries.size());
    parallel_for(out.size(), [&](std::size_t i) {
      out[i] = load_utterance(m.entries[i]);
      out[i].samples = to_speech_rate(out[i].samples, out[i].sample_rate);
      out[i].sample_rate = kSpeechRate;
    });
    return out;
  };
  return PreparedCorpus{load_all(train_m), load_all(val_m)};
}

Dataset build_dataset(const std::vector<Utterance>& utterances, const std::string& noise,
                      const std::optional<NoiseRecording>& recording,
                      const ExperimentConfig& config, const MfccExtractor& extractor) {
  Dataset data(utterances.size());
  parallel_for(utterances.size(), [&](std::size_t i) {
    const Utterance& u = utterances[i];
    std::vector<double> samples;
    if (recording) {
      SnrSpec spec = config.snr;
      spec.segment_seed = derive_seed(config.seed, "mix", noise, u.id);
      samples = mix(u, *recording, spec).utterance.samples;
    } else {
      samples = u.samples;
    }
    FeatureSequence seq = extractor.compute(samples, u.id);
    if (config.normalize) zscore_normalize(seq);
    data[i] = LabeledSequence{std::move(seq.frames), static_cast<int>(u.label), u.id};
  });
  return data;
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
  config.validate();
  for (const auto& k : config.noise_kinds)
    if (k != "none" && !std::filesystem::is_directory(config.noise_corpus))
      throw SetupError("noise corpus directory not found: " + config.noise_corpus.string());

  const auto cell_dir = config.output / "cells";
  std::filesystem::create_directories(cell_dir);

  std::optional<PreparedCorpus> corpus;
  const MfccExtractor extractor(config.mfcc);
  const auto points = sweep_points(config);
  ExperimentResult result;

  for (const auto& noise : config.noise_kinds) {
    std::optional<Dataset> train_set, val_set;
    auto ensure_data = [&] {
      if (train_set) return;
      if (!corpus) corpus = prepare_corpus(config);
      std::optional<NoiseRecording> recording;
      if (noise != "none") {
        recording = load_noise(config.noise_corpus, parse_noise_kind(noise));
        recording->samples = to_speech_rate(recording->samples, recording->sample_rate);
        recording->sample_rate = kSpeechRate;
      }
      train_set = build_dataset(corpus->train, noise, recording, config, extractor);
      val_set = build_dataset(corpus->validation, noise, recording, config, extractor);
      if (train_set->empty()) throw SetupError("no training utterances after the split");
    };

    for (CellKind model : config.models) {
      for (const auto& pt : points) {
        ExperimentRow row;
        row.noise = noise;
        row.model = model;
        row.learning_rate = pt.learning_rate;
        row.use_bias = pt.use_bias;
        row.cells = pt.cells;
        row.snr_db = noise == "none" ? "clean" : snr_label(config.snr);
        row.seed = cell_seed(config.seed, noise, model, pt.tag());

        const auto report_path =
            cell_dir / (noise + "-" + std::string(to_string(model)) + "-" + pt.tag() + ".txt");
        if (std::filesystem::exists(report_path)) {
          const auto kv = read_key_values(report_path);
          const auto same = [&](const char* key, const std::string& want) {
            const auto it = kv.find(key);
            return it != kv.end() && it->second == want;
          };
          if (same("seed", std::to_string(row.seed)) && same("snr_db", row.snr_db) &&
              kv.count("final_error") && kv.count("median_seconds") && kv.count("diverged")) {
            row.val_error = parse_num(kv.at("final_error"));
            row.median_seconds = parse_num(kv.at("median_seconds"));
            row.diverged = kv.at("diverged") == "true";
            result.rows.push_back(std::move(row));
            continue;
          }
        }

        ensure_data();
        TrainConfig tc = config.base;
        tc.learning_rate = pt.learning_rate;
        tc.use_bias = pt.use_bias;
        tc.hidden_cells = pt.cells;
        tc.seed = row.seed;
        TrainReport report;
        std::vector<double> raw;
        try {
          const Dataset* validation = val_set->empty() ? nullptr : &*val_set;
          BenchmarkResult bench = benchmark(model, *train_set, tc, config.bench_repeats, validation);
          report = std::move(bench.last.report);
          raw = std::move(bench.raw_seconds);
          row.val_error = report.validation_error;
          row.median_seconds = bench.median_seconds;
        } catch (const DivergenceError& e) {
          std::clog << "cell " << report_path.filename().string() << ": " << e.what() << '\n';
          row.diverged = true;
          row.val_error = 1.0;
          report.validation_error = 1.0;
        }
        write_cell_report(report_path, row, report, raw);
        result.rows.push_back(std::move(row));
      }
    }
  }

  write_results_csv(result, config.output / "results.csv");
  return result;
}

ExperimentResult sweep_learning_rate(ExperimentConfig config) {
  config.sweep = SweepAxis::learning_rate;
  return run_experiment(config);
}

ExperimentResult sweep_cells(ExperimentConfig config) {
  config.sweep = SweepAxis::cells;
  return run_experiment(config);
}

RuntimeComparison compare_runtime(const ExperimentResult& result) {
  using Key = std::tuple<std::string, double, bool, int>;
  std::map<Key, const ExperimentRow*> gru, lstm;
  std::vector<Key> order;
  for (const auto& r : result.rows) {
    if (r.model != CellKind::gru && r.model != CellKind::lstm) continue;
    const Key key{r.noise, r.learning_rate, r.use_bias, r.cells};
    auto& side = r.model == CellKind::gru ? gru : lstm;
    if (!side.emplace(key, &r).second)
      throw PairingError("duplicate " + std::string(to_string(r.model)) + " row for noise " + r.noise);
    if (std::find(order.begin(), order.end(), key) == order.end()) order.push_back(key);
  }
  if (order.empty()) throw PairingError("no GRU or LSTM rows to compare");

  RuntimeComparison out;
  double sum_lstm = 0.0, sum_gru = 0.0;
  for (const auto& key : order) {
    const auto g = gru.find(key);
    const auto l = lstm.find(key);
    if (g == gru.end() || l == lstm.end())
      throw PairingError("no " + std::string(g == gru.end() ? "GRU" : "LSTM") +
                         " counterpart for noise " + std::get<0>(key));
    RuntimePair pair;
    pair.noise = std::get<0>(key);
    pair.lstm_seconds = l->second->median_seconds;
    pair.gru_seconds = g->second->median_seconds;
    pair.percent = pair.lstm_seconds > 0.0
                       ? 100.0 * (pair.lstm_seconds - pair.gru_seconds) / pair.lstm_seconds
                       : 0.0;
    sum_lstm += pair.lstm_seconds;
    sum_gru += pair.gru_seconds;
    out.pairs.push_back(pair);
  }
  out.aggregate_percent = sum_lstm > 0.0 ? 100.0 * (sum_lstm - sum_gru) / sum_lstm : 0.0;
  return out;
}

std::vector<std::filesystem::path> emit_plot_data(const ExperimentResult& result,
                                                  const std::filesystem::path& dir) {
  if (result.rows.empty()) throw SizeError("emit_plot_data: empty result");
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string());

  std::set<double> rates;
  std::set<int> cells;
  for (const auto& r : result.rows) {
    rates.insert(r.learning_rate);
    cells.insert(r.cells);
  }

  std::vector<std::filesystem::path> written;
  auto open = [&](const std::string& name) {
    written.push_back(dir / name);
    std::ofstream os(written.back(), std::ios::binary);
    if (!os) throw IoError("cannot write " + written.back().string());
    return os;
  };
  auto finish = [&](std::ofstream& os) {
    if (!os) throw IoError("write failed for " + written.back().string());
  };

  if (rates.size() > 1) {
    auto os = open("error_vs_learning_rate.dat");
    os << "# x: learning_rate  y: val_error\n# model noise use_bias learning_rate val_error\n";
    for (const auto& r : result.rows)
      os << to_string(r.model) << ' ' << r.noise << ' ' << (r.use_bias ? 1 : 0) << ' '
         << num(r.learning_rate) << ' ' << num(r.val_error) << '\n';
    finish(os);
  }
  if (cells.size() > 1) {
    auto os = open("error_vs_cells.dat");
    os << "# x: cells  y: val_error\n# model noise use_bias cells val_error\n";
    for (const auto& r : result.rows)
      os << to_string(r.model) << ' ' << r.noise << ' ' << (r.use_bias ? 1 : 0) << ' ' << r.cells
         << ' ' << num(r.val_error) << '\n';
    finish(os);
  }
  if (rates.size() <= 1 && cells.size() <= 1) {
    std::vector<std::string> noises;
    std::vector<CellKind> models;
    std::map<std::pair<std::string, CellKind>, const ExperimentRow*> cell;
    for (const auto& r : result.rows) {
      if (std::find(noises.begin(), noises.end(), r.noise) == noises.end()) noises.push_back(r.noise);
      if (std::find(models.begin(), models.end(), r.model) == models.end()) models.push_back(r.model);
      cell[{r.noise, r.model}] = &r;
    }
    auto bars = [&](const std::string& name, const char* axis, auto value) {
      auto os = open(name);
      os << "# x: noise  y: " << axis << "\n# noise";
      for (auto m : models) os << ' ' << to_string(m);
      os << '\n';
      for (const auto& n : noises) {
        os << n;
        for (auto m : models) {
          const auto it = cell.find({n, m});
          os << ' ' << (it == cell.end() ? std::string("nan") : num(value(*it->second)));
        }
        os << '\n';
      }
      finish(os);
    };
    bars("error_per_noise.dat", "val_error", [](const ExperimentRow& r) { return r.val_error; });
    bars("runtime_per_noise.dat", "median_seconds",
         [](const ExperimentRow& r) { return r.median_seconds; });
  }
  return written;
}

}  // namespace gser

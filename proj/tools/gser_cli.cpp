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

// gser: command-line front end for the noisy-speech emotion pipeline.
//
//   gser manifest   --corpus DIR --out manifest.csv [--labels labels.csv]
//   gser mix        --clean in.wav --noise noise.wav --kind cafe --snr 10|raw --out out.wav
//   gser features   --in speech.wav --out features.csv [--normalize]
//   gser train      --config exp.conf [--set key=value ...]
//   gser sweep-lr   --config exp.conf
//   gser sweep-cells --config exp.conf
//   gser compare    --results results.csv
//   gser bench      --config exp.conf [--repeats 5]
//   gser report     --results results.csv --out plots/
//
// Exit codes: 0 success, 2 configuration error, 3 corpus error, 4 some cells
// diverged, 1 anything else.

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include "gser/corpus.hpp"
#include "gser/dsp.hpp"
#include "gser/errors.hpp"
#include "gser/harness.hpp"
#include "gser/mixer.hpp"
#include "gser/random.hpp"
#include "gser/trainer.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitCorpus = 3;
constexpr int kExitPartial = 4;

gser::ExperimentConfig load_with_overrides(const std::string& path,
                                           const std::vector<std::string>& overrides) {
  gser::ExperimentConfig config = gser::load_config(path);
  for (const auto& kv : overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw gser::ConfigError("--set expects key=value, got " + kv);
    gser::apply_config_entry(config, kv.substr(0, eq), kv.substr(eq + 1));
  }
  config.validate();
  return config;
}

int finish_experiment(const gser::ExperimentResult& result, const gser::ExperimentConfig& config) {
  std::cout << "wrote " << result.rows.size() << " rows to "
            << (config.output / "results.csv").string() << '\n';
  return result.any_diverged() ? kExitPartial : 0;
}

void print_comparison(const gser::RuntimeComparison& cmp) {
  std::printf("%-10s %14s %14s %10s\n", "noise", "lstm_median_s", "gru_median_s", "gru_gain_%");
  for (const auto& p : cmp.pairs)
    std::printf("%-10s %14.6f %14.6f %10.2f\n", p.noise.c_str(), p.lstm_seconds, p.gru_seconds,
                p.percent);
  std::printf("aggregate GRU runtime reduction: %.2f%% (reference figure 18.16%%)\n",
              cmp.aggregate_percent);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Emotion classification from noisy speech with GRU/LSTM/RNN classifiers"};
  app.require_subcommand(1);

  std::string corpus, out, labels;
  auto* manifest_cmd = app.add_subcommand("manifest", "Index a clean-speech corpus");
  manifest_cmd->add_option("--corpus", corpus, "Directory of EMO-DB WAV files")->required();
  manifest_cmd->add_option("--out", out, "Manifest CSV to write")->required();
  manifest_cmd->add_option("--labels", labels, "Optional id,label override CSV");

  std::string clean, noise, kind = "traffic", snr = "10";
  std::uint64_t seed = 0;
  auto* mix_cmd = app.add_subcommand("mix", "Superimpose noise on one utterance");
  mix_cmd->add_option("--clean", clean, "Clean 16 kHz WAV")->required();
  mix_cmd->add_option("--noise", noise, "Noise WAV (16 or 48 kHz)")->required();
  mix_cmd->add_option("--kind", kind, "traffic|cafe|living|park|washing|car|office|river");
  mix_cmd->add_option("--snr", snr, "Target SNR in dB, or 'raw'");
  mix_cmd->add_option("--seed", seed, "Segment seed");
  mix_cmd->add_option("--out", out, "Mixed WAV to write")->required();

  std::string input;
  bool normalize = false;
  auto* feat_cmd = app.add_subcommand("features", "Dump 13-coefficient MFCCs of one WAV");
  feat_cmd->add_option("--in", input, "Input WAV")->required();
  feat_cmd->add_option("--out", out, "Feature CSV to write")->required();
  feat_cmd->add_flag("--normalize", normalize, "Z-score each coefficient");

  std::string config_path;
  std::vector<std::string> overrides;
  auto add_config = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "Experiment configuration file")->required();
    cmd->add_option("--set", overrides, "Override a configuration key (key=value)");
  };
  auto* train_cmd = app.add_subcommand("train", "Run the configured experiment grid");
  add_config(train_cmd);
  auto* sweep_lr_cmd = app.add_subcommand("sweep-lr", "Learning-rate x bias sweep");
  add_config(sweep_lr_cmd);
  auto* sweep_cells_cmd = app.add_subcommand("sweep-cells", "Cell-count x bias sweep");
  add_config(sweep_cells_cmd);

  std::string results;
  auto* compare_cmd = app.add_subcommand("compare", "GRU vs LSTM runtime comparison");
  compare_cmd->add_option("--results", results, "results.csv")->required();

  int repeats = 5;
  auto* bench_cmd = app.add_subcommand("bench", "Median-of-N training runtime on clean speech");
  add_config(bench_cmd);
  bench_cmd->add_option("--repeats", repeats, "Timed repeats per model");

  auto* report_cmd = app.add_subcommand("report", "Write plot-data files from results");
  report_cmd->add_option("--results", results, "results.csv")->required();
  report_cmd->add_option("--out", out, "Output directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*manifest_cmd) {
      const auto overrides_table =
          labels.empty() ? gser::LabelOverrides{} : gser::read_label_overrides(labels);
      auto build = gser::build_manifest(corpus, overrides_table);
      for (const auto& w : build.warnings) std::cerr << "warning: " << w << '\n';
      gser::write_manifest_csv(build.manifest, out);
      const auto counts = build.manifest.class_counts();
      for (int i = 0; i < gser::kNumEmotions; ++i)
        std::cout << gser::kEmotionNames[i] << ' ' << counts[i] << '\n';
      std::cout << "total " << build.manifest.entries.size() << '\n';
    } else if (*mix_cmd) {
      gser::Audio speech = gser::load_wav(clean);
      gser::Utterance u{clean, "", gser::Emotion::neutral,
                        gser::to_speech_rate(speech.samples, speech.sample_rate),
                        gser::kSpeechRate};
      gser::Audio noise_audio = gser::load_wav(noise);
      gser::NoiseRecording rec{gser::parse_noise_kind(kind), std::move(noise_audio.samples),
                               noise_audio.sample_rate};
      rec.samples = gser::to_speech_rate(rec.samples, rec.sample_rate);
      rec.sample_rate = gser::kSpeechRate;
      const gser::SnrSpec spec = snr == "raw" ? gser::SnrSpec::raw(seed)
                                              : gser::SnrSpec::target(std::stod(snr), seed);
      const auto mixed = gser::mix(u, rec, spec);
      gser::write_wav(out, mixed.utterance.samples, gser::kSpeechRate);
      std::cout << "snr_db " << mixed.achieved_snr_db << " noise_gain " << mixed.noise_gain
                << " clip_gain " << mixed.clip_gain << " offset " << mixed.noise_offset << '\n';
    } else if (*feat_cmd) {
      gser::Audio a = gser::load_wav(input);
      const auto samples = gser::to_speech_rate(a.samples, a.sample_rate);
      const gser::MfccConfig cfg;
      auto seq = gser::MfccExtractor(cfg).compute(samples,
                                                  std::filesystem::path(input).stem().string());
      if (normalize) gser::zscore_normalize(seq);
      gser::write_features_csv(seq, cfg, out);
      std::cout << seq.frames.rows() << " frames x " << seq.frames.cols() << " coefficients\n";
    } else if (*train_cmd) {
      const auto config = load_with_overrides(config_path, overrides);
      return finish_experiment(gser::run_experiment(config), config);
    } else if (*sweep_lr_cmd) {
      const auto config = load_with_overrides(config_path, overrides);
      return finish_experiment(gser::sweep_learning_rate(config), config);
    } else if (*sweep_cells_cmd) {
      const auto config = load_with_overrides(config_path, overrides);
      return finish_experiment(gser::sweep_cells(config), config);
    } else if (*compare_cmd) {
      print_comparison(gser::compare_runtime(gser::read_results_csv(results)));
    } else if (*bench_cmd) {
      const auto config = load_with_overrides(config_path, overrides);
      const auto corpus_data = gser::prepare_corpus(config);
      const gser::MfccExtractor extractor(config.mfcc);
      const auto data = gser::build_dataset(corpus_data.train, "none", std::nullopt, config, extractor);
      gser::ExperimentResult result;
      for (gser::CellKind model : config.models) {
        gser::TrainConfig tc = config.base;
        tc.seed = gser::cell_seed(config.seed, "none", model, "bench");
        const auto bench = gser::benchmark(model, data, tc, repeats);
        gser::ExperimentRow row;
        row.noise = "none";
        row.model = model;
        row.median_seconds = bench.median_seconds;
        row.seed = tc.seed;
        result.rows.push_back(row);
        std::cout << gser::to_string(model) << " median " << bench.median_seconds << " s over "
                  << repeats << " runs\n";
      }
      print_comparison(gser::compare_runtime(result));
    } else if (*report_cmd) {
      for (const auto& p : gser::emit_plot_data(gser::read_results_csv(results), out))
        std::cout << p.string() << '\n';
    }
  } catch (const gser::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const gser::SetupError& e) {
    std::cerr << "corpus error: " << e.what() << '\n';
    return kExitCorpus;
  } catch (const gser::EmptyCorpusError& e) {
    std::cerr << "corpus error: " << e.what() << '\n';
    return kExitCorpus;
  } catch (const gser::LabelDecodeError& e) {
    std::cerr << "corpus error: " << e.what() << '\n';
    return kExitCorpus;
  } catch (const gser::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

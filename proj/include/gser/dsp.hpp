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

// MFCC front-end and the 48 kHz -> 16 kHz noise resampler.

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "gser/core.hpp"

namespace gser {

inline constexpr int kSpeechRate = 16000;
inline constexpr int kNumCepstra = 13;

struct MfccConfig {
  double frame_len = 0.025;  ///< seconds
  double hop = 0.010;        ///< seconds
  int n_fft = 0;             ///< 0 selects the next power of two >= frame samples
  int n_mels = 26;
  int n_coeffs = kNumCepstra;
  double log_floor = 1e-10;
  int sample_rate = kSpeechRate;

  int frame_samples() const;
  int hop_samples() const;
  int fft_size() const;
  /// Throws ConfigError when the invariants do not hold.
  void validate() const;
  /// Stable 64-bit digest of every field, used to tag feature dumps.
  std::uint64_t hash() const;
};

struct FeatureSequence {
  MatrixXd frames;  ///< T x n_coeffs
  std::string utterance_id;
};

/// Taps of the 101-point windowed-sinc anti-aliasing filter (7.2 kHz cutoff at
/// 48 kHz, Blackman window, unit DC gain).
const std::vector<double>& decimation_filter();

/// Low-pass filters and keeps every third sample. Output length is N / 3.
std::vector<double> resample_48k_to_16k(std::span<const double> samples);

/// Brings noise at 48 kHz (or already at 16 kHz) to the speech rate.
std::vector<double> to_speech_rate(std::span<const double> samples, int sample_rate);

/// Rows are frames of `frame_length` samples taken every `hop` samples; the
/// tail remainder is dropped.
MatrixXd frame_signal(std::span<const double> samples, int frame_length, int hop);
MatrixXd frame_signal(std::span<const double> samples, const MfccConfig& config);

VectorXd hamming_window(int length);

/// |DFT_k|^2 / n_fft for k = 0..n_fft/2 of the zero-padded frame.
VectorXd power_spectrum(std::span<const double> frame, int n_fft);

double hz_to_mel(double hz);
double mel_to_hz(double mel);

/// Centre frequencies (Hz) of the triangular mel filters.
std::vector<double> mel_center_frequencies(int n_mels, int sample_rate);

/// n_mels x (n_fft/2 + 1) triangular filters, each scaled so its largest
/// weight is 1.
MatrixXd mel_filterbank(int n_mels, int n_fft, int sample_rate);

/// Orthonormal DCT-II as an n x n matrix (row k = basis function k).
MatrixXd dct_matrix(int n);

/// Holds the window, filterbank and DCT for one configuration. Immutable after
/// construction; safe to share between threads.
class MfccExtractor {
 public:
  explicit MfccExtractor(MfccConfig config = {});

  const MfccConfig& config() const { return config_; }
  const MatrixXd& filterbank() const { return filterbank_; }

  /// T x n_mels mel-band energies, no log.
  MatrixXd mel_energies(std::span<const double> samples) const;
  /// T x n_mels floored log energies.
  MatrixXd log_mel_energies(std::span<const double> samples) const;
  FeatureSequence compute(std::span<const double> samples, std::string utterance_id = {}) const;

 private:
  MfccConfig config_;
  VectorXd window_;
  MatrixXd filterbank_;
  MatrixXd dct_;  ///< n_coeffs x n_mels
};

FeatureSequence mfcc(std::span<const double> samples, const MfccConfig& config = {});

/// Per-coefficient zero-mean unit-variance scaling over the frames.
void zscore_normalize(FeatureSequence& features);

/// Writes `<path>` (one CSV row per frame) and `<path>.meta` holding
/// `id=<id> T=<frames> config=<hex hash>`.
void write_features_csv(const FeatureSequence& features, const MfccConfig& config,
                        const std::filesystem::path& path);
FeatureSequence read_features_csv(const std::filesystem::path& path);

}  // namespace gser

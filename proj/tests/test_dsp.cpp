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

#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <numbers>

#include "fixtures.hpp"
#include "gser/dsp.hpp"

namespace gser {
namespace {

using std::numbers::pi;

std::vector<double> tone(double hz, int rate, int n, double amplitude = 1.0) {
  std::vector<double> x(n);
  for (int i = 0; i < n; ++i) x[i] = amplitude * std::sin(2.0 * pi * hz * i / rate);
  return x;
}

std::vector<double> random_signal(int n, Rng& rng, double amplitude = 0.5) {
  std::vector<double> x(n);
  for (auto& v : x) v = rng.uniform(-amplitude, amplitude);
  return x;
}

double rms(std::span<const double> x) {
  double acc = 0.0;
  for (double v : x) acc += v * v;
  return std::sqrt(acc / static_cast<double>(x.size()));
}

// ---------------------------------------------------------------------------
// Resampler

// Independent design: 101-tap sinc at fc = 7.2 kHz / 48 kHz, Blackman window,
// scaled to unit DC gain.
std::vector<double> reference_taps() {
  const int n = 101, mid = 50;
  const double fc = 7200.0 / 48000.0;
  std::vector<double> h(n);
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    const double k = i - mid;
    const double ideal = k == 0 ? 2.0 * fc : std::sin(2.0 * pi * fc * k) / (pi * k);
    const double w = 0.42 - 0.5 * std::cos(2.0 * pi * i / (n - 1)) + 0.08 * std::cos(4.0 * pi * i / (n - 1));
    h[i] = ideal * w;
    sum += h[i];
  }
  for (auto& v : h) v /= sum;
  return h;
}

double magnitude_response(const std::vector<double>& h, double hz, double rate) {
  std::complex<double> acc = 0.0;
  for (std::size_t i = 0; i < h.size(); ++i)
    acc += h[i] * std::polar(1.0, -2.0 * pi * hz / rate * static_cast<double>(i));
  return std::abs(acc);
}

TEST(Resampler, FilterMatchesIndependentDesign) {
  const auto& h = decimation_filter();
  const auto ref = reference_taps();
  ASSERT_EQ(h.size(), 101u);
  for (std::size_t i = 0; i < h.size(); ++i) EXPECT_NEAR(h[i], ref[i], 1e-12) << i;
  for (std::size_t i = 0; i < h.size(); ++i) EXPECT_NEAR(h[i], h[h.size() - 1 - i], 1e-15);
}

TEST(Resampler, StopbandResponseOracle) {
  const auto ref = reference_taps();
  EXPECT_NEAR(magnitude_response(ref, 0.0, 48000), 1.0, 1e-12);
  EXPECT_LT(magnitude_response(ref, 20000.0, 48000), 0.01);
  // Worst case over the band that aliases into 0..8 kHz after decimation.
  double worst = 0.0;
  for (double f = 10000.0; f <= 24000.0; f += 25.0)
    worst = std::max(worst, magnitude_response(ref, f, 48000));
  EXPECT_LT(worst, 0.01);
}

TEST(Resampler, ConstantSignalKeepsItsLevel) {
  const std::vector<double> x(4800, 0.37);
  const auto y = resample_48k_to_16k(x);
  ASSERT_EQ(y.size(), 1600u);
  for (std::size_t i = 20; i + 20 < y.size(); ++i) EXPECT_NEAR(y[i], 0.37, 1e-6);
}

TEST(Resampler, OutputLengthIsAThird) {
  EXPECT_EQ(resample_48k_to_16k(std::vector<double>(48000, 0.0)).size(), 16000u);
  EXPECT_EQ(resample_48k_to_16k(std::vector<double>(3001, 0.0)).size(), 1000u);
  EXPECT_EQ(resample_48k_to_16k(std::vector<double>(3, 0.0)).size(), 1u);
  EXPECT_THROW(resample_48k_to_16k(std::vector<double>(2, 0.0)), TooShortError);
}

TEST(Resampler, TwentyKilohertzToneIsSuppressed) {
  const auto x = tone(20000.0, 48000, 48000);
  const auto y = resample_48k_to_16k(x);
  const std::span<const double> interior(y.data() + 50, y.size() - 100);
  EXPECT_LT(rms(interior), 0.01 * rms(x));
}

TEST(Resampler, PassbandToneSurvives) {
  const auto x = tone(1000.0, 48000, 48000);
  const auto y = resample_48k_to_16k(x);
  const std::span<const double> interior(y.data() + 50, y.size() - 100);
  EXPECT_NEAR(rms(interior), rms(x), 0.01 * rms(x));
}

TEST(Resampler, SpeechRateDispatch) {
  const std::vector<double> x(480, 0.1);
  EXPECT_EQ(to_speech_rate(x, 16000), x);
  EXPECT_EQ(to_speech_rate(x, 48000).size(), 160u);
  EXPECT_THROW(to_speech_rate(x, 44100), UnsupportedFormatError);
}

// ---------------------------------------------------------------------------
// Framing and window

TEST(Framing, CountExamples) {
  EXPECT_EQ(frame_signal(std::vector<double>(16000, 0.0), 400, 160).rows(), 98);
  EXPECT_EQ(frame_signal(std::vector<double>(400, 0.0), 400, 160).rows(), 1);
  EXPECT_THROW(frame_signal(std::vector<double>(399, 0.0), 400, 160), TooShortError);
  const MfccConfig cfg;
  EXPECT_EQ(cfg.frame_samples(), 400);
  EXPECT_EQ(cfg.hop_samples(), 160);
  EXPECT_EQ(cfg.fft_size(), 512);
}

TEST(Framing, RandomizedCountAndContent) {
  Rng rng(40);
  for (int trial = 0; trial < 200; ++trial) {
    const int L = 1 + static_cast<int>(rng.below(300));
    const int H = 1 + static_cast<int>(rng.below(200));
    const int N = L + static_cast<int>(rng.below(2000));
    std::vector<double> x(N);
    for (int i = 0; i < N; ++i) x[i] = i;
    const MatrixXd f = frame_signal(x, L, H);
    ASSERT_EQ(f.rows(), 1 + (N - L) / H);
    ASSERT_EQ(f.cols(), L);
    const Index t = f.rows() - 1;
    EXPECT_EQ(f(t, L - 1), static_cast<double>(t * H + L - 1));
  }
}

TEST(Hamming, EndpointsCentreAndSymmetry) {
  for (int L : {2, 5, 101, 400}) {
    const VectorXd w = hamming_window(L);
    EXPECT_NEAR(w(0), 0.08, 1e-15);
    for (int n = 0; n < L; ++n) EXPECT_NEAR(w(n), w(L - 1 - n), 1e-15);
    if (L % 2 == 1) EXPECT_NEAR(w((L - 1) / 2), 1.0, 1e-15);
  }
  EXPECT_THROW(hamming_window(1), SizeError);
}

// ---------------------------------------------------------------------------
// Spectrum

TEST(PowerSpectrum, ZeroAndImpulse) {
  EXPECT_EQ(power_spectrum(std::vector<double>(400, 0.0), 512), VectorXd::Zero(257));
  std::vector<double> impulse(400, 0.0);
  impulse[0] = 1.0;
  const VectorXd p = power_spectrum(impulse, 512);
  ASSERT_EQ(p.size(), 257);
  for (Index k = 0; k < p.size(); ++k) EXPECT_NEAR(p(k), 1.0 / 512, 1e-15);
}

TEST(PowerSpectrum, MatchesNaiveDftAndParseval) {
  Rng rng(41);
  for (int trial = 0; trial < 10; ++trial) {
    const auto x = random_signal(400, rng);
    const VectorXd p = power_spectrum(x, 512);
    const auto ref = testing::naive_power_spectrum(x, 512);
    for (int k = 0; k <= 256; ++k) EXPECT_NEAR(p(k), ref[k], 1e-10 * (1.0 + ref[k]));

    double full = p(0) + p(256);
    for (int k = 1; k < 256; ++k) full += 2.0 * p(k);
    double energy = 0.0;
    for (double v : x) energy += v * v;
    EXPECT_NEAR(full / energy, 1.0, 1e-9);
  }
}

// ---------------------------------------------------------------------------
// Mel filterbank and DCT

TEST(Mel, ScaleExamples) {
  EXPECT_NEAR(hz_to_mel(700.0), 2595.0 * std::log10(2.0), 1e-9);
  EXPECT_NEAR(hz_to_mel(700.0), 781.17, 5e-3);
  EXPECT_EQ(hz_to_mel(0.0), 0.0);
  for (double f : {10.0, 440.0, 3999.0, 8000.0}) EXPECT_NEAR(mel_to_hz(hz_to_mel(f)), f, 1e-9);
}

TEST(Mel, FiltersAreNonEmptyPeakNormalisedAndOverlap) {
  const MatrixXd fb = mel_filterbank(26, 512, 16000);
  ASSERT_EQ(fb.rows(), 26);
  ASSERT_EQ(fb.cols(), 257);
  EXPECT_GE(fb.minCoeff(), 0.0);
  auto support = [&](Index r) {
    Index lo = -1, hi = -1;
    for (Index k = 0; k < fb.cols(); ++k)
      if (fb(r, k) > 0.0) {
        if (lo < 0) lo = k;
        hi = k;
      }
    return std::pair{lo, hi};
  };
  for (Index r = 0; r < fb.rows(); ++r) {
    EXPECT_GT(fb.row(r).maxCoeff(), 0.0) << r;
    EXPECT_LE(fb.row(r).maxCoeff(), 1.0 + 1e-12) << r;
  }
  for (Index r = 0; r + 1 < fb.rows(); ++r) EXPECT_LE(support(r + 1).first, support(r).second) << r;

  const auto centres = mel_center_frequencies(26, 16000);
  ASSERT_EQ(centres.size(), 26u);
  const double step = hz_to_mel(8000.0) / 27.0;
  for (std::size_t i = 0; i < centres.size(); ++i)
    EXPECT_NEAR(hz_to_mel(centres[i]), step * static_cast<double>(i + 1), 1e-9);
}

TEST(Mel, TooManyFiltersForResolutionRejected) {
  EXPECT_THROW(mel_filterbank(200, 64, 16000), FilterbankError);
  EXPECT_THROW(mel_filterbank(1, 512, 16000), FilterbankError);
}

TEST(Dct, OrthonormalAndInvertible) {
  const MatrixXd d = dct_matrix(26);
  EXPECT_LE((d * d.transpose() - MatrixXd::Identity(26, 26)).cwiseAbs().maxCoeff(), 1e-12);
  // Direct DCT-II definition.
  for (int k = 0; k < 26; ++k)
    for (int n = 0; n < 26; ++n) {
      const double scale = k == 0 ? std::sqrt(1.0 / 26) : std::sqrt(2.0 / 26);
      EXPECT_NEAR(d(k, n), scale * std::cos(pi * k * (2 * n + 1) / 52.0), 1e-12);
    }

  Rng rng(42);
  const auto x = random_signal(4000, rng);
  MfccConfig full;
  full.n_coeffs = 26;
  const MfccExtractor ex(full);
  const MatrixXd logmel = ex.log_mel_energies(x);
  const MatrixXd c = ex.compute(x).frames;
  const MatrixXd back = c * d;
  EXPECT_LE((back - logmel).cwiseAbs().maxCoeff(), 1e-9);
}

// ---------------------------------------------------------------------------
// MFCC

TEST(Mfcc, ThirteenFiniteColumns) {
  Rng rng(43);
  for (int n : {400, 401, 1234, 16000}) {
    const auto f = mfcc(random_signal(n, rng, 1.0));
    EXPECT_EQ(f.frames.cols(), 13);
    EXPECT_EQ(f.frames.rows(), 1 + (n - 400) / 160);
    EXPECT_TRUE(f.frames.allFinite());
  }
  const auto silent = mfcc(std::vector<double>(4000, 0.0));
  EXPECT_TRUE(silent.frames.allFinite());
  EXPECT_THROW(mfcc(std::vector<double>(100, 0.0)), TooShortError);
}

TEST(Mfcc, GainOnlyShiftsC0) {
  Rng rng(44);
  const MfccExtractor ex;
  for (int trial = 0; trial < 20; ++trial) {
    const auto x = random_signal(3200, rng, 0.09);
    const double g = std::exp(rng.uniform(std::log(0.1), std::log(10.0)));
    std::vector<double> y(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = g * x[i];
    const MatrixXd a = ex.compute(x).frames, b = ex.compute(y).frames;
    ASSERT_GT(ex.mel_energies(x).minCoeff(), 1e-10);
    ASSERT_GT(ex.mel_energies(y).minCoeff(), 1e-10);
    const double shift = std::sqrt(26.0) * std::log(g * g);
    for (Index t = 0; t < a.rows(); ++t) {
      EXPECT_NEAR(b(t, 0) - a(t, 0), shift, 1e-9);
      for (Index k = 1; k < 13; ++k) EXPECT_NEAR(b(t, k), a(t, k), 1e-9) << "g=" << g;
    }
  }
}

TEST(Mfcc, OneKilohertzTonePeaksInNearestFilter) {
  const auto centres = mel_center_frequencies(26, 16000);
  std::size_t nearest = 0;
  for (std::size_t i = 1; i < centres.size(); ++i)
    if (std::abs(centres[i] - 1000.0) < std::abs(centres[nearest] - 1000.0)) nearest = i;
  const MatrixXd e = MfccExtractor().mel_energies(tone(1000.0, 16000, 16000, 0.5));
  const VectorXd mean = e.colwise().mean().transpose();
  EXPECT_EQ(argmax(mean), static_cast<Index>(nearest));
}

TEST(Mfcc, ConfigValidationAndHash) {
  MfccConfig c;
  EXPECT_NO_THROW(c.validate());
  MfccConfig other = c;
  other.n_mels = 40;
  EXPECT_NE(c.hash(), other.hash());
  EXPECT_EQ(c.hash(), MfccConfig{}.hash());
  MfccConfig bad = c;
  bad.n_coeffs = 30;
  EXPECT_THROW(bad.validate(), ConfigError);
  bad = c;
  bad.hop = 0.0;
  EXPECT_THROW(bad.validate(), ConfigError);
}

TEST(Mfcc, ZscoreGivesZeroMeanUnitVariance) {
  Rng rng(45);
  auto f = mfcc(random_signal(8000, rng));
  zscore_normalize(f);
  for (Index k = 0; k < 13; ++k) {
    const auto col = f.frames.col(k);
    const double mean = col.mean();
    const double var = (col.array() - mean).square().mean();
    EXPECT_NEAR(mean, 0.0, 1e-12);
    EXPECT_NEAR(var, 1.0, 1e-9);
  }
}

TEST(Mfcc, FeatureDumpRoundTrip) {
  Rng rng(46);
  const auto dir = testing::temp_dir("features");
  auto f = mfcc(random_signal(3000, rng));
  f.utterance_id = "03a01Wa";
  write_features_csv(f, MfccConfig{}, dir / "f.csv");
  const auto g = read_features_csv(dir / "f.csv");
  EXPECT_EQ(g.utterance_id, "03a01Wa");
  EXPECT_EQ(g.frames, f.frames);
  std::ifstream meta(dir / "f.csv.meta");
  std::string line;
  std::getline(meta, line);
  EXPECT_NE(line.find("T=" + std::to_string(f.frames.rows())), std::string::npos);
}

}  // namespace
}  // namespace gser

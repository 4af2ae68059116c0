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

// Test-only helpers: independent numerical oracles and synthetic corpora.

#include <cmath>
#include <complex>
#include <filesystem>
#include <numbers>
#include <string>
#include <vector>

#include "gser/cells.hpp"
#include "gser/corpus.hpp"
#include "gser/random.hpp"
#include "gser/trainer.hpp"

namespace gser::testing {

/// Fresh, empty directory under the system temp dir.
inline std::filesystem::path temp_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("gser_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

/// O(N^2) DFT power spectrum, |X_k|^2 / n for k = 0..n/2.
inline std::vector<double> naive_power_spectrum(const std::vector<double>& frame, int n) {
  std::vector<double> out(n / 2 + 1);
  for (int k = 0; k <= n / 2; ++k) {
    std::complex<double> acc = 0.0;
    for (int i = 0; i < static_cast<int>(frame.size()); ++i)
      acc += frame[i] * std::polar(1.0, -2.0 * std::numbers::pi * k * i / n);
    out[k] = std::norm(acc) / n;
  }
  return out;
}

/// Central-difference gradient of the sequence loss, laid out like the params.
/// Losses are evaluated in long double; in double the rounding of the loss
/// (about 1e-16 / eps) is comparable to the smallest gradient entries.
template <template <typename> class Params>
Params<double> finite_difference_gradient(const Params<double>& params, const MatrixXd& frames,
                                          int label, double eps,
                                          Readout readout = Readout::last) {
  using Wide = long double;
  Params<Wide> probe = make_params<Params<Wide>>(shape_of(params));
  visit_tensors([](const std::string&, auto& dst, const auto& src) {
    for (Index k = 0; k < dst.size(); ++k) dst.data()[k] = static_cast<Wide>(src.data()[k]);
  }, probe, params);
  const Matrix<Wide> x = frames.cast<Wide>();
  const Wide h = eps;
  Params<double> grad = zeros_like(params);
  visit_tensors(
      [&](const std::string&, auto& w, auto& g) {
        for (Index k = 0; k < w.size(); ++k) {
          const Wide saved = w.data()[k];
          w.data()[k] = saved + h;
          const Wide up = sequence_loss(probe, x, label, readout);
          w.data()[k] = saved - h;
          const Wide down = sequence_loss(probe, x, label, readout);
          w.data()[k] = saved;
          g.data()[k] = static_cast<double>((up - down) / (2 * h));
        }
      },
      probe, grad);
  return grad;
}

/// max over coordinates of |a - n| / max(|a|, |n|, 1e-12)
template <typename P>
double max_rel_diff(const P& analytic, const P& numeric) {
  double worst = 0.0;
  visit_tensors(
      [&](const std::string&, const auto& a, const auto& n) {
        for (Index k = 0; k < a.size(); ++k) {
          const double x = a.data()[k], y = n.data()[k];
          worst = std::max(worst, std::abs(x - y) / std::max({std::abs(x), std::abs(y), 1e-12}));
        }
      },
      analytic, numeric);
  return worst;
}

/// Random params with every entry (biases and peepholes included) drawn from
/// U(-scale, scale).
template <typename P>
P random_params(const CellShape& shape, Rng& rng, double scale = 1.0) {
  P p = make_params<P>(shape);
  visit_tensors(
      [&](const std::string&, auto& t) {
        for (Index k = 0; k < t.size(); ++k) t.data()[k] = rng.uniform(-scale, scale);
      },
      p);
  return p;
}

inline MatrixXd random_frames(Index steps, Index dim, Rng& rng) {
  MatrixXd x(steps, dim);
  for (Index i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();
  return x;
}

/// Class-separated synthetic sequences: each class has its own mean frame.
inline Dataset separable_dataset(int per_class, int classes, Index steps, Index dim,
                                 std::uint64_t seed, double noise = 0.5) {
  Rng rng(seed);
  std::vector<VectorXd> centres;
  for (int c = 0; c < classes; ++c) {
    VectorXd m(dim);
    for (Index i = 0; i < dim; ++i) m(i) = rng.uniform(-1.5, 1.5);
    centres.push_back(m);
  }
  Dataset out;
  for (int n = 0; n < per_class; ++n)
    for (int c = 0; c < classes; ++c) {
      LabeledSequence s;
      s.frames.resize(steps, dim);
      for (Index t = 0; t < steps; ++t)
        for (Index i = 0; i < dim; ++i) s.frames(t, i) = centres[c](i) + noise * rng.normal();
      s.label = c;
      s.id = "c" + std::to_string(c) + "_" + std::to_string(n);
      out.push_back(std::move(s));
    }
  return out;
}

inline constexpr char kEmotionLetters[kNumEmotions] = {'W', 'L', 'E', 'A', 'F', 'N', 'T'};

/// Writes `per_class` EMO-DB-named utterances per emotion. Each emotion is a
/// harmonic tone at its own pitch with a little noise, so MFCCs separate them.
inline void write_synthetic_corpus(const std::filesystem::path& dir, int per_class,
                                   std::uint64_t seed, double seconds = 0.4) {
  std::filesystem::create_directories(dir);
  Rng rng(seed);
  const int n = static_cast<int>(seconds * 16000);
  for (int c = 0; c < kNumEmotions; ++c) {
    const double f0 = 150.0 * std::pow(1.35, c);
    for (int k = 0; k < per_class; ++k) {
      std::vector<double> x(n);
      const double jitter = 1.0 + 0.02 * rng.uniform(-1.0, 1.0);
      for (int i = 0; i < n; ++i) {
        const double t = i / 16000.0;
        double v = 0.0;
        for (int h = 1; h <= 4; ++h)
          v += std::sin(2.0 * std::numbers::pi * f0 * jitter * h * t) / h;
        x[i] = 0.3 * v / 2.1 + 0.01 * rng.normal();
      }
      char name[32];
      std::snprintf(name, sizeof name, "%02da%02d%c%c.wav", 3 + k % 10, k, kEmotionLetters[c],
                    'a' + (k / 10) % 26);
      write_wav(dir / name, x, 16000);
    }
  }
}

/// Writes `<kind>.wav` at 48 kHz for the given kinds (band-limited noise).
inline void write_synthetic_noise(const std::filesystem::path& dir,
                                  const std::vector<std::string>& kinds, double seconds,
                                  std::uint64_t seed) {
  std::filesystem::create_directories(dir);
  const int n = static_cast<int>(seconds * 48000);
  for (std::size_t k = 0; k < kinds.size(); ++k) {
    Rng rng(derive_seed(seed, kinds[k]));
    std::vector<double> x(n);
    double state = 0.0;
    const double pole = 0.3 + 0.08 * static_cast<double>(k);
    for (int i = 0; i < n; ++i) {
      state = pole * state + (1.0 - pole) * rng.normal();
      x[i] = std::clamp(0.2 * state, -1.0, 1.0);
    }
    write_wav(dir / (kinds[k] + ".wav"), x, 48000);
  }
}

}  // namespace gser::testing

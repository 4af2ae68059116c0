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

#include "gser/mixer.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>

#include "gser/errors.hpp"
#include "gser/random.hpp"

namespace gser {

std::string snr_label(const SnrSpec& spec) {
  if (spec.mode == SnrMode::raw_add) return "raw";
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, spec.target_db);
  return std::string(buf, res.ptr);
}

double measure_power(std::span<const double> samples) {
  if (samples.empty()) throw SizeError("measure_power: empty signal");
  double acc = 0.0;
  for (double s : samples) acc += s * s;
  return acc / static_cast<double>(samples.size());
}

MixedUtterance mix(const Utterance& clean, const NoiseRecording& noise, const SnrSpec& spec) {
  if (clean.samples.empty()) throw SizeError("mix: empty clean signal");
  if (clean.sample_rate != noise.sample_rate)
    throw LengthError("mix: clean is " + std::to_string(clean.sample_rate) + " Hz but noise is " +
                      std::to_string(noise.sample_rate) + " Hz");
  const std::size_t n = clean.samples.size();
  if (noise.samples.size() < n)
    throw LengthError("mix: noise (" + std::to_string(noise.samples.size()) +
                      " samples) shorter than clean signal (" + std::to_string(n) + ")");

  MixedUtterance out;
  out.noise_kind = noise.kind;
  Rng rng(spec.segment_seed);
  out.noise_offset = static_cast<std::size_t>(rng.below(noise.samples.size() - n + 1));
  const std::span<const double> segment(noise.samples.data() + out.noise_offset, n);

  const double p_clean = measure_power(clean.samples);
  const double p_segment = measure_power(segment);
  if (spec.mode == SnrMode::target_db) {
    if (!std::isfinite(spec.target_db)) throw ConfigError("mix: target SNR must be finite");
    if (p_clean == 0.0) throw UndefinedSnrError("mix: clean signal is silent");
    if (p_segment == 0.0) throw UndefinedSnrError("mix: noise segment is silent");
    out.noise_gain = std::sqrt(p_clean / (p_segment * std::pow(10.0, spec.target_db / 10.0)));
  }

  out.utterance = clean;
  auto& mixed = out.utterance.samples;
  double peak = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mixed[i] = clean.samples[i] + out.noise_gain * segment[i];
    peak = std::max(peak, std::abs(mixed[i]));
  }
  if (peak > 1.0) {
    out.clip_gain = 1.0 / peak;
    for (double& s : mixed) s *= out.clip_gain;
  }

  const double p_noise = out.noise_gain * out.noise_gain * p_segment;
  out.achieved_snr_db = p_noise > 0.0 ? 10.0 * std::log10(p_clean / p_noise)
                                      : std::numeric_limits<double>::infinity();
  return out;
}

std::vector<double> scaled_noise_segment(const MixedUtterance& mixed, const NoiseRecording& noise) {
  const std::size_t n = mixed.utterance.samples.size();
  if (mixed.noise_offset + n > noise.samples.size())
    throw LengthError("noise recording does not cover the mixed segment");
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i)
    out[i] = mixed.noise_gain * noise.samples[mixed.noise_offset + i];
  return out;
}

double verify_snr(const MixedUtterance& mixed, std::span<const double> clean,
                  std::span<const double> scaled_noise) {
  if (clean.size() != scaled_noise.size() || clean.size() != mixed.utterance.samples.size())
    throw LengthError("verify_snr: constituents differ in length");
  const double p_noise = measure_power(scaled_noise);
  if (p_noise == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(measure_power(clean) / p_noise);
}

}  // namespace gser

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

// Additive superposition of environmental noise on clean speech at a
// controlled signal-to-noise ratio.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "gser/corpus.hpp"

namespace gser {

enum class SnrMode { target_db, raw_add };

struct SnrSpec {
  SnrMode mode = SnrMode::target_db;
  double target_db = 10.0;
  std::uint64_t segment_seed = 0;

  static SnrSpec target(double db, std::uint64_t seed = 0) {
    return {SnrMode::target_db, db, seed};
  }
  static SnrSpec raw(std::uint64_t seed = 0) { return {SnrMode::raw_add, 0.0, seed}; }
};

/// Label used in result tables: the dB value, or "raw" for unscaled mixing.
std::string snr_label(const SnrSpec& spec);

struct MixedUtterance {
  Utterance utterance;  ///< mixed samples, clean metadata
  NoiseKind noise_kind = NoiseKind::traffic;
  double achieved_snr_db = 0.0;
  std::size_t noise_offset = 0;  ///< start of the noise segment used
  double noise_gain = 1.0;       ///< g applied to the segment
  double clip_gain = 1.0;        ///< whole-mixture rescale, 1 when no overflow
};

/// Mean-square power. Throws SizeError on empty input.
double measure_power(std::span<const double> samples);

/// Picks a seeded segment of `noise`, scales it and adds it to `clean`.
/// In target_db mode g = sqrt(P_clean / (P_segment * 10^(snr/10))); raw_add
/// uses g = 1. A mixture whose peak exceeds 1 is rescaled by 1/peak.
MixedUtterance mix(const Utterance& clean, const NoiseRecording& noise, const SnrSpec& spec);

/// g * noise[offset, offset + n): the noise exactly as it was added.
std::vector<double> scaled_noise_segment(const MixedUtterance& mixed, const NoiseRecording& noise);

/// 10 log10(P_clean / P_noise); +infinity when the noise is silent.
double verify_snr(const MixedUtterance& mixed, std::span<const double> clean,
                  std::span<const double> scaled_noise);

}  // namespace gser

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

// Clean-speech and noise corpus ingestion: WAV decoding, EMO-DB label
// decoding, manifests and the stratified train/validation split.

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace gser {

enum class Emotion : int { anger = 0, boredom, disgust, fear, joy, neutral, sadness };

inline constexpr int kNumEmotions = 7;

inline constexpr std::array<std::string_view, kNumEmotions> kEmotionNames = {
    "anger", "boredom", "disgust", "fear", "joy", "neutral", "sadness"};

/// Per-class utterance counts of the full EMO-DB release, in Emotion order.
inline constexpr std::array<int, kNumEmotions> kEmoDbClassCounts = {127, 81, 46, 69,
                                                                     71,  79, 62};

std::string_view to_string(Emotion e);
/// Parses a lowercase category name ("anger", ...); throws LabelDecodeError.
Emotion parse_emotion(std::string_view name);

/// Decodes the emotion from an EMO-DB file name such as "03a01Wa.wav".
/// The sixth character carries the German initial of the emotion.
Emotion decode_emodb_label(std::string_view filename);

struct Audio {
  std::vector<double> samples;
  int sample_rate = 0;
};

/// Reads 16-bit PCM RIFF/WAVE; channel 0 only, samples scaled by 1/32768.
Audio load_wav(const std::filesystem::path& path);

/// Writes mono 16-bit PCM. Samples are clamped to [-1, 1) and rounded.
void write_wav(const std::filesystem::path& path, const std::vector<double>& samples,
               int sample_rate);

struct Utterance {
  std::string id;
  std::string speaker;
  Emotion label = Emotion::neutral;
  std::vector<double> samples;
  int sample_rate = 0;
};

enum class NoiseKind { traffic, cafe, living, park, washing, car, office, river };

inline constexpr int kNumNoiseKinds = 8;
inline constexpr std::array<std::string_view, kNumNoiseKinds> kNoiseKindNames = {
    "traffic", "cafe", "living", "park", "washing", "car", "office", "river"};

std::string_view to_string(NoiseKind k);
/// Throws ConfigError for names outside the eight supported kinds.
NoiseKind parse_noise_kind(std::string_view name);
/// DEMAND environment directory that holds recordings of this kind.
std::string_view demand_directory(NoiseKind k);

struct NoiseRecording {
  NoiseKind kind = NoiseKind::traffic;
  std::vector<double> samples;
  int sample_rate = 0;
};

/// Finds `<dir>/<kind>.wav` or the DEMAND layout `<dir>/<ENV>/ch01.wav` and
/// loads it; throws SetupError when neither exists.
NoiseRecording load_noise(const std::filesystem::path& noise_dir, NoiseKind kind);

struct ManifestEntry {
  std::string id;
  std::filesystem::path path;
  Emotion label = Emotion::neutral;
  std::string speaker;

  friend bool operator==(const ManifestEntry&, const ManifestEntry&) = default;
};

struct Manifest {
  std::vector<ManifestEntry> entries;
  std::uint64_t split_seed = 0;

  std::array<int, kNumEmotions> class_counts() const;
};

struct ManifestBuild {
  Manifest manifest;
  std::vector<std::string> warnings;
};

/// Optional label override: CSV `id,label` (header line required).
using LabelOverrides = std::vector<std::pair<std::string, Emotion>>;
LabelOverrides read_label_overrides(const std::filesystem::path& csv);

/// One entry per *.wav in `directory`, sorted by id. Warns when the per-class
/// counts differ from the EMO-DB inventory.
ManifestBuild build_manifest(const std::filesystem::path& directory,
                             const LabelOverrides& overrides = {});

void write_manifest_csv(const Manifest& manifest, const std::filesystem::path& path);
Manifest read_manifest_csv(const std::filesystem::path& path);

/// Per class: seeded shuffle, then ceil(fraction * n) entries to training.
/// Entries keep their manifest order inside each output.
std::pair<Manifest, Manifest> stratified_split(const Manifest& manifest,
                                               double train_fraction, std::uint64_t seed);

/// Seeded per-class subsample keeping at most `per_class` entries per label.
Manifest subsample_per_class(const Manifest& manifest, int per_class, std::uint64_t seed);

Utterance load_utterance(const ManifestEntry& entry);

}  // namespace gser

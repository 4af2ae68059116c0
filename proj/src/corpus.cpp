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

#include "gser/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "gser/errors.hpp"
#include "gser/random.hpp"

namespace gser {
namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream is(line);
  while (std::getline(is, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

std::string strip_cr(std::string s) {
  if (!s.empty() && s.back() == '\r') s.pop_back();
  return s;
}

}  // namespace

std::string_view to_string(Emotion e) { return kEmotionNames.at(static_cast<int>(e)); }

Emotion parse_emotion(std::string_view name) {
  for (int i = 0; i < kNumEmotions; ++i)
    if (kEmotionNames[i] == name) return static_cast<Emotion>(i);
  throw LabelDecodeError("unknown emotion '" + std::string(name) + "'");
}

Emotion decode_emodb_label(std::string_view filename) {
  const auto slash = filename.find_last_of("/\\");
  if (slash != std::string_view::npos) filename.remove_prefix(slash + 1);
  const auto dot = filename.find('.');
  const std::string_view stem = filename.substr(0, dot);
  if (stem.size() != 7)
    throw LabelDecodeError("'" + std::string(filename) + "' is not a 7-character EMO-DB name");
  switch (stem[5]) {
    case 'W': return Emotion::anger;    // Wut
    case 'L': return Emotion::boredom;  // Langeweile
    case 'E': return Emotion::disgust;  // Ekel
    case 'A': return Emotion::fear;     // Angst
    case 'F': return Emotion::joy;      // Freude
    case 'N': return Emotion::neutral;
    case 'T': return Emotion::sadness;  // Trauer
    default:
      throw LabelDecodeError("unknown emotion letter '" + std::string(1, stem[5]) + "' in '" +
                             std::string(filename) + "'");
  }
}

std::string_view to_string(NoiseKind k) { return kNoiseKindNames.at(static_cast<int>(k)); }

NoiseKind parse_noise_kind(std::string_view name) {
  for (int i = 0; i < kNumNoiseKinds; ++i)
    if (kNoiseKindNames[i] == name) return static_cast<NoiseKind>(i);
  throw ConfigError("unknown noise kind '" + std::string(name) + "'");
}

std::string_view demand_directory(NoiseKind k) {
  static constexpr std::array<std::string_view, kNumNoiseKinds> kDirs = {
      "STRAFFIC", "PCAFETER", "DLIVING", "NPARK", "DWASHING", "TCAR", "OOFFICE", "NRIVER"};
  return kDirs.at(static_cast<int>(k));
}

NoiseRecording load_noise(const std::filesystem::path& noise_dir, NoiseKind kind) {
  const std::filesystem::path candidates[] = {
      noise_dir / (std::string(to_string(kind)) + ".wav"),
      noise_dir / std::string(demand_directory(kind)) / "ch01.wav",
  };
  for (const auto& p : candidates) {
    if (std::filesystem::exists(p)) {
      Audio audio = load_wav(p);
      return NoiseRecording{kind, std::move(audio.samples), audio.sample_rate};
    }
  }
  throw SetupError("no recording for noise kind '" + std::string(to_string(kind)) + "' under " +
                   noise_dir.string());
}

std::array<int, kNumEmotions> Manifest::class_counts() const {
  std::array<int, kNumEmotions> counts{};
  for (const auto& e : entries) ++counts[static_cast<int>(e.label)];
  return counts;
}

LabelOverrides read_label_overrides(const std::filesystem::path& csv) {
  std::ifstream in(csv);
  if (!in) throw IoError("cannot open " + csv.string());
  LabelOverrides out;
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    line = strip_cr(line);
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != 2) throw FormatError("label override line needs 'id,label': " + line);
    out.emplace_back(fields[0], parse_emotion(fields[1]));
  }
  return out;
}

ManifestBuild build_manifest(const std::filesystem::path& directory,
                             const LabelOverrides& overrides) {
  if (!std::filesystem::is_directory(directory))
    throw EmptyCorpusError("corpus directory does not exist: " + directory.string());

  std::vector<std::filesystem::path> files;
  for (const auto& de : std::filesystem::directory_iterator(directory)) {
    if (!de.is_regular_file()) continue;
    std::string ext = de.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), ::tolower);
    if (ext == ".wav") files.push_back(de.path());
  }
  if (files.empty()) throw EmptyCorpusError("no WAV files in " + directory.string());
  std::sort(files.begin(), files.end());

  ManifestBuild build;
  std::set<std::string> seen;
  for (const auto& f : files) {
    ManifestEntry entry;
    entry.id = f.stem().string();
    entry.path = f;
    const auto it = std::find_if(overrides.begin(), overrides.end(),
                                 [&](const auto& o) { return o.first == entry.id; });
    entry.label = it != overrides.end() ? it->second : decode_emodb_label(f.filename().string());
    entry.speaker = entry.id.substr(0, 2);
    if (!seen.insert(entry.id).second) throw FormatError("duplicate utterance id " + entry.id);
    build.manifest.entries.push_back(std::move(entry));
  }

  const auto counts = build.manifest.class_counts();
  if (counts != kEmoDbClassCounts) {
    std::ostringstream msg;
    msg << "class counts differ from the EMO-DB inventory:";
    for (int i = 0; i < kNumEmotions; ++i)
      msg << ' ' << kEmotionNames[i] << '=' << counts[i] << '/' << kEmoDbClassCounts[i];
    build.warnings.push_back(msg.str());
  }
  return build;
}

void write_manifest_csv(const Manifest& manifest, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot write " + path.string());
  os << "id,path,label,speaker\n";
  for (const auto& e : manifest.entries) {
    const std::string p = e.path.generic_string();
    if (e.id.find(',') != std::string::npos || p.find(',') != std::string::npos)
      throw FormatError("manifest fields may not contain commas: " + p);
    os << e.id << ',' << p << ',' << to_string(e.label) << ',' << e.speaker << '\n';
  }
  if (!os) throw IoError("write failed for " + path.string());
}

Manifest read_manifest_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  std::getline(in, line);
  if (strip_cr(line) != "id,path,label,speaker")
    throw FormatError("manifest header must be 'id,path,label,speaker' in " + path.string());
  Manifest m;
  std::set<std::string> seen;
  while (std::getline(in, line)) {
    line = strip_cr(line);
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != 4) throw FormatError("manifest row needs 4 fields: " + line);
    if (!seen.insert(f[0]).second) throw FormatError("duplicate utterance id " + f[0]);
    m.entries.push_back(ManifestEntry{f[0], f[1], parse_emotion(f[2]), f[3]});
  }
  return m;
}

std::pair<Manifest, Manifest> stratified_split(const Manifest& manifest, double train_fraction,
                                               std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    throw ConfigError("train fraction must lie strictly between 0 and 1");
  if (manifest.entries.empty()) throw StratificationError("cannot split an empty manifest");

  std::vector<bool> to_train(manifest.entries.size(), false);
  for (int c = 0; c < kNumEmotions; ++c) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < manifest.entries.size(); ++i)
      if (static_cast<int>(manifest.entries[i].label) == c) members.push_back(i);
    if (members.empty()) continue;
    Rng rng(derive_seed(seed, "split", kEmotionNames[c]));
    rng.shuffle(members);
    const auto n = static_cast<double>(members.size());
    const auto n_train = static_cast<std::size_t>(std::ceil(train_fraction * n - 1e-9));
    for (std::size_t k = 0; k < n_train; ++k) to_train[members[k]] = true;
  }

  Manifest train, validation;
  train.split_seed = validation.split_seed = seed;
  for (std::size_t i = 0; i < manifest.entries.size(); ++i)
    (to_train[i] ? train : validation).entries.push_back(manifest.entries[i]);
  return {std::move(train), std::move(validation)};
}

Manifest subsample_per_class(const Manifest& manifest, int per_class, std::uint64_t seed) {
  if (per_class <= 0) throw ConfigError("per-class subsample size must be positive");
  std::vector<bool> keep(manifest.entries.size(), false);
  for (int c = 0; c < kNumEmotions; ++c) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < manifest.entries.size(); ++i)
      if (static_cast<int>(manifest.entries[i].label) == c) members.push_back(i);
    Rng rng(derive_seed(seed, "subsample", kEmotionNames[c]));
    rng.shuffle(members);
    for (std::size_t k = 0; k < members.size() && k < static_cast<std::size_t>(per_class); ++k)
      keep[members[k]] = true;
  }
  Manifest out;
  out.split_seed = manifest.split_seed;
  for (std::size_t i = 0; i < manifest.entries.size(); ++i)
    if (keep[i]) out.entries.push_back(manifest.entries[i]);
  return out;
}

Utterance load_utterance(const ManifestEntry& entry) {
  Audio audio = load_wav(entry.path);
  return Utterance{entry.id, entry.speaker, entry.label, std::move(audio.samples),
                   audio.sample_rate};
}

}  // namespace gser

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

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <set>

#include "fixtures.hpp"
#include "gser/corpus.hpp"
#include "gser/errors.hpp"

namespace gser {
namespace {

namespace fs = std::filesystem;

// Little-endian RIFF/WAVE writer for hand-made test files.
struct WavBytes {
  std::string bytes;
  void u16(std::uint16_t v) {
    bytes.push_back(static_cast<char>(v & 0xff));
    bytes.push_back(static_cast<char>(v >> 8));
  }
  void u32(std::uint32_t v) {
    u16(static_cast<std::uint16_t>(v & 0xffff));
    u16(static_cast<std::uint16_t>(v >> 16));
  }
  void tag(const char* t) { bytes.append(t, 4); }
};

std::string pcm_file(const std::vector<std::int16_t>& samples, int channels = 1,
                     int bits = 16, int format = 1, std::uint32_t declared_data = 0,
                     bool extra_chunk = false) {
  WavBytes w;
  const std::uint32_t data_bytes =
      declared_data ? declared_data : static_cast<std::uint32_t>(samples.size() * 2);
  w.tag("RIFF");
  w.u32(36 + data_bytes + (extra_chunk ? 12 : 0));
  w.tag("WAVE");
  if (extra_chunk) {
    w.tag("LIST");
    w.u32(3);  // odd size, padded to 4
    w.bytes.append("abc\0", 4);
  }
  w.tag("fmt ");
  w.u32(16);
  w.u16(static_cast<std::uint16_t>(format));
  w.u16(static_cast<std::uint16_t>(channels));
  w.u32(16000);
  w.u32(16000 * channels * bits / 8);
  w.u16(static_cast<std::uint16_t>(channels * bits / 8));
  w.u16(static_cast<std::uint16_t>(bits));
  w.tag("data");
  w.u32(data_bytes);
  for (auto s : samples) w.u16(static_cast<std::uint16_t>(s));
  return w.bytes;
}

fs::path put(const fs::path& dir, const std::string& name, const std::string& bytes) {
  std::ofstream(dir / name, std::ios::binary) << bytes;
  return dir / name;
}

TEST(Wav, SampleScaling) {
  const auto dir = testing::temp_dir("wav_scale");
  const auto a = load_wav(put(dir, "a.wav", pcm_file({16384, 0, -32768, 32767})));
  EXPECT_EQ(a.sample_rate, 16000);
  ASSERT_EQ(a.samples.size(), 4u);
  EXPECT_EQ(a.samples[0], 0.5);
  EXPECT_EQ(a.samples[1], 0.0);
  EXPECT_EQ(a.samples[2], -1.0);
  EXPECT_EQ(a.samples[3], 32767.0 / 32768.0);
}

TEST(Wav, FirstChannelAndUnknownChunks) {
  const auto dir = testing::temp_dir("wav_stereo");
  const auto a = load_wav(put(dir, "s.wav", pcm_file({100, -5, 200, -5, 300, -5}, 2, 16, 1, 0, true)));
  ASSERT_EQ(a.samples.size(), 3u);
  EXPECT_EQ(a.samples[2], 300.0 / 32768.0);
}

TEST(Wav, MalformedAndUnsupported) {
  const auto dir = testing::temp_dir("wav_bad");
  EXPECT_THROW(load_wav(put(dir, "trunc.wav", pcm_file({1, 2, 3}, 1, 16, 1, 4000))), FormatError);
  EXPECT_THROW(load_wav(put(dir, "junk.wav", "definitely not a wave file")), FormatError);
  EXPECT_THROW(load_wav(put(dir, "b24.wav", pcm_file({1, 2, 3}, 1, 24))), UnsupportedFormatError);
  EXPECT_THROW(load_wav(put(dir, "float.wav", pcm_file({1, 2}, 1, 16, 3))), UnsupportedFormatError);
  EXPECT_THROW(load_wav(dir / "missing.wav"), IoError);
}

TEST(Wav, WriteLoadRoundTrip) {
  const auto dir = testing::temp_dir("wav_roundtrip");
  Rng rng(50);
  std::vector<double> x(1000);
  for (auto& v : x) v = rng.uniform(-1.0, 1.0);
  write_wav(dir / "r.wav", x, 16000);
  const auto y = load_wav(dir / "r.wav");
  ASSERT_EQ(y.samples.size(), x.size());
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_LE(std::abs(y.samples[i] - x[i]), 1.0 / 32768);
}

// ---------------------------------------------------------------------------
// Labels

TEST(Labels, LetterMap) {
  EXPECT_EQ(decode_emodb_label("03a01Wa.wav"), Emotion::anger);
  EXPECT_EQ(decode_emodb_label("16b10Tb.wav"), Emotion::sadness);
  EXPECT_EQ(decode_emodb_label("11a02Lc"), Emotion::boredom);
  EXPECT_EQ(decode_emodb_label("08b03Ea.wav"), Emotion::disgust);
  EXPECT_EQ(decode_emodb_label("09a05Ab.wav"), Emotion::fear);
  EXPECT_EQ(decode_emodb_label("10a07Fa.wav"), Emotion::joy);
  EXPECT_EQ(decode_emodb_label("13b09Nc.wav"), Emotion::neutral);
  EXPECT_THROW(decode_emodb_label("03a01Xa.wav"), LabelDecodeError);
  EXPECT_THROW(decode_emodb_label("short.wav"), LabelDecodeError);
}

TEST(Labels, TotalOverLettersOnly) {
  const std::string letters = "WLEAFNT";
  for (int c = 0; c < 128; ++c) {
    std::string name = "03a01?a.wav";
    name[5] = static_cast<char>(c);
    if (letters.find(static_cast<char>(c)) != std::string::npos && c != 0)
      EXPECT_NO_THROW(decode_emodb_label(name));
    else
      EXPECT_THROW(decode_emodb_label(name), LabelDecodeError) << c;
  }
}

TEST(Labels, NamesRoundTrip) {
  for (int i = 0; i < kNumEmotions; ++i)
    EXPECT_EQ(parse_emotion(to_string(static_cast<Emotion>(i))), static_cast<Emotion>(i));
  EXPECT_THROW(parse_emotion("happiness"), LabelDecodeError);
  int total = 0;
  for (int n : kEmoDbClassCounts) total += n;
  EXPECT_EQ(total, 535);
}

TEST(Noise, KindsAndDemandLayout) {
  for (int i = 0; i < kNumNoiseKinds; ++i)
    EXPECT_EQ(parse_noise_kind(to_string(static_cast<NoiseKind>(i))), static_cast<NoiseKind>(i));
  EXPECT_THROW(parse_noise_kind("airport"), ConfigError);

  const auto dir = testing::temp_dir("noise_layout");
  fs::create_directories(dir / "PCAFETER");
  write_wav(dir / "PCAFETER" / "ch01.wav", std::vector<double>(48, 0.25), 48000);
  const auto cafe = load_noise(dir, NoiseKind::cafe);
  EXPECT_EQ(cafe.sample_rate, 48000);
  EXPECT_EQ(cafe.samples.size(), 48u);
  testing::write_synthetic_noise(dir, {"river"}, 0.01, 1);
  EXPECT_EQ(load_noise(dir, NoiseKind::river).kind, NoiseKind::river);
  EXPECT_THROW(load_noise(dir, NoiseKind::car), SetupError);
}

// ---------------------------------------------------------------------------
// Manifest

TEST(Manifest, SingleFileWarnsAboutCounts) {
  const auto dir = testing::temp_dir("manifest_one");
  write_wav(dir / "03a01Wa.wav", std::vector<double>(400, 0.1), 16000);
  const auto build = build_manifest(dir);
  ASSERT_EQ(build.manifest.entries.size(), 1u);
  EXPECT_EQ(build.manifest.entries[0].id, "03a01Wa");
  EXPECT_EQ(build.manifest.entries[0].speaker, "03");
  EXPECT_EQ(build.manifest.entries[0].label, Emotion::anger);
  EXPECT_FALSE(build.warnings.empty());
}

TEST(Manifest, EmptyDirectoryRejected) {
  const auto dir = testing::temp_dir("manifest_empty");
  std::ofstream(dir / "readme.txt") << "no audio here";
  EXPECT_THROW(build_manifest(dir), EmptyCorpusError);
}

TEST(Manifest, OverridesAndCsvRoundTrip) {
  const auto dir = testing::temp_dir("manifest_csv");
  testing::write_synthetic_corpus(dir / "wav", 2, 3, 0.05);
  std::ofstream(dir / "labels.csv") << "id,label\n03a00Wa,joy\n";
  const auto build = build_manifest(dir / "wav", read_label_overrides(dir / "labels.csv"));
  EXPECT_EQ(build.manifest.entries.size(), 14u);
  const auto it = std::find_if(build.manifest.entries.begin(), build.manifest.entries.end(),
                               [](const ManifestEntry& e) { return e.id == "03a00Wa"; });
  ASSERT_NE(it, build.manifest.entries.end());
  EXPECT_EQ(it->label, Emotion::joy);
  EXPECT_TRUE(std::is_sorted(build.manifest.entries.begin(), build.manifest.entries.end(),
                             [](const auto& a, const auto& b) { return a.id < b.id; }));

  write_manifest_csv(build.manifest, dir / "m.csv");
  std::ifstream is(dir / "m.csv");
  std::string header;
  std::getline(is, header);
  EXPECT_EQ(header, "id,path,label,speaker");
  EXPECT_EQ(read_manifest_csv(dir / "m.csv").entries, build.manifest.entries);
}

// A manifest with the full inventory, without audio behind it.
Manifest inventory_manifest() {
  Manifest m;
  int serial = 0;
  for (int c = 0; c < kNumEmotions; ++c)
    for (int k = 0; k < kEmoDbClassCounts[c]; ++k) {
      ManifestEntry e;
      e.id = "u" + std::to_string(serial++);
      e.path = e.id + ".wav";
      e.label = static_cast<Emotion>(c);
      e.speaker = std::to_string(3 + k % 10);
      m.entries.push_back(e);
    }
  return m;
}

std::set<std::string> ids(const Manifest& m) {
  std::set<std::string> out;
  for (const auto& e : m.entries) out.insert(e.id);
  return out;
}

TEST(Split, FullInventorySizes) {
  const auto m = inventory_manifest();
  ASSERT_EQ(m.entries.size(), 535u);
  // Oracle: sum over classes of ceil(0.75 n).
  std::size_t expected_train = 0;
  for (int n : kEmoDbClassCounts) expected_train += static_cast<std::size_t>((3 * n + 3) / 4);
  const auto [train, val] = stratified_split(m, 0.75, 7);
  EXPECT_EQ(train.entries.size(), expected_train);
  EXPECT_EQ(train.entries.size(), 405u);
  EXPECT_EQ(val.entries.size(), 130u);
  const auto [train2, val2] = stratified_split(m, 0.75, 7);
  EXPECT_EQ(train.entries, train2.entries);
  EXPECT_EQ(val.entries, val2.entries);
}

TEST(Split, SingleClassOfFour) {
  Manifest m;
  for (int i = 0; i < 4; ++i) m.entries.push_back({"x" + std::to_string(i), "p", Emotion::fear, "03"});
  const auto [train, val] = stratified_split(m, 0.75, 1);
  EXPECT_EQ(train.entries.size(), 3u);
  EXPECT_EQ(val.entries.size(), 1u);
}

TEST(Split, PartitionPerClassAndSeedSensitivity) {
  const auto m = inventory_manifest();
  Rng rng(51);
  std::set<std::set<std::string>> memberships;
  for (int trial = 0; trial < 10; ++trial) {
    const double f = rng.uniform(0.05, 0.95);
    const auto seed = rng.next();
    const auto [train, val] = stratified_split(m, f, seed);
    const auto a = ids(train), b = ids(val);
    std::vector<std::string> both;
    std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(both));
    EXPECT_TRUE(both.empty());
    auto all = a;
    all.insert(b.begin(), b.end());
    EXPECT_EQ(all, ids(m));
    const auto counts = train.class_counts();
    for (int c = 0; c < kNumEmotions; ++c)
      EXPECT_EQ(counts[c], static_cast<int>(std::ceil(f * kEmoDbClassCounts[c] - 1e-9)));
    memberships.insert(a);
  }
  const auto [s1, v1] = stratified_split(m, 0.75, 100);
  const auto [s2, v2] = stratified_split(m, 0.75, 101);
  EXPECT_EQ(s1.entries.size(), s2.entries.size());
  EXPECT_NE(ids(s1), ids(s2));
}

TEST(Split, Preconditions) {
  const auto m = inventory_manifest();
  EXPECT_THROW(stratified_split(m, 0.0, 1), ConfigError);
  EXPECT_THROW(stratified_split(m, 1.0, 1), ConfigError);
  EXPECT_THROW(stratified_split(Manifest{}, 0.75, 1), StratificationError);
}

TEST(Subsample, CapsEveryClass) {
  const auto m = inventory_manifest();
  const auto s = subsample_per_class(m, 6, 9);
  for (int n : s.class_counts()) EXPECT_EQ(n, 6);
  EXPECT_EQ(subsample_per_class(m, 6, 9).entries, s.entries);
}

TEST(Utterance, LoadsFromManifestEntry) {
  const auto dir = testing::temp_dir("utterance");
  testing::write_synthetic_corpus(dir, 1, 4, 0.05);
  const auto build = build_manifest(dir);
  const auto u = load_utterance(build.manifest.entries.front());
  EXPECT_EQ(u.id, build.manifest.entries.front().id);
  EXPECT_EQ(u.sample_rate, 16000);
  EXPECT_EQ(u.samples.size(), 800u);
  for (double v : u.samples) EXPECT_LE(std::abs(v), 1.0);
}

}  // namespace
}  // namespace gser

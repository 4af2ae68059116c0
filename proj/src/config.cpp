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

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "gser/errors.hpp"
#include "gser/harness.hpp"

namespace gser {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream is(value);
  while (std::getline(is, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double to_double(const std::string& key, const std::string& value) {
  double v = 0.0;
  auto res = std::from_chars(value.data(), value.data() + value.size(), v);
  if (res.ec != std::errc() || res.ptr != value.data() + value.size())
    throw ConfigError("'" + key + "' expects a number, got '" + value + "'");
  return v;
}

long long to_int(const std::string& key, const std::string& value) {
  long long v = 0;
  auto res = std::from_chars(value.data(), value.data() + value.size(), v);
  if (res.ec != std::errc() || res.ptr != value.data() + value.size())
    throw ConfigError("'" + key + "' expects an integer, got '" + value + "'");
  return v;
}

bool to_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes" || value == "on") return true;
  if (value == "false" || value == "0" || value == "no" || value == "off") return false;
  throw ConfigError("'" + key + "' expects true or false, got '" + value + "'");
}

}  // namespace

std::string_view to_string(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::none: return "none";
    case SweepAxis::learning_rate: return "learning_rate";
    case SweepAxis::cells: return "cells";
  }
  return "?";
}

SweepAxis parse_sweep_axis(std::string_view name) {
  if (name == "none") return SweepAxis::none;
  if (name == "learning_rate") return SweepAxis::learning_rate;
  if (name == "cells") return SweepAxis::cells;
  throw ConfigError("unknown sweep axis '" + std::string(name) + "'");
}

void apply_config_entry(ExperimentConfig& c, const std::string& key, const std::string& value) {
  if (key == "corpus") c.corpus = value;
  else if (key == "noise_corpus") c.noise_corpus = value;
  else if (key == "label_csv") c.label_csv = value;
  else if (key == "output") c.output = value;
  else if (key == "noise_kinds") c.noise_kinds = split_list(value);
  else if (key == "snr_db") {
    const auto seed = c.snr.segment_seed;
    c.snr = value == "raw" ? SnrSpec::raw(seed) : SnrSpec::target(to_double(key, value), seed);
  } else if (key == "models") {
    c.models.clear();
    for (const auto& m : split_list(value)) c.models.push_back(parse_cell_kind(m));
  } else if (key == "sweep") c.sweep = parse_sweep_axis(value);
  else if (key == "learning_rate") c.base.learning_rate = to_double(key, value);
  else if (key == "use_bias") c.base.use_bias = to_bool(key, value);
  else if (key == "cells") c.base.hidden_cells = static_cast<int>(to_int(key, value));
  else if (key == "epochs") c.base.epochs = static_cast<int>(to_int(key, value));
  else if (key == "clip_norm") c.base.clip_norm = to_double(key, value);
  else if (key == "readout") c.base.readout = parse_readout(value);
  else if (key == "peepholes") c.base.peepholes = to_bool(key, value);
  else if (key == "seed") c.seed = static_cast<std::uint64_t>(to_int(key, value));
  else if (key == "train_fraction") c.train_fraction = to_double(key, value);
  else if (key == "max_per_class") c.max_per_class = static_cast<int>(to_int(key, value));
  else if (key == "normalize") c.normalize = to_bool(key, value);
  else if (key == "bench_repeats") c.bench_repeats = static_cast<int>(to_int(key, value));
  else if (key == "frame_len") c.mfcc.frame_len = to_double(key, value);
  else if (key == "hop") c.mfcc.hop = to_double(key, value);
  else if (key == "n_mels") c.mfcc.n_mels = static_cast<int>(to_int(key, value));
  else throw ConfigError("unknown configuration key '" + key + "'");
}

ExperimentConfig parse_config(std::istream& is) {
  ExperimentConfig config;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(lineno) + ": expected 'key = value'");
    apply_config_entry(config, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  config.validate();
  return config;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open configuration " + path.string());
  return parse_config(is);
}

void ExperimentConfig::validate() const {
  if (models.empty()) throw ConfigError("at least one model kind is required");
  if (noise_kinds.empty()) throw ConfigError("at least one noise kind (or 'none') is required");
  for (const auto& k : noise_kinds)
    if (k != "none") parse_noise_kind(k);
  if (!(base.learning_rate >= 1e-9 && base.learning_rate <= 1.0))
    throw ConfigError("learning_rate must lie in [1e-9, 1]");
  if (base.hidden_cells < 1) throw ConfigError("cells must be at least 1");
  base.validate();
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    throw ConfigError("train_fraction must lie strictly between 0 and 1");
  if (max_per_class < 0) throw ConfigError("max_per_class must be non-negative");
  if (bench_repeats < 1) throw ConfigError("bench_repeats must be at least 1");
  if (snr.mode == SnrMode::target_db && !std::isfinite(snr.target_db))
    throw ConfigError("snr_db must be finite");
  mfcc.validate();
}

}  // namespace gser

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

#include "gser/dsp.hpp"

#include <unsupported/Eigen/FFT>

#include <charconv>
#include <cmath>
#include <complex>
#include <fstream>
#include <numbers>
#include <sstream>

#include "gser/errors.hpp"
#include "gser/random.hpp"

namespace gser {
namespace {

constexpr int kDecimationTaps = 101;
constexpr double kDecimationCutoffHz = 7200.0;
constexpr int kNoiseRate = 48000;

std::string format_double(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

}  // namespace

int MfccConfig::frame_samples() const {
  return static_cast<int>(std::lround(frame_len * sample_rate));
}

int MfccConfig::hop_samples() const { return static_cast<int>(std::lround(hop * sample_rate)); }

int MfccConfig::fft_size() const {
  if (n_fft > 0) return n_fft;
  int n = 1;
  while (n < frame_samples()) n <<= 1;
  return n;
}

void MfccConfig::validate() const {
  if (sample_rate <= 0) throw ConfigError("sample rate must be positive");
  if (hop_samples() < 1) throw ConfigError("hop must cover at least one sample");
  if (frame_samples() < 2) throw ConfigError("frame must cover at least two samples");
  if (frame_len < hop) throw ConfigError("frame length must not be shorter than the hop");
  if (fft_size() < frame_samples()) throw ConfigError("n_fft shorter than the frame");
  if (n_mels < 2) throw ConfigError("need at least two mel filters");
  if (n_coeffs < 1 || n_coeffs > n_mels) throw ConfigError("need 1 <= n_coeffs <= n_mels");
  if (!(log_floor > 0.0)) throw ConfigError("log floor must be positive");
}

std::uint64_t MfccConfig::hash() const {
  std::ostringstream os;
  os << format_double(frame_len) << '|' << format_double(hop) << '|' << fft_size() << '|'
     << n_mels << '|' << n_coeffs << '|' << format_double(log_floor) << '|' << sample_rate
     << "|hamming";
  return fnv1a(os.str());
}

const std::vector<double>& decimation_filter() {
  static const std::vector<double> taps = [] {
    std::vector<double> h(kDecimationTaps);
    const double fc = kDecimationCutoffHz / kNoiseRate;  // cycles per sample
    const int mid = kDecimationTaps / 2;
    double sum = 0.0;
    for (int n = 0; n < kDecimationTaps; ++n) {
      const double m = n - mid;
      const double sinc = m == 0 ? 2.0 * fc
                                 : std::sin(2.0 * std::numbers::pi * fc * m) / (std::numbers::pi * m);
      const double x = 2.0 * std::numbers::pi * n / (kDecimationTaps - 1);
      const double blackman = 0.42 - 0.5 * std::cos(x) + 0.08 * std::cos(2.0 * x);
      h[n] = sinc * blackman;
      sum += h[n];
    }
    for (double& v : h) v /= sum;
    return h;
  }();
  return taps;
}

std::vector<double> resample_48k_to_16k(std::span<const double> samples) {
  if (samples.size() < 3)
    throw TooShortError("resampler needs at least 3 input samples, got " +
                        std::to_string(samples.size()));
  const auto& h = decimation_filter();
  const auto n = static_cast<std::ptrdiff_t>(samples.size());
  const std::ptrdiff_t mid = kDecimationTaps / 2;
  std::vector<double> out(samples.size() / 3);
  for (std::size_t m = 0; m < out.size(); ++m) {
    const std::ptrdiff_t centre = 3 * static_cast<std::ptrdiff_t>(m);
    double acc = 0.0;
    for (std::ptrdiff_t k = 0; k < kDecimationTaps; ++k) {
      const std::ptrdiff_t i = centre + mid - k;
      if (i >= 0 && i < n) acc += h[k] * samples[i];
    }
    out[m] = acc;
  }
  return out;
}

std::vector<double> to_speech_rate(std::span<const double> samples, int sample_rate) {
  if (sample_rate == kSpeechRate) return {samples.begin(), samples.end()};
  if (sample_rate == kNoiseRate) return resample_48k_to_16k(samples);
  throw UnsupportedFormatError("noise must be recorded at 16 or 48 kHz, got " +
                               std::to_string(sample_rate) + " Hz");
}

MatrixXd frame_signal(std::span<const double> samples, int frame_length, int hop) {
  if (frame_length < 1 || hop < 1) throw SizeError("frame length and hop must be positive");
  const auto n = static_cast<Index>(samples.size());
  if (n < frame_length)
    throw TooShortError("signal of " + std::to_string(n) + " samples is shorter than one frame (" +
                        std::to_string(frame_length) + ")");
  const Index count = 1 + (n - frame_length) / hop;
  MatrixXd frames(count, frame_length);
  for (Index t = 0; t < count; ++t)
    frames.row(t) = Eigen::Map<const Eigen::RowVectorXd>(samples.data() + t * hop, frame_length);
  return frames;
}

MatrixXd frame_signal(std::span<const double> samples, const MfccConfig& config) {
  return frame_signal(samples, config.frame_samples(), config.hop_samples());
}

VectorXd hamming_window(int length) {
  if (length < 2) throw SizeError("Hamming window needs at least 2 points");
  VectorXd w(length);
  for (int n = 0; n < length; ++n)
    w(n) = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * n / (length - 1));
  return w;
}

namespace {

VectorXd power_spectrum_with(Eigen::FFT<double>& fft, std::span<const double> frame, int n_fft,
                             std::vector<double>& padded, std::vector<std::complex<double>>& spec) {
  if (n_fft < 1 || static_cast<int>(frame.size()) > n_fft)
    throw SizeError("power_spectrum: frame of " + std::to_string(frame.size()) +
                    " samples does not fit n_fft " + std::to_string(n_fft));
  padded.assign(n_fft, 0.0);
  std::copy(frame.begin(), frame.end(), padded.begin());
  fft.fwd(spec, padded);
  VectorXd power(n_fft / 2 + 1);
  for (int k = 0; k <= n_fft / 2; ++k) power(k) = std::norm(spec[k]) / n_fft;
  return power;
}

}  // namespace

VectorXd power_spectrum(std::span<const double> frame, int n_fft) {
  Eigen::FFT<double> fft;
  std::vector<double> padded;
  std::vector<std::complex<double>> spec;
  return power_spectrum_with(fft, frame, n_fft, padded, spec);
}

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }

double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

namespace {

std::vector<double> mel_edges(int n_mels, int sample_rate) {
  const double top = hz_to_mel(sample_rate / 2.0);
  std::vector<double> edges(n_mels + 2);
  for (int i = 0; i < n_mels + 2; ++i) edges[i] = mel_to_hz(top * i / (n_mels + 1));
  return edges;
}

}  // namespace

std::vector<double> mel_center_frequencies(int n_mels, int sample_rate) {
  const auto edges = mel_edges(n_mels, sample_rate);
  return {edges.begin() + 1, edges.end() - 1};
}

MatrixXd mel_filterbank(int n_mels, int n_fft, int sample_rate) {
  if (n_mels < 2) throw FilterbankError("need at least two mel filters");
  if (n_fft < 2 || sample_rate <= 0) throw FilterbankError("invalid FFT size or sample rate");
  const auto edges = mel_edges(n_mels, sample_rate);
  const int bins = n_fft / 2 + 1;
  MatrixXd bank = MatrixXd::Zero(n_mels, bins);
  for (int m = 0; m < n_mels; ++m) {
    const double lo = edges[m], centre = edges[m + 1], hi = edges[m + 2];
    for (int k = 0; k < bins; ++k) {
      const double f = static_cast<double>(k) * sample_rate / n_fft;
      if (f > lo && f <= centre)
        bank(m, k) = (f - lo) / (centre - lo);
      else if (f > centre && f < hi)
        bank(m, k) = (hi - f) / (hi - centre);
    }
    const double peak = bank.row(m).maxCoeff();
    if (!(peak > 0.0))
      throw FilterbankError("mel filter " + std::to_string(m) + " covers no FFT bin; use fewer "
                            "filters or a larger n_fft");
    bank.row(m) /= peak;
  }
  return bank;
}

MatrixXd dct_matrix(int n) {
  if (n < 1) throw SizeError("DCT size must be positive");
  MatrixXd d(n, n);
  for (int k = 0; k < n; ++k) {
    const double scale = std::sqrt((k == 0 ? 1.0 : 2.0) / n);
    for (int i = 0; i < n; ++i)
      d(k, i) = scale * std::cos(std::numbers::pi * k * (2.0 * i + 1.0) / (2.0 * n));
  }
  return d;
}

MfccExtractor::MfccExtractor(MfccConfig config) : config_(config) {
  config_.validate();
  window_ = hamming_window(config_.frame_samples());
  filterbank_ = mel_filterbank(config_.n_mels, config_.fft_size(), config_.sample_rate);
  dct_ = dct_matrix(config_.n_mels).topRows(config_.n_coeffs);
}

MatrixXd MfccExtractor::mel_energies(std::span<const double> samples) const {
  const MatrixXd frames = frame_signal(samples, config_);
  const int n_fft = config_.fft_size();
  Eigen::FFT<double> fft;
  std::vector<double> padded;
  std::vector<std::complex<double>> spec;
  std::vector<double> windowed(frames.cols());
  MatrixXd energies(frames.rows(), config_.n_mels);
  for (Index t = 0; t < frames.rows(); ++t) {
    for (Index i = 0; i < frames.cols(); ++i) windowed[i] = frames(t, i) * window_(i);
    const VectorXd power = power_spectrum_with(fft, windowed, n_fft, padded, spec);
    energies.row(t) = (filterbank_ * power).transpose();
  }
  return energies;
}

MatrixXd MfccExtractor::log_mel_energies(std::span<const double> samples) const {
  const double floor = config_.log_floor;
  return mel_energies(samples).unaryExpr([floor](double e) { return std::log(std::max(e, floor)); });
}

FeatureSequence MfccExtractor::compute(std::span<const double> samples,
                                       std::string utterance_id) const {
  FeatureSequence seq;
  seq.frames = log_mel_energies(samples) * dct_.transpose();
  seq.utterance_id = std::move(utterance_id);
  return seq;
}

FeatureSequence mfcc(std::span<const double> samples, const MfccConfig& config) {
  return MfccExtractor(config).compute(samples);
}

void zscore_normalize(FeatureSequence& features) {
  auto& x = features.frames;
  const Eigen::RowVectorXd mean = x.colwise().mean();
  x.rowwise() -= mean;
  const double n = static_cast<double>(x.rows());
  for (Index c = 0; c < x.cols(); ++c) {
    const double sd = std::sqrt(x.col(c).squaredNorm() / n);
    if (sd > 0.0) x.col(c) /= sd;
  }
}

void write_features_csv(const FeatureSequence& features, const MfccConfig& config,
                        const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot write " + path.string());
  for (Index t = 0; t < features.frames.rows(); ++t) {
    for (Index c = 0; c < features.frames.cols(); ++c) {
      if (c) os << ',';
      os << format_double(features.frames(t, c));
    }
    os << '\n';
  }
  std::ofstream meta(path.string() + ".meta", std::ios::binary);
  char hex[17];
  std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(config.hash()));
  meta << "id=" << features.utterance_id << " T=" << features.frames.rows() << " config=" << hex
       << '\n';
  if (!os || !meta) throw IoError("write failed for " + path.string());
}

FeatureSequence read_features_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    const char* p = line.data();
    const char* end = line.data() + line.size();
    while (p < end) {
      double v = 0.0;
      auto res = std::from_chars(p, end, v);
      if (res.ec != std::errc()) throw FormatError("bad number in " + path.string());
      row.push_back(v);
      p = res.ptr;
      if (p < end && *p == ',') ++p;
    }
    if (!rows.empty() && row.size() != rows.front().size())
      throw FormatError("ragged feature rows in " + path.string());
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw FormatError("empty feature file " + path.string());
  FeatureSequence seq;
  seq.frames.resize(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
  for (std::size_t t = 0; t < rows.size(); ++t)
    for (std::size_t c = 0; c < rows[t].size(); ++c) seq.frames(t, c) = rows[t][c];

  std::ifstream meta(path.string() + ".meta");
  std::string token;
  while (meta >> token)
    if (token.rfind("id=", 0) == 0) seq.utterance_id = token.substr(3);
  return seq;
}

}  // namespace gser

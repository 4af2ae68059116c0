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

#include "gser/params_io.hpp"

#include <charconv>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include "gser/errors.hpp"

namespace gser {
namespace {

constexpr int kFormatVersion = 1;

struct RawTensor {
  Index rows = 0, cols = 0;
  std::vector<double> values;
};

void put_double(std::ostream& os, double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  os.write(buf, res.ptr - buf);
}

double parse_double(const std::string& token) {
  double v = 0.0;
  auto res = std::from_chars(token.data(), token.data() + token.size(), v);
  if (res.ec != std::errc() || res.ptr != token.data() + token.size())
    throw FormatError("bad number '" + token + "' in parameter dump");
  return v;
}

}  // namespace

void write_params(std::ostream& os, const AnyParams& params) {
  os << "gser-params " << kFormatVersion << '\n';
  os << "kind " << to_string(kind_of(params)) << '\n';
  std::visit(
      [&](const auto& p) {
        visit_tensors(
            [&](const std::string& name, const auto& t) {
              os << "tensor " << name << ' ' << t.rows() << ' ' << t.cols() << '\n';
              for (Index r = 0; r < t.rows(); ++r) {
                for (Index c = 0; c < t.cols(); ++c) {
                  if (c) os << ' ';
                  put_double(os, t(r, c));
                }
                os << '\n';
              }
            },
            p);
      },
      params);
  os << "end\n";
}

AnyParams read_params(std::istream& is) {
  std::string magic, key;
  int version = 0;
  if (!(is >> magic >> version) || magic != "gser-params")
    throw FormatError("not a parameter dump");
  if (version != kFormatVersion)
    throw FormatError("unsupported parameter dump version " + std::to_string(version));
  std::string kind_name;
  if (!(is >> key >> kind_name) || key != "kind") throw FormatError("missing kind line");
  const CellKind kind = parse_cell_kind(kind_name);

  std::map<std::string, RawTensor> tensors;
  while (is >> key && key != "end") {
    if (key != "tensor") throw FormatError("unexpected token '" + key + "' in parameter dump");
    std::string name;
    RawTensor raw;
    if (!(is >> name >> raw.rows >> raw.cols) || raw.rows < 0 || raw.cols < 0)
      throw FormatError("bad tensor header");
    raw.values.resize(static_cast<std::size_t>(raw.rows * raw.cols));
    std::string token;
    for (double& v : raw.values) {
      if (!(is >> token)) throw FormatError("truncated tensor " + name);
      v = parse_double(token);
    }
    tensors[name] = std::move(raw);
  }
  if (key != "end") throw FormatError("parameter dump is missing its end marker");

  const std::string first_gate = kind == CellKind::rnn    ? "hidden"
                                 : kind == CellKind::lstm ? "input_gate"
                                                          : "update";
  const auto in = tensors.find(first_gate + ".input");
  const auto out = tensors.find("output.weights");
  if (in == tensors.end() || out == tensors.end()) throw FormatError("parameter dump lacks core tensors");
  CellShape shape;
  shape.hidden = static_cast<int>(in->second.rows);
  shape.input_dim = static_cast<int>(in->second.cols);
  shape.classes = static_cast<int>(out->second.rows);
  shape.use_bias = tensors.count(first_gate + ".bias") > 0;
  shape.peepholes = tensors.count("input_gate.peephole") > 0;

  AnyParams params = make_any_params(kind, shape);
  std::size_t used = 0;
  std::visit(
      [&](auto& p) {
        visit_tensors(
            [&](const std::string& name, auto& t) {
              const auto it = tensors.find(name);
              if (it == tensors.end()) throw FormatError("missing tensor " + name);
              if (it->second.rows != t.rows() || it->second.cols != t.cols())
                throw FormatError("tensor " + name + " has the wrong shape");
              for (Index r = 0; r < t.rows(); ++r)
                for (Index c = 0; c < t.cols(); ++c)
                  t(r, c) = it->second.values[static_cast<std::size_t>(r * t.cols() + c)];
              ++used;
            },
            p);
      },
      params);
  if (used != tensors.size()) throw FormatError("parameter dump has unexpected tensors");
  return params;
}

void save_params(const std::filesystem::path& path, const AnyParams& params) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot write " + path.string());
  write_params(os, params);
  if (!os) throw IoError("write failed for " + path.string());
}

AnyParams load_params(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open " + path.string());
  return read_params(is);
}

}  // namespace gser

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

#include "gser/cells.hpp"

namespace gser {

std::string_view to_string(CellKind kind) {
  switch (kind) {
    case CellKind::rnn: return "rnn";
    case CellKind::lstm: return "lstm";
    case CellKind::gru: return "gru";
  }
  return "?";
}

CellKind parse_cell_kind(std::string_view name) {
  if (name == "rnn") return CellKind::rnn;
  if (name == "lstm") return CellKind::lstm;
  if (name == "gru") return CellKind::gru;
  throw ConfigError("unknown model kind '" + std::string(name) + "'");
}

std::string_view to_string(Readout readout) {
  return readout == Readout::last ? "last" : "mean";
}

Readout parse_readout(std::string_view name) {
  if (name == "last") return Readout::last;
  if (name == "mean") return Readout::mean;
  throw ConfigError("unknown readout '" + std::string(name) + "'");
}

std::size_t param_count(CellKind kind, int input_dim, int hidden, int classes, bool use_bias,
                        bool peepholes) {
  (void)classes;
  if (input_dim < 1 || hidden < 1) throw ShapeError("param_count: dimensions must be positive");
  const std::size_t d = input_dim, p = hidden;
  const std::size_t per_gate = p * d + p * p + (use_bias ? p : 0);
  switch (kind) {
    case CellKind::rnn: return per_gate;
    case CellKind::gru: return 3 * per_gate;
    case CellKind::lstm: return 4 * per_gate + (peepholes ? 3 * p : 0);
  }
  return 0;
}

std::size_t output_param_count(int hidden, int classes, bool use_bias) {
  return static_cast<std::size_t>(classes) * hidden + (use_bias ? classes : 0);
}

AnyParams make_any_params(CellKind kind, const CellShape& shape, Rng* rng) {
  switch (kind) {
    case CellKind::rnn: return make_params<RnnParams<double>>(shape, rng);
    case CellKind::lstm: return make_params<LstmParams<double>>(shape, rng);
    case CellKind::gru: return make_params<GruParams<double>>(shape, rng);
  }
  throw ConfigError("unknown cell kind");
}

CellKind kind_of(const AnyParams& params) {
  return std::visit([](const auto& p) { return std::decay_t<decltype(p)>::kind; }, params);
}

}  // namespace gser

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

// Versioned textual tensor dump for trained parameters:
//
//   gser-params 1
//   kind gru
//   tensor update.input 4 13
//   <row-major values, one matrix row per line>
//   ...
//   end
//
// Values use the shortest representation that parses back to the same double,
// so a dump round-trips exactly.

#include <filesystem>
#include <iosfwd>

#include "gser/cells.hpp"

namespace gser {

void write_params(std::ostream& os, const AnyParams& params);
AnyParams read_params(std::istream& is);

void save_params(const std::filesystem::path& path, const AnyParams& params);
AnyParams load_params(const std::filesystem::path& path);

}  // namespace gser

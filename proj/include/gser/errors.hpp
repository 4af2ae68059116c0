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

#include <stdexcept>
#include <string>

namespace gser {

/// Base of every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define GSER_DECLARE_ERROR(Name)          \
  class Name : public Error {             \
   public:                                \
    using Error::Error;                   \
  }

// corpus
GSER_DECLARE_ERROR(FormatError);
GSER_DECLARE_ERROR(UnsupportedFormatError);
GSER_DECLARE_ERROR(LabelDecodeError);
GSER_DECLARE_ERROR(EmptyCorpusError);
GSER_DECLARE_ERROR(StratificationError);

// dsp / mixer / nn
GSER_DECLARE_ERROR(TooShortError);
GSER_DECLARE_ERROR(SizeError);
GSER_DECLARE_ERROR(FilterbankError);
GSER_DECLARE_ERROR(ShapeError);
GSER_DECLARE_ERROR(IndexError);
GSER_DECLARE_ERROR(LengthError);
GSER_DECLARE_ERROR(UndefinedSnrError);

// harness
GSER_DECLARE_ERROR(PairingError);
GSER_DECLARE_ERROR(IoError);
GSER_DECLARE_ERROR(ConfigError);
GSER_DECLARE_ERROR(SetupError);

#undef GSER_DECLARE_ERROR

/// Raised when the training loss stops being finite.
class DivergenceError : public Error {
 public:
  explicit DivergenceError(int epoch)
      : Error("training diverged (non-finite loss) in epoch " +
              std::to_string(epoch)),
        epoch_(epoch) {}
  int epoch() const noexcept { return epoch_; }

 private:
  int epoch_;
};

}  // namespace gser

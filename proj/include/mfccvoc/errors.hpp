// Copyright 2026 The mfccvoc Authors. All Rights Reserved.
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

namespace mfccvoc {

// Base of every error raised by the library. Command-line tools map
// InvariantError to exit status 1 and everything else to exit status 2.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed or unsupported file contents.
class FormatError : public Error {
 public:
  using Error::Error;
};

// File system failures (missing file, unwritable path).
class IoError : public Error {
 public:
  using Error::Error;
};

// Out-of-range configuration values.
class ParameterError : public Error {
 public:
  using Error::Error;
};

// Caller broke a precondition: mismatched dimensions, empty input.
class ContractError : public Error {
 public:
  using Error::Error;
};

// Weight file does not match the expected network topology.
class LoadError : public Error {
 public:
  using Error::Error;
};

// Internal invariant violated (unstable filter, NaN during training).
class InvariantError : public Error {
 public:
  using Error::Error;
};

}  // namespace mfccvoc

// Copyright 2026 The lgrln Authors
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

namespace lgrln {

// Every error raised by the library derives from Error so callers (the CLI in
// particular) can map families of failures onto exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Incompatible tensor extents.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// Invalid configuration value or combination.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Caller broke an operation's precondition (e.g. non-scalar loss).
class ContractError : public Error {
 public:
  using Error::Error;
};

// Object used in the wrong lifecycle state (e.g. a consumed tape).
class StateError : public Error {
 public:
  using Error::Error;
};

// A fixed-size table was indexed beyond its capacity.
class CapacityError : public Error {
 public:
  using Error::Error;
};

// Malformed or inconsistent on-disk data (dataset manifests, blobs).
class LoadError : public Error {
 public:
  using Error::Error;
};

// Checkpoint does not match the data it is applied to.
class CheckpointError : public Error {
 public:
  using Error::Error;
};

// Non-finite values or an undefined numeric result.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace lgrln

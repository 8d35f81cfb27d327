/*
Copyright 2026 The memplan Authors. All rights reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
*/

#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace memplan {

using OpId = std::int32_t;
using TensorId = std::int32_t;
using Bytes = std::int64_t;

inline constexpr OpId kNoOp = -1;
inline constexpr Bytes kMiB = Bytes{1} << 20;

// Error hierarchy. The CLI maps these onto exit codes: InputError -> 2,
// InvariantError -> 3.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed or inconsistent user input (documents, configs, schedules).
class InputError : public Error {
 public:
  using Error::Error;
};

class GraphError : public InputError {
 public:
  using InputError::InputError;
};

class ConfigError : public InputError {
 public:
  using InputError::InputError;
};

class ScheduleError : public InputError {
 public:
  using InputError::InputError;
};

// The graph does not have the shape an algorithm requires (for example a
// training decomposition on a graph without a backward pass).
class StructureError : public InputError {
 public:
  using InputError::InputError;
};

// Internal consistency check failed; indicates a bug rather than bad input.
class InvariantError : public Error {
 public:
  using Error::Error;
};

}  // namespace memplan

// Copyright 2026 The mapfdl Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>

namespace mapfdl {

// Base of every error thrown by this library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Caller handed in structurally inconsistent data (agent sets differ,
// matrix shapes disagree, unknown ids).
class InputError : public Error {
 public:
  using Error::Error;
};

// A numeric or enumerated parameter is outside its documented range.
class ParameterError : public Error {
 public:
  using Error::Error;
};

// An episode or benchmark configuration cannot be honored.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Operation not valid in the current lifecycle state (e.g. stepping a
// finished episode).
class StateError : public Error {
 public:
  using Error::Error;
};

// Not enough free cells / resources to satisfy a request.
class CapacityError : public Error {
 public:
  using Error::Error;
};

// Randomized construction gave up after its retry limit.
class InfeasibleError : public Error {
 public:
  using Error::Error;
};

// Wire or file payload could not be decoded.
class DecodeError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace mapfdl

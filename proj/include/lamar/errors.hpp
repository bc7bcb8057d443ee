// Copyright 2026 The lamar Authors.
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

namespace lamar {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// A caller violated an operation's precondition.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// Invalid or inconsistent configuration (maps to CLI exit code 2).
class ConfigError : public Error {
 public:
  using Error::Error;
};

class EmptyDatasetError : public Error {
 public:
  using Error::Error;
};

class MismatchError : public Error {
 public:
  using Error::Error;
};

class DuplicateKeyError : public Error {
 public:
  using Error::Error;
};

/// Transient failures persisted past the retry budget.
class BackendUnavailableError : public Error {
 public:
  using Error::Error;
};

/// The backend refused the request in a way retrying cannot fix (4xx).
class PermanentBackendError : public Error {
 public:
  PermanentBackendError(int status, const std::string& what)
      : Error(what), status_(status) {}
  int status() const noexcept { return status_; }

 private:
  int status_;
};

/// Every completion for an item was rejected by the quality filter.
class SignalQualityError : public Error {
 public:
  SignalQualityError(const std::string& what, std::string last_text)
      : Error(what), last_text_(std::move(last_text)) {}
  const std::string& last_text() const noexcept { return last_text_; }

 private:
  std::string last_text_;
};

class TrainingDivergenceError : public Error {
 public:
  TrainingDivergenceError(const std::string& what, long long step)
      : Error(what), step_(step) {}
  long long step() const noexcept { return step_; }

 private:
  long long step_;
};

/// A pipeline stage was requested before the stage producing its input ran.
class MissingArtifactError : public Error {
 public:
  using Error::Error;
};

}  // namespace lamar

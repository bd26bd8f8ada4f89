// Copyright 2026 The dmasr Authors
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

#include <cstddef>
#include <stdexcept>
#include <string>

namespace dmasr {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input text. `locator` is "source:line" for line formats or
/// "source[entry]" for JSON arrays.
class ParseError : public Error {
 public:
  ParseError(std::string locator, const std::string& what)
      : Error(locator + ": " + what), locator_(std::move(locator)) {}

  const std::string& locator() const noexcept { return locator_; }

 private:
  std::string locator_;
};

/// A value that parsed fine but violates a type invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Transport or protocol failure reported by a recognizer backend.
/// A fatal error ends the session; remaining turns are not attempted.
class BackendError : public Error {
 public:
  BackendError(const std::string& what, bool fatal) : Error(what), fatal_(fatal) {}

  bool fatal() const noexcept { return fatal_; }

 private:
  bool fatal_;
};

}  // namespace dmasr

// Copyright 2026 The storybias Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace storybias {

// Base for every error the toolkit raises on purpose. Anything else escaping
// a stage is a bug.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad user-supplied configuration: empty axis, missing lexicon entry,
// inconsistent category order, out-of-range sampling parameter.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// A value violates a domain invariant (non-NFC text, duplicate key, ...).
class ValidationError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Malformed line in a JSONL stream. Carries the 1-based line number and the
// byte offset of the start of that line.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::uint64_t line, std::uint64_t offset)
      : Error(what + " (line " + std::to_string(line) + ", byte offset " +
              std::to_string(offset) + ")"),
        line_(line),
        offset_(offset) {}

  std::uint64_t line() const { return line_; }
  std::uint64_t offset() const { return offset_; }

 private:
  std::uint64_t line_;
  std::uint64_t offset_;
};

}  // namespace storybias

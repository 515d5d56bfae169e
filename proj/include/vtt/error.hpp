// Copyright 2026 The VTT Authors.
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
#include <cstdint>
#include <stdexcept>
#include <string>

namespace vtt {

// All toolkit failures derive from Error so callers can catch one type and
// map it to a data-error exit code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid UTF-8 in an input stream. `offset` is the byte offset of the first
// byte of the offending sequence.
class DecodeError : public Error {
 public:
  DecodeError(std::size_t offset, const std::string& what)
      : Error("invalid UTF-8 at byte " + std::to_string(offset) + ": " + what),
        offset_(offset) {}
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// Malformed text input (vocabulary TSV, task JSONL). Line numbers are 1-based.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

// Text that cannot be covered by the vocabulary lattice. `offset` is the byte
// offset of the first uncoverable character in the caller's text.
class SegmentError : public Error {
 public:
  SegmentError(std::size_t offset, const std::string& what)
      : Error("cannot segment character at byte " + std::to_string(offset) +
              ": " + what),
        offset_(offset) {}
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

// Malformed binary checkpoint. `offset` is the byte offset where parsing
// stopped.
class FormatError : public Error {
 public:
  FormatError(std::uint64_t offset, const std::string& what)
      : Error("checkpoint byte " + std::to_string(offset) + ": " + what),
        offset_(offset) {}
  std::uint64_t offset() const noexcept { return offset_; }

 private:
  std::uint64_t offset_;
};

}  // namespace vtt

// Copyright 2026 The catchdec Authors.
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

namespace catchdec {

// Invalid arguments to a math routine or a malformed in-memory value.
class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A file or wire payload failed to parse or validate. `line` is 1-based, 0 if
// not applicable.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& source, std::size_t line, const std::string& what)
      : std::runtime_error(format(source, line, what)), source_(source), line_(line) {}

  const std::string& source() const { return source_; }
  std::size_t line() const { return line_; }

 private:
  static std::string format(const std::string& source, std::size_t line,
                            const std::string& what) {
    std::string out = source;
    if (line > 0) out += ":" + std::to_string(line);
    return out + ": " + what;
  }

  std::string source_;
  std::size_t line_;
};

// Any failure on the logits supplier side: handshake, session state, transport.
class BackendError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// The backend did not answer within its deadline.
class BackendTimeout : public BackendError {
 public:
  using BackendError::BackendError;
};

}  // namespace catchdec

// Copyright 2026 The boundedplay Authors.
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

#ifndef BOUNDEDPLAY_ERRORS_HPP_
#define BOUNDEDPLAY_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace boundedplay {

// Invalid arguments to a pure operation (mixed games, bad dimensions, ...).
class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Malformed configuration: matrices, tables, manifests, plans.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// An agent or session was driven outside its protocol (exhausted replay
// script, direct call on a human agent, duplicate submission).
class ProtocolError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class TemplateError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A model reply without a parsable "Choice:" line.
class ParseFailure : public std::runtime_error {
 public:
  explicit ParseFailure(std::string raw)
      : std::runtime_error("no parsable choice in reply"), raw_(std::move(raw)) {}
  const std::string& raw_reply() const { return raw_; }

 private:
  std::string raw_;
};

// Transport failure after all retries.
class GatewayError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Persistent parse failure; the match is aborted and flagged.
class ProtocolViolation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Log schema violations and corrupt log lines.
class SchemaError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace boundedplay

#endif  // BOUNDEDPLAY_ERRORS_HPP_

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

#include "boundedplay/continuation.hpp"

#include <cmath>
#include <sstream>

#include "boundedplay/errors.hpp"

namespace boundedplay {
namespace {

std::string short_number(double v) {
  std::ostringstream out;
  out << v;
  return out.str();
}

}  // namespace

ContinuationRule ContinuationRule::rounds(int n) {
  if (n <= 0) throw DomainError("match length must be positive");
  return {Mode::Rounds, 0, n};
}

ContinuationRule ContinuationRule::dice(double delta) {
  if (!(delta >= 0 && delta < 1)) throw DomainError("continuation probability must lie in [0, 1)");
  return {Mode::Dice, delta, 1};
}

ContinuationRule ContinuationRule::finite(int horizon) {
  if (horizon <= 0) throw DomainError("horizon must be positive");
  return {Mode::Finite, 0, horizon};
}

std::string ContinuationRule::label() const {
  switch (mode) {
    case Mode::Rounds: return "rounds:" + std::to_string(horizon);
    case Mode::Dice: return "dice:" + short_number(delta);
    case Mode::Finite: return "finite:" + std::to_string(horizon);
  }
  return {};
}

ContinuationRule ContinuationRule::parse(std::string_view label) {
  auto colon = label.find(':');
  if (colon == std::string_view::npos) {
    throw ConfigError("treatment '" + std::string(label) + "' lacks ':'");
  }
  auto kind = label.substr(0, colon);
  std::string value(label.substr(colon + 1));
  try {
    std::size_t used = 0;
    if (kind == "dice") {
      double d = std::stod(value, &used);
      if (used == value.size()) return dice(d);
    } else if (kind == "finite" || kind == "rounds") {
      int h = std::stoi(value, &used);
      if (used == value.size()) return kind == "finite" ? finite(h) : rounds(h);
    }
  } catch (const std::logic_error&) {
  }
  throw ConfigError("bad treatment '" + std::string(label) + "'");
}

bool treatment_less(const ContinuationRule& a, const ContinuationRule& b) {
  if (a.mode != b.mode) return a.mode < b.mode;
  if (a.mode == ContinuationRule::Mode::Dice) return a.delta < b.delta;
  return a.horizon < b.horizon;
}

ContinuationDraw sample_continuation(const ContinuationRule& rule, int round_index,
                                     double draw) {
  (void)round_index;
  if (rule.mode != ContinuationRule::Mode::Dice) {
    throw DomainError("continuation draws apply to Dice treatments only");
  }
  ContinuationDraw out;
  out.continues = draw < rule.delta;
  double quarters = rule.delta * 4;
  if (std::abs(quarters - std::round(quarters)) < 1e-12) {
    if (rule.delta == 0) {
      out.die_face = 4;
    } else {
      int face = 1 + static_cast<int>(draw * 4);
      out.die_face = face > 4 ? 4 : face;
    }
  }
  return out;
}

double expected_match_length(const ContinuationRule& rule) {
  if (rule.mode != ContinuationRule::Mode::Dice) return rule.horizon;
  if (!(rule.delta < 1)) throw DomainError("delta = 1 gives unbounded matches");
  return 1.0 / (1.0 - rule.delta);
}

}  // namespace boundedplay

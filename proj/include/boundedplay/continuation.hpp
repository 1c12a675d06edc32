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

#ifndef BOUNDEDPLAY_CONTINUATION_HPP_
#define BOUNDEDPLAY_CONTINUATION_HPP_

#include <string>
#include <string_view>

namespace boundedplay {

/// How a match ends: a fixed number of rounds, a continuation draw with
/// probability delta after each round (Dice), or a known horizon (Finite).
struct ContinuationRule {
  enum class Mode { Rounds, Dice, Finite };

  Mode mode = Mode::Rounds;
  double delta = 0;  // Dice
  int horizon = 1;   // Rounds and Finite

  static ContinuationRule rounds(int n);
  static ContinuationRule dice(double delta);
  static ContinuationRule finite(int horizon);

  // "rounds:50", "dice:0.75", "finite:4".
  std::string label() const;
  static ContinuationRule parse(std::string_view label);

  friend bool operator==(const ContinuationRule&, const ContinuationRule&) = default;
};

// Orders treatments rounds < dice < finite, then by parameter.
bool treatment_less(const ContinuationRule& a, const ContinuationRule& b);

struct ContinuationDraw {
  bool continues = false;
  // Face of the four-sided die shown in the narrative; 0 when delta is not
  // a multiple of 1/4.
  int die_face = 0;
};

// Continue iff draw < delta. Throws DomainError outside Dice mode.
ContinuationDraw sample_continuation(const ContinuationRule& rule, int round_index,
                                     double draw);

// Finite and Rounds: the horizon; Dice: 1 / (1 - delta).
double expected_match_length(const ContinuationRule& rule);

}  // namespace boundedplay

#endif  // BOUNDEDPLAY_CONTINUATION_HPP_

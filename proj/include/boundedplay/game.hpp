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

#ifndef BOUNDEDPLAY_GAME_HPP_
#define BOUNDEDPLAY_GAME_HPP_

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "boundedplay/errors.hpp"

namespace boundedplay {

enum class Game { Rps, Pd };

// RPS labels are ordered so that label (i + 1) % 3 beats label i.
enum class Label : std::uint8_t { Rock, Paper, Scissors, Cooperate, Defect };

// PD seat colour. RPS seats carry Role::None.
enum class Role { None, Red, Blue };

enum class Outcome { Win, Tie, Lose };

enum class Transition { Stay, Upgrade, Downgrade };

inline constexpr int action_count(Game g) { return g == Game::Rps ? 3 : 2; }

class Action {
 public:
  constexpr Action(Label label) : label_(label) {}  // NOLINT: implicit by design of the label set

  static Action from_index(Game game, int index);

  constexpr Label label() const { return label_; }
  constexpr Game game() const {
    return label_ == Label::Cooperate || label_ == Label::Defect ? Game::Pd
                                                                 : Game::Rps;
  }
  // Row/column index in the game's payoff matrix.
  constexpr int index() const {
    switch (label_) {
      case Label::Rock: return 0;
      case Label::Paper: return 1;
      case Label::Scissors: return 2;
      case Label::Cooperate: return 0;
      case Label::Defect: return 1;
    }
    return 0;
  }

  friend constexpr bool operator==(Action a, Action b) { return a.label_ == b.label_; }

 private:
  Label label_;
};

inline constexpr Action kRock{Label::Rock};
inline constexpr Action kPaper{Label::Paper};
inline constexpr Action kScissors{Label::Scissors};
inline constexpr Action kCooperate{Label::Cooperate};
inline constexpr Action kDefect{Label::Defect};

std::string_view to_string(Game g);
std::string_view to_string(Label l);
std::string_view to_string(Role r);
std::string_view to_string(Outcome o);
std::string_view to_string(Transition t);

Game parse_game(std::string_view text);
Role parse_role(std::string_view text);
Outcome parse_outcome(std::string_view text);

// Name shown to a participant: "Rock", or U/D for Red and L/R for Blue.
std::string display_name(Action a, Role role);

// Accepts canonical labels ("Paper", "Cooperate") and, for PD, the
// role-specific letters. Case-insensitive. Empty when not a valid action.
std::optional<Action> parse_action(std::string_view text, Game game,
                                   Role role = Role::None);

inline constexpr Outcome complement(Outcome o) {
  return o == Outcome::Win ? Outcome::Lose
                           : (o == Outcome::Lose ? Outcome::Win : Outcome::Tie);
}

// Circular dominance for RPS; PD pairs are always Tie.
Outcome outcome_of(Action a, Action b);

// Stay if equal, Upgrade if next beats prev, Downgrade if next loses to prev.
Transition classify_transition(Action prev, Action next);
Action apply_transition(Action prev, Transition t);

/// Bimatrix stage game. Cell (i, j) holds the payoffs when the row player
/// plays action i and the column player plays action j.
template <typename Scalar = double>
class BasicPayoffMatrix {
 public:
  using Grid = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  BasicPayoffMatrix() = default;
  BasicPayoffMatrix(std::string name, Game game, Grid row_payoffs,
                    Grid col_payoffs,
                    std::optional<Scalar> constant_sum = std::nullopt)
      : name_(std::move(name)),
        game_(game),
        row_(std::move(row_payoffs)),
        col_(std::move(col_payoffs)),
        constant_sum_(constant_sum) {
    if (row_.rows() != col_.rows() || row_.cols() != col_.cols()) {
      throw DomainError("payoff grids differ in shape");
    }
  }

  const std::string& name() const { return name_; }
  Game game() const { return game_; }
  Eigen::Index rows() const { return row_.rows(); }
  Eigen::Index cols() const { return row_.cols(); }
  const Grid& row_payoffs() const { return row_; }
  const Grid& col_payoffs() const { return col_; }
  std::optional<Scalar> constant_sum() const { return constant_sum_; }

  std::pair<Scalar, Scalar> cell(Eigen::Index r, Eigen::Index c) const {
    if (r < 0 || c < 0 || r >= rows() || c >= cols()) {
      throw DomainError("payoff cell out of range");
    }
    return {row_(r, c), col_(r, c)};
  }

  template <typename Other>
  BasicPayoffMatrix<Other> cast() const {
    std::optional<Other> cs;
    if (constant_sum_) cs = static_cast<Other>(*constant_sum_);
    return {name_, game_, row_.template cast<Other>(),
            col_.template cast<Other>(), cs};
  }

  friend bool operator==(const BasicPayoffMatrix& a, const BasicPayoffMatrix& b) {
    return a.name_ == b.name_ && a.game_ == b.game_ && a.row_ == b.row_ &&
           a.col_ == b.col_ && a.constant_sum_ == b.constant_sum_;
  }

 private:
  std::string name_;
  Game game_ = Game::Rps;
  Grid row_;
  Grid col_;
  std::optional<Scalar> constant_sum_;
};

using PayoffMatrix = BasicPayoffMatrix<double>;

// Modified RPS (winner with Rock earns 4, with Paper or Scissors 3; ties 2/2),
// stored in the dominance-consistent orientation. Constant sum 4.
PayoffMatrix rps_modified_matrix();
// Symmetric RPS: win 3, tie 2, lose 1.
PayoffMatrix rps_standard_matrix();
// Prisoner's dilemma: CC 65/65, CD 10/100, DC 100/10, DD 35/35.
PayoffMatrix pd_matrix();

// Names of the bundled matrices, in a fixed order.
std::vector<std::string> bundled_matrix_names();
// Reference copy of a bundled matrix, or empty for unknown names.
std::optional<PayoffMatrix> bundled_matrix(std::string_view name);

template <typename Scalar>
struct RoundResolution {
  Scalar payoff1;
  Scalar payoff2;
  Outcome outcome1;
};

template <typename Scalar>
RoundResolution<Scalar> resolve_round(const BasicPayoffMatrix<Scalar>& m,
                                      Action a1, Action a2) {
  if (a1.game() != m.game() || a2.game() != m.game()) {
    throw DomainError("action does not belong to matrix '" + m.name() + "'");
  }
  auto [p1, p2] = m.cell(a1.index(), a2.index());
  return {p1, p2, outcome_of(a1, a2)};
}

struct MatrixViolation {
  Eigen::Index row = -1;  // -1 when the violation is not tied to a cell
  Eigen::Index col = -1;
  std::string message;
};

// Empty iff every invariant holds: finite non-negative cells, shape matching
// the game, declared constant sum, dominance/payoff consistency for RPS, and
// identity with the reference data for bundled names.
std::vector<MatrixViolation> validate_matrix(const PayoffMatrix& m);

// Plain-text matrix format:
//
//   # comment
//   name rps_modified
//   game rps
//   size 3 3
//   constant_sum 4        (optional)
//   2,2 1,3 4,0           (one line per row, "row,col" payoff pairs)
//   ...
PayoffMatrix parse_matrix(std::string_view text);
std::string format_matrix(const PayoffMatrix& m);
PayoffMatrix load_matrix_file(const std::filesystem::path& path);

/// One resolved round; the atomic unit of every log.
struct RoundRecord {
  std::string session_id;
  std::string match_id;
  int round_index = 1;  // 1-based
  Game game = Game::Rps;
  std::string treatment;  // "rounds:50", "dice:0.75", "finite:4"
  std::array<std::string, 2> agent_ids;
  std::array<Role, 2> roles{Role::None, Role::None};
  std::array<Action, 2> actions{kRock, kRock};
  std::array<double, 2> payoffs{0, 0};
  // Empty for PD rounds.
  std::array<std::optional<Outcome>, 2> outcomes;
  // Continuation draw after this round; die_face 0 when no die narrative.
  std::optional<bool> continues;
  int die_face = 0;
  std::string timestamp;

  friend bool operator==(const RoundRecord&, const RoundRecord&) = default;
};

// Builds a record whose payoffs and outcomes follow from the matrix.
RoundRecord make_round_record(const PayoffMatrix& m, Action a1, Action a2);

}  // namespace boundedplay

#endif  // BOUNDEDPLAY_GAME_HPP_

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

#include "boundedplay/game.hpp"

#include <gtest/gtest.h>

#include <filesystem>

namespace boundedplay {
namespace {

const std::array<Action, 3> kRpsActions{kRock, kPaper, kScissors};

TEST(OutcomeTest, CircularDominance) {
  EXPECT_EQ(outcome_of(kRock, kScissors), Outcome::Win);
  EXPECT_EQ(outcome_of(kPaper, kPaper), Outcome::Tie);
  EXPECT_EQ(outcome_of(kScissors, kRock), Outcome::Lose);
  EXPECT_EQ(outcome_of(kScissors, kPaper), Outcome::Win);
  EXPECT_EQ(outcome_of(kPaper, kRock), Outcome::Win);
}

TEST(OutcomeTest, PdIsAlwaysTie) {
  EXPECT_EQ(outcome_of(kCooperate, kDefect), Outcome::Tie);
  EXPECT_EQ(outcome_of(kDefect, kDefect), Outcome::Tie);
}

TEST(OutcomeTest, MixedGamesRejected) {
  EXPECT_THROW(outcome_of(kRock, kDefect), DomainError);
}

TEST(OutcomeTest, Antisymmetry) {
  for (Action a : kRpsActions) {
    for (Action b : kRpsActions) {
      EXPECT_EQ(outcome_of(a, b) == Outcome::Win, outcome_of(b, a) == Outcome::Lose);
      EXPECT_EQ(outcome_of(a, b) == Outcome::Tie, a == b);
      EXPECT_EQ(outcome_of(b, a), complement(outcome_of(a, b)));
    }
  }
}

TEST(ResolveRoundTest, ModifiedRps) {
  auto m = rps_modified_matrix();
  auto r = resolve_round(m, kRock, kScissors);
  EXPECT_EQ(r.payoff1, 4);
  EXPECT_EQ(r.payoff2, 0);
  EXPECT_EQ(r.outcome1, Outcome::Win);
  r = resolve_round(m, kPaper, kPaper);
  EXPECT_EQ(r.payoff1, 2);
  EXPECT_EQ(r.payoff2, 2);
  EXPECT_EQ(r.outcome1, Outcome::Tie);
}

TEST(ResolveRoundTest, PrisonersDilemma) {
  auto r = resolve_round(pd_matrix(), kCooperate, kDefect);
  EXPECT_EQ(r.payoff1, 10);
  EXPECT_EQ(r.payoff2, 100);
  EXPECT_EQ(r.outcome1, Outcome::Tie);
}

TEST(ResolveRoundTest, ForeignActionRejected) {
  EXPECT_THROW(resolve_round(pd_matrix(), kRock, kDefect), DomainError);
  EXPECT_THROW(rps_modified_matrix().cell(3, 0), DomainError);
}

TEST(ResolveRoundTest, PureFunction) {
  auto m = rps_modified_matrix();
  for (Action a : kRpsActions) {
    for (Action b : kRpsActions) {
      auto x = resolve_round(m, a, b);
      auto y = resolve_round(m, a, b);
      EXPECT_EQ(x.payoff1, y.payoff1);
      EXPECT_EQ(x.payoff2, y.payoff2);
      EXPECT_EQ(x.outcome1, y.outcome1);
    }
  }
}

TEST(PayoffMatrixTest, ModifiedRpsIsConstantSumFour) {
  auto m = rps_modified_matrix();
  EXPECT_TRUE(((m.row_payoffs() + m.col_payoffs()).array() == 4.0).all());
}

TEST(PayoffMatrixTest, DominanceConsistentPayoffs) {
  auto m = rps_modified_matrix();
  for (Action a : kRpsActions) {
    for (Action b : kRpsActions) {
      auto r = resolve_round(m, a, b);
      if (r.outcome1 == Outcome::Win) {
        EXPECT_GT(r.payoff1, 2);
        EXPECT_LT(r.payoff2, 2);
      } else if (r.outcome1 == Outcome::Lose) {
        EXPECT_LT(r.payoff1, 2);
        EXPECT_GT(r.payoff2, 2);
      }
    }
  }
  // Winning with Rock pays 4, with Paper or Scissors 3.
  EXPECT_EQ(resolve_round(m, kRock, kScissors).payoff1, 4);
  EXPECT_EQ(resolve_round(m, kPaper, kRock).payoff1, 3);
  EXPECT_EQ(resolve_round(m, kScissors, kPaper).payoff1, 3);
}

TEST(TransitionTest, Classification) {
  EXPECT_EQ(classify_transition(kRock, kPaper), Transition::Upgrade);
  EXPECT_EQ(classify_transition(kRock, kRock), Transition::Stay);
  EXPECT_EQ(classify_transition(kRock, kScissors), Transition::Downgrade);
  EXPECT_EQ(classify_transition(kPaper, kScissors), Transition::Upgrade);
  EXPECT_EQ(classify_transition(kPaper, kRock), Transition::Downgrade);
  EXPECT_THROW(classify_transition(kCooperate, kDefect), DomainError);
}

TEST(TransitionTest, ExactlyOneValuePerPair) {
  for (Action a : kRpsActions) {
    for (Action b : kRpsActions) {
      Transition t = classify_transition(a, b);
      EXPECT_EQ(apply_transition(a, t), b);
      if (t == Transition::Upgrade) EXPECT_EQ(outcome_of(b, a), Outcome::Win);
      if (t == Transition::Downgrade) EXPECT_EQ(outcome_of(b, a), Outcome::Lose);
    }
  }
}

TEST(TransitionTest, ThreeStepsReturnHome) {
  for (Action a : kRpsActions) {
    for (Transition t : {Transition::Upgrade, Transition::Downgrade}) {
      EXPECT_EQ(apply_transition(apply_transition(apply_transition(a, t), t), t), a);
      EXPECT_NE(apply_transition(a, t), a);
    }
  }
}

TEST(ValidateMatrixTest, BundledMatricesAreClean) {
  EXPECT_TRUE(validate_matrix(rps_modified_matrix()).empty());
  EXPECT_TRUE(validate_matrix(pd_matrix()).empty());
  EXPECT_TRUE(validate_matrix(rps_standard_matrix()).empty());
}

TEST(ValidateMatrixTest, ConstantSumViolationNamesCell) {
  auto m = rps_modified_matrix();
  auto row = m.row_payoffs();
  row(0, 2) = 5;  // Rock beats Scissors now pays (5, 0)
  PayoffMatrix bad("custom_rps", Game::Rps, row, m.col_payoffs(), 4.0);
  auto v = validate_matrix(bad);
  ASSERT_EQ(v.size(), 1u);
  EXPECT_EQ(v[0].row, 0);
  EXPECT_EQ(v[0].col, 2);
  EXPECT_NE(v[0].message.find("constant-sum"), std::string::npos);
}

TEST(ValidateMatrixTest, BundledNameMustMatchReference) {
  auto m = pd_matrix();
  auto row = m.row_payoffs();
  row(1, 1) = 30;
  PayoffMatrix bad("pd_dalbo", Game::Pd, row, m.col_payoffs());
  EXPECT_FALSE(validate_matrix(bad).empty());
}

TEST(ValidateMatrixTest, NegativeAndNonFinite) {
  PayoffMatrix::Grid r(2, 2), c(2, 2);
  r << -1, 0, 0, std::nan("");
  c << 0, 0, 0, 0;
  auto v = validate_matrix(PayoffMatrix("x", Game::Pd, r, c));
  EXPECT_EQ(v.size(), 2u);
}

TEST(ValidateMatrixTest, WrongShapeForGame) {
  PayoffMatrix::Grid r = PayoffMatrix::Grid::Ones(2, 3);
  EXPECT_FALSE(validate_matrix(PayoffMatrix("x", Game::Rps, r, r)).empty());
}

TEST(MatrixFileTest, BundledFilesMatchReference) {
  const std::filesystem::path dir = std::filesystem::path(BOUNDEDPLAY_DATA_DIR) / "matrices";
  for (const auto& name : bundled_matrix_names()) {
    auto loaded = load_matrix_file(dir / (name + ".txt"));
    EXPECT_EQ(loaded, *bundled_matrix(name)) << name;
    EXPECT_TRUE(validate_matrix(loaded).empty()) << name;
  }
}

TEST(MatrixFileTest, FormatThenParseIsIdentity) {
  for (const auto& name : bundled_matrix_names()) {
    auto m = *bundled_matrix(name);
    EXPECT_EQ(parse_matrix(format_matrix(m)), m);
  }
}

TEST(MatrixFileTest, ParseErrors) {
  EXPECT_THROW(parse_matrix("game rps\nsize 1 1\n1,1\n"), ConfigError);
  EXPECT_THROW(parse_matrix("name a\ngame rps\nsize 2 2\n1,1 2,2\n"), ConfigError);
  EXPECT_THROW(parse_matrix("name a\ngame rps\nsize 1 1\n1;1\n"), ConfigError);
  EXPECT_THROW(parse_matrix("name a\ngame chess\nsize 1 1\n1,1\n"), ConfigError);
}

TEST(ActionTest, DisplayNamesFollowRole) {
  EXPECT_EQ(display_name(kCooperate, Role::Red), "U");
  EXPECT_EQ(display_name(kCooperate, Role::Blue), "L");
  EXPECT_EQ(display_name(kDefect, Role::Red), "D");
  EXPECT_EQ(display_name(kDefect, Role::Blue), "R");
  EXPECT_EQ(display_name(kPaper, Role::None), "Paper");
}

TEST(ActionTest, ParseAction) {
  EXPECT_EQ(parse_action(" rock ", Game::Rps), kRock);
  EXPECT_EQ(parse_action("L", Game::Pd, Role::Blue), kCooperate);
  EXPECT_EQ(parse_action("r", Game::Pd, Role::Blue), kDefect);
  EXPECT_FALSE(parse_action("L", Game::Pd, Role::Red));
  EXPECT_FALSE(parse_action("Lizard", Game::Rps));
}

TEST(RoundRecordTest, PayoffsFollowMatrix) {
  auto rec = make_round_record(rps_modified_matrix(), kPaper, kScissors);
  EXPECT_EQ(rec.payoffs[0], 1);
  EXPECT_EQ(rec.payoffs[1], 3);
  EXPECT_EQ(rec.outcomes[0], Outcome::Lose);
  EXPECT_EQ(rec.outcomes[1], Outcome::Win);
  auto pd = make_round_record(pd_matrix(), kDefect, kDefect);
  EXPECT_FALSE(pd.outcomes[0].has_value());
  EXPECT_EQ(pd.payoffs[0], 35);
}

}  // namespace
}  // namespace boundedplay

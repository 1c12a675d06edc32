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

#ifndef BOUNDEDPLAY_AGENTS_HPP_
#define BOUNDEDPLAY_AGENTS_HPP_

#include <Eigen/Dense>

#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "boundedplay/equilibrium.hpp"
#include "boundedplay/game.hpp"

namespace boundedplay {

/// Outcome-conditioned transition probabilities. Rows are indexed by the
/// previous outcome (Win, Tie, Lose), columns by the transition (Stay,
/// Upgrade, Downgrade).
struct TransitionPolicyTable {
  Eigen::Matrix3d probabilities = Eigen::Matrix3d::Constant(1.0 / 3.0);

  static int row_of(Outcome o) { return static_cast<int>(o); }
  static int col_of(Transition t) { return static_cast<int>(t); }

  double operator()(Outcome o, Transition t) const {
    return probabilities(row_of(o), col_of(t));
  }
  Eigen::RowVector3d row(Outcome o) const { return probabilities.row(row_of(o)); }

  // Human-readable violations; empty when every row is a distribution.
  std::vector<std::string> violations() const;

  static TransitionPolicyTable wslu();
  static TransitionPolicyTable wdls();
  static TransitionPolicyTable wslc();
  static TransitionPolicyTable uniform();

  friend bool operator==(const TransitionPolicyTable&,
                         const TransitionPolicyTable&) = default;
};

enum class AgentKind { UniformRandom, FixedMixed, TransitionBot, PdRule, Llm, Replay, Human };

enum class PdRuleKind { AlwaysCooperate, AlwaysDefect, TitForTat, Grim };

struct UniformParams {
  friend bool operator==(const UniformParams&, const UniformParams&) = default;
};
struct FixedMixedParams {
  MixedStrategy mixture;
  friend bool operator==(const FixedMixedParams& a, const FixedMixedParams& b) {
    return a.mixture.weights() == b.mixture.weights();
  }
};
struct TransitionBotParams {
  TransitionPolicyTable table;
  friend bool operator==(const TransitionBotParams&, const TransitionBotParams&) = default;
};
struct PdRuleParams {
  PdRuleKind rule = PdRuleKind::TitForTat;
  friend bool operator==(const PdRuleParams&, const PdRuleParams&) = default;
};
// Endpoint name resolved by the llm gateway configuration.
struct LlmParams {
  std::string endpoint;
  friend bool operator==(const LlmParams&, const LlmParams&) = default;
};
struct ReplayParams {
  std::vector<Action> script;
  friend bool operator==(const ReplayParams&, const ReplayParams&) = default;
};
struct HumanParams {
  friend bool operator==(const HumanParams&, const HumanParams&) = default;
};

using AgentParams = std::variant<UniformParams, FixedMixedParams, TransitionBotParams,
                                 PdRuleParams, LlmParams, ReplayParams, HumanParams>;

struct AgentSpec {
  std::string name;
  Game game = Game::Rps;
  AgentParams params;
  // Stream label mixed into the per-match seed derivation.
  std::string seed_stream;

  AgentKind kind() const { return static_cast<AgentKind>(params.index()); }

  friend bool operator==(const AgentSpec&, const AgentSpec&) = default;
};

std::string_view to_string(AgentKind k);
std::string_view to_string(PdRuleKind r);
AgentKind parse_agent_kind(std::string_view text);
PdRuleKind parse_pd_rule(std::string_view text);

// Throws ConfigError if the parameters do not fit the declared kind/game.
void validate_agent(const AgentSpec& spec);

/// What an agent knows between rounds.
struct AgentState {
  std::vector<Action> own;
  std::vector<Action> opponent;
  std::vector<Outcome> outcomes;
  double cumulative_payoff = 0;
  std::uint64_t rng_cursor = 0;

  std::size_t rounds() const { return own.size(); }
  void record(Action own_action, Action opponent_action, double payoff);
};

/// Next action given only history through the previous round. `draw` in
/// [0, 1) comes from the orchestrator's stream for this agent.
Action policy_step(const AgentSpec& spec, const AgentState& state, double draw);

// Index of the first cumulative bucket containing `draw`.
int inverse_cdf(const Eigen::Ref<const Eigen::VectorXd>& probabilities, double draw);

AgentSpec build_transition_bot(const TransitionPolicyTable& table, std::string name);

/// uniform, nash_rps, wslu, wdls, wslc, allc, alld, titfortat, grim.
const std::map<std::string, AgentSpec>& builtin_catalog();

// Catalog entry by name; throws ConfigError for unknown names.
AgentSpec lookup_agent(const std::string& name);

}  // namespace boundedplay

#endif  // BOUNDEDPLAY_AGENTS_HPP_

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

#include "boundedplay/agents.hpp"

#include <cmath>

namespace boundedplay {

std::vector<std::string> TransitionPolicyTable::violations() const {
  std::vector<std::string> out;
  for (Outcome o : {Outcome::Win, Outcome::Tie, Outcome::Lose}) {
    auto r = row(o);
    for (int c = 0; c < 3; ++c) {
      if (!(r(c) >= 0.0 && r(c) <= 1.0)) {
        out.push_back(std::string(to_string(o)) + " row has entry outside [0, 1]");
        break;
      }
    }
    if (std::abs(r.sum() - 1.0) > kNormalizationTol) {
      out.push_back(std::string(to_string(o)) + " row does not sum to 1");
    }
  }
  return out;
}

TransitionPolicyTable TransitionPolicyTable::wslu() {
  TransitionPolicyTable t;
  t.probabilities.row(0) << 0.8, 0.1, 0.1;
  t.probabilities.row(2) << 0.1, 0.8, 0.1;
  return t;
}

TransitionPolicyTable TransitionPolicyTable::wdls() {
  TransitionPolicyTable t;
  t.probabilities.row(0) << 0.1, 0.1, 0.8;
  t.probabilities.row(2) << 0.8, 0.1, 0.1;
  return t;
}

TransitionPolicyTable TransitionPolicyTable::wslc() {
  TransitionPolicyTable t;
  t.probabilities.row(0) << 1.0, 0.0, 0.0;
  t.probabilities.row(2) << 0.0, 0.5, 0.5;
  return t;
}

TransitionPolicyTable TransitionPolicyTable::uniform() { return {}; }

std::string_view to_string(AgentKind k) {
  switch (k) {
    case AgentKind::UniformRandom: return "uniform_random";
    case AgentKind::FixedMixed: return "fixed_mixed";
    case AgentKind::TransitionBot: return "transition_bot";
    case AgentKind::PdRule: return "pd_rule";
    case AgentKind::Llm: return "llm";
    case AgentKind::Replay: return "replay";
    case AgentKind::Human: return "human";
  }
  return "?";
}

std::string_view to_string(PdRuleKind r) {
  switch (r) {
    case PdRuleKind::AlwaysCooperate: return "always_cooperate";
    case PdRuleKind::AlwaysDefect: return "always_defect";
    case PdRuleKind::TitForTat: return "tit_for_tat";
    case PdRuleKind::Grim: return "grim";
  }
  return "?";
}

AgentKind parse_agent_kind(std::string_view text) {
  for (int k = 0; k <= static_cast<int>(AgentKind::Human); ++k) {
    if (to_string(static_cast<AgentKind>(k)) == text) return static_cast<AgentKind>(k);
  }
  throw ConfigError("unknown agent kind '" + std::string(text) + "'");
}

PdRuleKind parse_pd_rule(std::string_view text) {
  for (int k = 0; k <= static_cast<int>(PdRuleKind::Grim); ++k) {
    if (to_string(static_cast<PdRuleKind>(k)) == text) return static_cast<PdRuleKind>(k);
  }
  throw ConfigError("unknown PD rule '" + std::string(text) + "'");
}

void validate_agent(const AgentSpec& spec) {
  auto fail = [&](const std::string& why) {
    throw ConfigError("agent '" + spec.name + "': " + why);
  };
  if (spec.name.empty()) throw ConfigError("agent without name");
  std::visit(
      [&](const auto& p) {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, FixedMixedParams>) {
          if (p.mixture.size() != action_count(spec.game)) {
            fail("mixture length does not match the game");
          }
        } else if constexpr (std::is_same_v<P, TransitionBotParams>) {
          if (spec.game != Game::Rps) fail("transition bots play RPS only");
          auto v = p.table.violations();
          if (!v.empty()) fail("malformed transition table: " + v.front());
        } else if constexpr (std::is_same_v<P, PdRuleParams>) {
          if (spec.game != Game::Pd) fail("PD rules play PD only");
        } else if constexpr (std::is_same_v<P, LlmParams>) {
          if (p.endpoint.empty()) fail("LLM agent without endpoint");
        } else if constexpr (std::is_same_v<P, ReplayParams>) {
          for (Action a : p.script) {
            if (a.game() != spec.game) fail("replay script action from another game");
          }
        }
      },
      spec.params);
}

void AgentState::record(Action own_action, Action opponent_action, double payoff) {
  own.push_back(own_action);
  opponent.push_back(opponent_action);
  outcomes.push_back(outcome_of(own_action, opponent_action));
  cumulative_payoff += payoff;
}

int inverse_cdf(const Eigen::Ref<const Eigen::VectorXd>& probabilities, double draw) {
  double cum = 0;
  int last_positive = 0;
  for (Eigen::Index i = 0; i < probabilities.size(); ++i) {
    if (probabilities(i) <= 0) continue;
    last_positive = static_cast<int>(i);
    cum += probabilities(i);
    if (draw < cum) return static_cast<int>(i);
  }
  return last_positive;
}

Action policy_step(const AgentSpec& spec, const AgentState& state, double draw) {
  if (!(draw >= 0.0 && draw < 1.0)) throw DomainError("draw outside [0, 1)");
  const int n = action_count(spec.game);
  auto uniform_pick = [&] {
    int i = static_cast<int>(draw * n);
    return Action::from_index(spec.game, i < n ? i : n - 1);
  };
  return std::visit(
      [&](const auto& p) -> Action {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, UniformParams>) {
          return uniform_pick();
        } else if constexpr (std::is_same_v<P, FixedMixedParams>) {
          return Action::from_index(spec.game, inverse_cdf(p.mixture.weights(), draw));
        } else if constexpr (std::is_same_v<P, TransitionBotParams>) {
          if (state.rounds() == 0) return uniform_pick();
          Eigen::Vector3d row = p.table.row(state.outcomes.back()).transpose();
          auto t = static_cast<Transition>(inverse_cdf(row, draw));
          return apply_transition(state.own.back(), t);
        } else if constexpr (std::is_same_v<P, PdRuleParams>) {
          switch (p.rule) {
            case PdRuleKind::AlwaysCooperate: return kCooperate;
            case PdRuleKind::AlwaysDefect: return kDefect;
            case PdRuleKind::TitForTat:
              return state.rounds() == 0 ? kCooperate : state.opponent.back();
            case PdRuleKind::Grim:
              for (Action a : state.opponent) {
                if (a == kDefect) return kDefect;
              }
              return kCooperate;
          }
          return kDefect;
        } else if constexpr (std::is_same_v<P, ReplayParams>) {
          if (state.rounds() >= p.script.size()) {
            throw ProtocolError("replay script for '" + spec.name + "' exhausted");
          }
          return p.script[state.rounds()];
        } else if constexpr (std::is_same_v<P, LlmParams>) {
          throw ProtocolError("LLM agent '" + spec.name +
                              "' must be driven through the gateway");
        } else {
          throw ProtocolError("human agent '" + spec.name +
                              "' must be served by the session service");
        }
      },
      spec.params);
}

AgentSpec build_transition_bot(const TransitionPolicyTable& table, std::string name) {
  AgentSpec spec{std::move(name), Game::Rps, TransitionBotParams{table}, {}};
  spec.seed_stream = spec.name;
  validate_agent(spec);
  return spec;
}

const std::map<std::string, AgentSpec>& builtin_catalog() {
  static const std::map<std::string, AgentSpec> catalog = [] {
    std::map<std::string, AgentSpec> c;
    auto add = [&](AgentSpec s) {
      s.seed_stream = s.name;
      validate_agent(s);
      c.emplace(s.name, std::move(s));
    };
    add({"uniform", Game::Rps, UniformParams{}, {}});
    add({"nash_rps", Game::Rps, FixedMixedParams{MixedStrategy{0.25, 0.5, 0.25}}, {}});
    add(build_transition_bot(TransitionPolicyTable::wslu(), "wslu"));
    add(build_transition_bot(TransitionPolicyTable::wdls(), "wdls"));
    add(build_transition_bot(TransitionPolicyTable::wslc(), "wslc"));
    add({"allc", Game::Pd, PdRuleParams{PdRuleKind::AlwaysCooperate}, {}});
    add({"alld", Game::Pd, PdRuleParams{PdRuleKind::AlwaysDefect}, {}});
    add({"titfortat", Game::Pd, PdRuleParams{PdRuleKind::TitForTat}, {}});
    add({"grim", Game::Pd, PdRuleParams{PdRuleKind::Grim}, {}});
    return c;
  }();
  return catalog;
}

AgentSpec lookup_agent(const std::string& name) {
  const auto& c = builtin_catalog();
  auto it = c.find(name);
  if (it == c.end()) throw ConfigError("unknown agent '" + name + "'");
  return it->second;
}

}  // namespace boundedplay

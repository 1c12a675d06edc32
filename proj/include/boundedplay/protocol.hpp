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

#ifndef BOUNDEDPLAY_PROTOCOL_HPP_
#define BOUNDEDPLAY_PROTOCOL_HPP_

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "boundedplay/agents.hpp"
#include "boundedplay/continuation.hpp"
#include "boundedplay/game.hpp"
#include "boundedplay/llm.hpp"
#include "boundedplay/persistence.hpp"
#include "boundedplay/rng.hpp"

namespace boundedplay {

enum class Ordering { Normal, Usd };

std::string_view to_string(Ordering o);
Ordering parse_ordering(std::string_view text);

enum class Termination {
  HorizonReached,
  DiceEnded,
  ProtocolViolation,
  GatewayFailure,
  HumanAbandoned,
};

std::string_view to_string(Termination t);

struct Participant {
  std::string subject;  // stable id within the session
  AgentSpec agent;
  Role role = Role::None;
};

struct PlannedMatch {
  std::string match_id;
  std::array<int, 2> seats{0, 0};  // indices into SessionPlan::participants
  ContinuationRule rule;
  int block = 0;       // treatment block, 0-based
  int repetition = 0;  // 0-based
};

struct SessionPlan {
  std::string session_id;
  Game game = Game::Rps;
  std::vector<Participant> participants;
  std::vector<PlannedMatch> matches;
  std::vector<ContinuationRule> treatments;  // block order
  Ordering ordering = Ordering::Normal;
  int rounds_per_match = 0;  // fixed-length plans only
  int repetitions = 1;
  int matches_per_block = 0;  // per subject; PD only
  std::uint64_t master_seed = 0;
  PayoffMatrix matrix;

  const Participant& seat(const PlannedMatch& m, int s) const {
    return participants.at(static_cast<std::size_t>(m.seats.at(static_cast<std::size_t>(s))));
  }
};

// Throws ConfigError on empty plans, mixed games, bad seats or a matrix that
// does not match the game.
void validate_plan(const SessionPlan& plan);
Json plan_to_json(const SessionPlan& plan);

// All unordered pairs of agents, self-pairs included unless disabled, each
// `repetitions` times.
SessionPlan plan_rps_tournament(const std::vector<AgentSpec>& agents, int repetitions,
                                int rounds, bool include_self_play = true,
                                std::string session_id = "rps-tournament",
                                std::uint64_t master_seed = 0);

SessionPlan plan_bot_series(const AgentSpec& agent, const std::vector<AgentSpec>& bots,
                            int repetitions, int rounds,
                            std::string session_id = "rps-bots",
                            std::uint64_t master_seed = 0);

enum class PdMode { Dice, Finite };
PdMode parse_pd_mode(std::string_view text);

// agents[0, N/2) play Red, the rest Blue. In global match round m Red i
// meets Blue (i + m) mod N/2; rounds are split into three treatment blocks.
SessionPlan plan_pd_session(const std::vector<AgentSpec>& agents, Ordering ordering,
                            PdMode mode, std::string session_id = "pd-session",
                            std::uint64_t master_seed = 0);

// One fixed Red/Blue pair playing `matches_per_block` matches under each
// treatment in turn. Used for live sessions with a single human.
SessionPlan plan_pd_pair(const AgentSpec& red, const AgentSpec& blue,
                         const std::vector<ContinuationRule>& treatments, int matches_per_block,
                         std::string session_id = "pd-pair", std::uint64_t master_seed = 0);

// "human", a catalog name, or the name of a configured LLM endpoint.
AgentSpec resolve_agent(const std::string& name, Game game,
                        const std::set<std::string>& endpoints = {});

// Treatments for the three PD blocks in the order the session plays them.
std::vector<ContinuationRule> pd_treatments(PdMode mode, Ordering ordering);

/// Protocol text shown to one seat, rendered from the bundled templates.
class SeatNarrator {
 public:
  SeatNarrator(const SessionPlan& plan, const PlannedMatch& match, int seat);

  std::string system() const;
  // PD treatment introduction; empty for RPS.
  std::string intro() const;
  // Decision prompt for round t (1-based). For PD rounds after the first it
  // carries the continuation notice of the previous round.
  std::string decision(int round, int previous_die_face) const;
  std::string feedback(const std::vector<RoundRecord>& rounds) const;
  // Closing notice after the last round; empty for RPS.
  std::string closing(const std::vector<RoundRecord>& rounds, int die_face) const;

 private:
  Bindings common() const;

  const PromptTemplate* tmpl_;
  Game game_;
  Role role_;
  int seat_;
  ContinuationRule rule_;
  int block_;
  int matches_per_block_;
};

// Throws ConfigError when the plan asks for narrative the templates cannot
// express (dice narrative needs delta in {0, 0.5, 0.75}).
void check_narrative(const ContinuationRule& rule);

/// Gateways by endpoint name, shared across matches.
class GatewayPool {
 public:
  GatewayPool() = default;
  explicit GatewayPool(const std::vector<ModelEndpoint>& endpoints);
  void add(const ModelEndpoint& e, std::shared_ptr<ChatBackend> backend = nullptr);
  Gateway& at(const std::string& name);
  bool contains(const std::string& name) const { return gateways_.count(name) > 0; }
  std::set<std::string> names() const;

 private:
  std::map<std::string, std::unique_ptr<Gateway>> gateways_;
};

struct MatchResult {
  MatchHeader header;
  std::vector<RoundRecord> rounds;
  MatchFooter footer;
  Termination termination = Termination::HorizonReached;
  // Transcripts of LLM and human seats, by seat.
  std::array<std::optional<ChatTranscript>, 2> transcripts;

  bool aborted() const { return footer.aborted; }
  // match_start, rounds, transcripts, match_end; sequence numbers unset.
  std::vector<Envelope> envelopes() const;
};

/// One match, advanced round by round. Automated seats decide in
/// start_round(); human seats commit through commit().
class MatchEngine {
 public:
  MatchEngine(const SessionPlan& plan, const PlannedMatch& match, GatewayPool* gateways);

  const MatchHeader& header() const { return result_.header; }
  bool finished() const { return finished_; }
  bool in_round() const { return started_; }
  int round() const { return round_; }  // round awaiting choices, 1-based
  bool is_human(int seat) const;
  bool pending(int seat) const;
  bool ready() const;

  // Asks every automated seat for its round choice. Aborts the match on a
  // protocol violation or gateway failure.
  void start_round();
  // Throws ProtocolError when the seat already committed or is not pending.
  void commit(int seat, Action a);
  // Resolves the round once both seats committed.
  const RoundRecord& resolve();
  // Ends the match early with the given cause.
  void abort(Termination cause, const std::string& reason);

  const std::vector<RoundRecord>& rounds() const { return result_.rounds; }
  // Protocol text shown so far to a seat (for human and LLM seats).
  const std::vector<ChatMessage>& narrative(int seat) const;
  double total(int seat) const { return totals_[static_cast<std::size_t>(seat)]; }
  int last_die_face() const { return last_face_; }

  MatchResult result() const;

 private:
  void finish(Termination cause, bool aborted, const std::string& reason);
  void open_seat(int seat);

  const SessionPlan& plan_;
  PlannedMatch match_;
  GatewayPool* gateways_;
  PayoffMatrix matrix_;
  std::array<AgentSpec, 2> specs_;
  std::array<AgentState, 2> states_;
  std::array<RandomStream, 2> streams_;
  RandomStream continuation_;
  std::array<std::optional<SeatNarrator>, 2> narrators_;
  std::array<ChatTranscript, 2> transcripts_;
  std::array<std::optional<Action>, 2> committed_;
  std::array<double, 2> totals_{0, 0};
  MatchResult result_;
  int round_ = 1;
  int last_face_ = 0;
  bool started_ = false;
  bool finished_ = false;
};

// Runs a match with automated seats only.
MatchResult run_match(const SessionPlan& plan, const PlannedMatch& match, GatewayPool& gateways);

struct RunOptions {
  int jobs = 1;
  // Called in plan order as results are committed.
  std::function<void(const MatchResult&)> on_match;
};

// Runs every match, up to `jobs` at a time, appending each match's records
// to the sink in plan order.
std::vector<MatchResult> run_session(const SessionPlan& plan, GatewayPool& gateways,
                                     LogWriter* sink, const RunOptions& options = {});

}  // namespace boundedplay

#endif  // BOUNDEDPLAY_PROTOCOL_HPP_

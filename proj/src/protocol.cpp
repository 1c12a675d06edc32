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

#include "boundedplay/protocol.hpp"

#include <atomic>
#include <cmath>
#include <condition_variable>
#include <cstdio>
#include <exception>
#include <mutex>
#include <set>
#include <thread>

#include "boundedplay/errors.hpp"
#include "boundedplay/format.hpp"

namespace boundedplay {
namespace {

std::string match_id(int n) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "m%04d", n);
  return buf;
}

std::string role_name(Role r) { return r == Role::Blue ? "Blue" : "Red"; }

std::string ordinal(int block) {
  static const char* names[] = {"first", "second", "third", "fourth", "fifth", "sixth"};
  return block >= 0 && block < 6 ? names[block] : std::to_string(block + 1) + "th";
}

// Continuing faces for a four-sided die when delta is a multiple of 1/4.
int continuing_faces(double delta) { return static_cast<int>(std::lround(delta * 4)); }

std::string face_list(int from, int to) {
  std::string out;
  for (int f = from; f <= to; ++f) {
    if (f > from) out += f == to ? " or " : ", ";
    out += std::to_string(f);
  }
  return out;
}

std::vector<std::string> unique_subjects(const std::vector<AgentSpec>& agents) {
  std::map<std::string, int> seen;
  std::vector<std::string> out;
  for (const auto& a : agents) {
    int n = seen[a.name]++;
    out.push_back(n == 0 ? a.name : a.name + "#" + std::to_string(n + 1));
  }
  return out;
}

}  // namespace

std::string_view to_string(Ordering o) { return o == Ordering::Normal ? "normal" : "usd"; }

Ordering parse_ordering(std::string_view text) {
  if (text == "normal") return Ordering::Normal;
  if (text == "usd") return Ordering::Usd;
  throw ConfigError("unknown ordering '" + std::string(text) + "' (normal, usd)");
}

std::string_view to_string(Termination t) {
  switch (t) {
    case Termination::HorizonReached: return "horizon_reached";
    case Termination::DiceEnded: return "dice_ended";
    case Termination::ProtocolViolation: return "protocol_violation";
    case Termination::GatewayFailure: return "gateway_failure";
    case Termination::HumanAbandoned: return "human_abandoned";
  }
  return "?";
}

PdMode parse_pd_mode(std::string_view text) {
  if (text == "dice") return PdMode::Dice;
  if (text == "finite") return PdMode::Finite;
  throw ConfigError("unknown PD mode '" + std::string(text) + "' (dice, finite)");
}

void validate_plan(const SessionPlan& plan) {
  if (plan.session_id.empty()) throw ConfigError("plan without a session id");
  if (plan.participants.empty()) throw ConfigError("plan without participants");
  if (plan.matches.empty()) throw ConfigError("plan without matches");
  if (plan.matrix.game() != plan.game) throw ConfigError("payoff matrix does not match the game");
  auto violations = validate_matrix(plan.matrix);
  if (!violations.empty()) throw ConfigError("payoff matrix: " + violations.front().message);
  std::set<std::string> subjects;
  for (const auto& p : plan.participants) {
    if (p.agent.game != plan.game) {
      throw ConfigError("agent '" + p.agent.name + "' does not play " +
                        std::string(to_string(plan.game)));
    }
    validate_agent(p.agent);
    if (!subjects.insert(p.subject).second) {
      throw ConfigError("duplicate subject '" + p.subject + "'");
    }
  }
  std::set<std::string> ids;
  const int n = static_cast<int>(plan.participants.size());
  for (const auto& m : plan.matches) {
    if (!ids.insert(m.match_id).second) throw ConfigError("duplicate match id " + m.match_id);
    for (int s : m.seats) {
      if (s < 0 || s >= n) throw ConfigError("match " + m.match_id + " has a bad seat");
    }
    if (plan.game == Game::Pd && (plan.seat(m, 0).role != Role::Red ||
                                  plan.seat(m, 1).role != Role::Blue)) {
      throw ConfigError("PD match " + m.match_id + " must seat Red then Blue");
    }
    if (plan.game == Game::Rps && m.rule.mode != ContinuationRule::Mode::Rounds) {
      throw ConfigError("RPS matches run a fixed number of rounds");
    }
    for (int s = 0; s < 2; ++s) {
      auto k = plan.seat(m, s).agent.kind();
      if (k == AgentKind::Llm || k == AgentKind::Human) check_narrative(m.rule);
    }
  }
}

Json plan_to_json(const SessionPlan& plan) {
  Json j;
  j["session"] = plan.session_id;
  j["game"] = to_string(plan.game);
  j["matrix"] = plan.matrix.name();
  j["master_seed"] = plan.master_seed;
  if (plan.game == Game::Pd) {
    j["ordering"] = to_string(plan.ordering);
    auto& t = j["treatments"] = Json::array();
    for (const auto& r : plan.treatments) t.push_back(r.label());
    j["matches_per_block"] = plan.matches_per_block;
  } else {
    j["rounds_per_match"] = plan.rounds_per_match;
    j["repetitions"] = plan.repetitions;
  }
  auto& ps = j["participants"] = Json::array();
  for (const auto& p : plan.participants) {
    ps.push_back({{"subject", p.subject}, {"agent", p.agent.name},
                  {"kind", to_string(p.agent.kind())}, {"role", to_string(p.role)}});
  }
  j["match_count"] = plan.matches.size();
  return j;
}

SessionPlan plan_rps_tournament(const std::vector<AgentSpec>& agents, int repetitions,
                                int rounds, bool include_self_play, std::string session_id,
                                std::uint64_t master_seed) {
  if (agents.empty()) throw ConfigError("tournament needs at least one agent");
  if (repetitions < 1 || rounds < 1) throw ConfigError("repetitions and rounds must be positive");
  SessionPlan plan;
  plan.session_id = std::move(session_id);
  plan.game = Game::Rps;
  plan.matrix = rps_modified_matrix();
  plan.rounds_per_match = rounds;
  plan.repetitions = repetitions;
  plan.master_seed = master_seed;
  plan.treatments = {ContinuationRule::rounds(rounds)};
  auto subjects = unique_subjects(agents);
  for (std::size_t i = 0; i < agents.size(); ++i) {
    plan.participants.push_back({subjects[i], agents[i], Role::None});
  }
  const int n = static_cast<int>(agents.size());
  int next = 1;
  for (int rep = 0; rep < repetitions; ++rep) {
    for (int i = 0; i < n; ++i) {
      for (int j = include_self_play ? i : i + 1; j < n; ++j) {
        plan.matches.push_back({match_id(next++), {i, j}, ContinuationRule::rounds(rounds), 0, rep});
      }
    }
  }
  if (plan.matches.empty()) throw ConfigError("tournament without self-play needs two agents");
  validate_plan(plan);
  return plan;
}

SessionPlan plan_bot_series(const AgentSpec& agent, const std::vector<AgentSpec>& bots,
                            int repetitions, int rounds, std::string session_id,
                            std::uint64_t master_seed) {
  if (bots.empty()) throw ConfigError("bot series needs at least one bot");
  if (repetitions < 1 || rounds < 1) throw ConfigError("repetitions and rounds must be positive");
  SessionPlan plan;
  plan.session_id = std::move(session_id);
  plan.game = Game::Rps;
  plan.matrix = rps_modified_matrix();
  plan.rounds_per_match = rounds;
  plan.repetitions = repetitions;
  plan.master_seed = master_seed;
  plan.treatments = {ContinuationRule::rounds(rounds)};
  std::vector<AgentSpec> everyone{agent};
  everyone.insert(everyone.end(), bots.begin(), bots.end());
  auto subjects = unique_subjects(everyone);
  for (std::size_t i = 0; i < everyone.size(); ++i) {
    plan.participants.push_back({subjects[i], everyone[i], Role::None});
  }
  int next = 1;
  for (int b = 0; b < static_cast<int>(bots.size()); ++b) {
    for (int rep = 0; rep < repetitions; ++rep) {
      plan.matches.push_back({match_id(next++), {0, b + 1}, ContinuationRule::rounds(rounds), 0, rep});
    }
  }
  validate_plan(plan);
  return plan;
}

SessionPlan plan_pd_pair(const AgentSpec& red, const AgentSpec& blue,
                         const std::vector<ContinuationRule>& treatments, int matches_per_block,
                         std::string session_id, std::uint64_t master_seed) {
  if (treatments.empty()) throw ConfigError("PD pair needs at least one treatment");
  if (matches_per_block < 1) throw ConfigError("matches per block must be positive");
  SessionPlan plan;
  plan.session_id = std::move(session_id);
  plan.game = Game::Pd;
  plan.matrix = pd_matrix();
  plan.master_seed = master_seed;
  plan.treatments = treatments;
  plan.matches_per_block = matches_per_block;
  auto subjects = unique_subjects({red, blue});
  plan.participants.push_back({subjects[0], red, Role::Red});
  plan.participants.push_back({subjects[1], blue, Role::Blue});
  int next = 1;
  for (int b = 0; b < static_cast<int>(treatments.size()); ++b) {
    for (int k = 0; k < matches_per_block; ++k) {
      plan.matches.push_back({match_id(next++), {0, 1}, treatments[static_cast<std::size_t>(b)], b, 0});
    }
  }
  validate_plan(plan);
  return plan;
}

AgentSpec resolve_agent(const std::string& name, Game game,
                        const std::set<std::string>& endpoints) {
  if (name == "human") return {name, game, HumanParams{}, name};
  if (builtin_catalog().count(name)) {
    AgentSpec spec = lookup_agent(name);
    if (spec.game != game) {
      throw ConfigError("agent '" + name + "' plays " + std::string(to_string(spec.game)) +
                        ", not " + std::string(to_string(game)));
    }
    return spec;
  }
  if (endpoints.count(name)) return {name, game, LlmParams{name}, name};
  throw ConfigError("unknown agent '" + name + "' (not human, a built-in bot or an endpoint)");
}

std::vector<ContinuationRule> pd_treatments(PdMode mode, Ordering ordering) {
  std::vector<ContinuationRule> t;
  if (mode == PdMode::Dice) {
    t = {ContinuationRule::dice(0), ContinuationRule::dice(0.5), ContinuationRule::dice(0.75)};
  } else {
    t = {ContinuationRule::finite(1), ContinuationRule::finite(2), ContinuationRule::finite(4)};
  }
  if (ordering == Ordering::Usd) std::reverse(t.begin(), t.end());
  return t;
}

SessionPlan plan_pd_session(const std::vector<AgentSpec>& agents, Ordering ordering,
                            PdMode mode, std::string session_id, std::uint64_t master_seed) {
  const int n = static_cast<int>(agents.size());
  if (n < 6 || n % 6 != 0) {
    throw ConfigError("PD sessions need a participant count divisible by 6, got " +
                      std::to_string(n));
  }
  const int half = n / 2;
  const int per_block = n / 6;
  SessionPlan plan;
  plan.session_id = std::move(session_id);
  plan.game = Game::Pd;
  plan.matrix = pd_matrix();
  plan.ordering = ordering;
  plan.master_seed = master_seed;
  plan.treatments = pd_treatments(mode, ordering);
  plan.matches_per_block = per_block;
  for (int i = 0; i < n; ++i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%s-%02d", i < half ? "red" : "blue", i % half);
    plan.participants.push_back({buf, agents[static_cast<std::size_t>(i)],
                                 i < half ? Role::Red : Role::Blue});
  }
  int next = 1;
  for (int m = 0; m < half; ++m) {
    const int block = m / per_block;
    for (int i = 0; i < half; ++i) {
      plan.matches.push_back({match_id(next++), {i, half + (i + m) % half},
                              plan.treatments[static_cast<std::size_t>(block)], block, 0});
    }
  }
  validate_plan(plan);
  return plan;
}

void check_narrative(const ContinuationRule& rule) {
  if (rule.mode != ContinuationRule::Mode::Dice) return;
  int k = continuing_faces(rule.delta);
  if (std::abs(rule.delta * 4 - k) > 1e-12 || (k != 0 && k != 2 && k != 3)) {
    throw ConfigError("dice prompts support delta 0, 0.5 and 0.75 only, got " + rule.label());
  }
}

SeatNarrator::SeatNarrator(const SessionPlan& plan, const PlannedMatch& match, int seat)
    : tmpl_(&PromptTemplate::bundled(plan.game)),
      game_(plan.game),
      role_(plan.seat(match, seat).role),
      seat_(seat),
      rule_(match.rule),
      block_(match.block),
      matches_per_block_(plan.matches_per_block) {
  check_narrative(rule_);
}

Bindings SeatNarrator::common() const {
  Bindings b{{"choice_format", choice_format(game_, role_)},
             {"matches", std::to_string(matches_per_block_)},
             {"part", ordinal(block_)}};
  if (game_ == Game::Rps) return b;
  b["role"] = role_name(role_);
  if (rule_.mode == ContinuationRule::Mode::Dice) {
    int k = continuing_faces(rule_.delta);
    if (k == 0) {
      b["rule"] = tmpl_->render("rule_single", b);
      b["duration"] = tmpl_->render("duration_single", b);
    } else {
      b["continue_faces"] = face_list(1, k);
      b["end_faces"] = face_list(k + 1, 4);
      b["rule"] = tmpl_->render("rule_dice", b);
      b["duration"] = tmpl_->render("duration_dice", b);
    }
  } else {
    b["horizon"] = std::to_string(rule_.horizon);
    const bool single = rule_.horizon == 1;
    b["rule"] = tmpl_->render(single ? "rule_single" : "rule_finite", b);
    b["duration"] = tmpl_->render(single ? "duration_single" : "duration_finite", b);
  }
  return b;
}

std::string SeatNarrator::system() const { return tmpl_->render("system", common()); }

std::string SeatNarrator::intro() const {
  if (game_ == Game::Rps) return {};
  return tmpl_->render("intro", common());
}

std::string SeatNarrator::decision(int round, int previous_die_face) const {
  Bindings b = common();
  b["trial"] = b["round"] = std::to_string(round);
  if (game_ == Game::Rps) return tmpl_->render("decision", b);
  if (round == 1) return tmpl_->render("new_match", b);
  if (rule_.mode == ContinuationRule::Mode::Dice) {
    b["face"] = std::to_string(previous_die_face);
    return tmpl_->render("dice_continue", b);
  }
  return tmpl_->render("finite_continue", b);
}

std::string SeatNarrator::feedback(const std::vector<RoundRecord>& rounds) const {
  if (rounds.empty()) throw ProtocolError("feedback before the first round");
  const auto s = static_cast<std::size_t>(seat_);
  const auto o = 1 - s;
  double total = 0, opponent_total = 0;
  for (const auto& r : rounds) {
    total += r.payoffs[s];
    opponent_total += r.payoffs[o];
  }
  Bindings b = common();
  b["total"] = format_points(total);
  b["opponent_total"] = format_points(opponent_total);
  const RoundRecord& last = rounds.back();
  if (game_ == Game::Rps) {
    Outcome out = *last.outcomes[s];
    b["outcome"] = out == Outcome::Win ? "won" : out == Outcome::Tie ? "tied" : "lost";
    b["own"] = display_name(last.actions[s], Role::None);
    b["opponent"] = display_name(last.actions[o], Role::None);
    b["payoff"] = format_points(last.payoffs[s]);
    b["opponent_payoff"] = format_points(last.payoffs[o]);
  } else {
    const Role opponent_role = role_ == Role::Red ? Role::Blue : Role::Red;
    std::vector<std::string> own, theirs;
    for (const auto& r : rounds) {
      own.push_back(display_name(r.actions[s], role_));
      theirs.push_back(display_name(r.actions[o], opponent_role));
    }
    b["own_choices"] = join(own, ", ");
    b["opponent_choices"] = join(theirs, ", ");
  }
  return tmpl_->render("feedback", b);
}

std::string SeatNarrator::closing(const std::vector<RoundRecord>& rounds, int die_face) const {
  if (game_ == Game::Rps) return {};
  double points = 0;
  for (const auto& r : rounds) points += r.payoffs[static_cast<std::size_t>(seat_)];
  Bindings b = common();
  b["points"] = format_points(points);
  if (rule_.mode == ContinuationRule::Mode::Dice) {
    b["face"] = std::to_string(die_face);
    return tmpl_->render("dice_end", b);
  }
  return tmpl_->render("finite_end", b);
}

GatewayPool::GatewayPool(const std::vector<ModelEndpoint>& endpoints) {
  for (const auto& e : endpoints) add(e);
}

void GatewayPool::add(const ModelEndpoint& e, std::shared_ptr<ChatBackend> backend) {
  if (gateways_.count(e.name)) throw ConfigError("duplicate endpoint '" + e.name + "'");
  if (!backend) backend = make_backend(e);
  gateways_.emplace(e.name, std::make_unique<Gateway>(e, std::move(backend)));
}

std::set<std::string> GatewayPool::names() const {
  std::set<std::string> out;
  for (const auto& [name, g] : gateways_) out.insert(name);
  return out;
}

Gateway& GatewayPool::at(const std::string& name) {
  auto it = gateways_.find(name);
  if (it == gateways_.end()) throw ConfigError("no endpoint named '" + name + "'");
  return *it->second;
}

std::vector<Envelope> MatchResult::envelopes() const {
  std::vector<Envelope> out;
  out.push_back(match_start_envelope(header));
  for (const auto& r : rounds) out.push_back(round_envelope(r));
  for (int s = 0; s < 2; ++s) {
    if (const auto& t = transcripts[static_cast<std::size_t>(s)]) {
      out.push_back(transcript_envelope(header.session, header.match, s,
                                        header.agents[static_cast<std::size_t>(s)], *t));
    }
  }
  out.push_back(match_end_envelope(header.session, header.match, footer));
  return out;
}

MatchEngine::MatchEngine(const SessionPlan& plan, const PlannedMatch& match,
                         GatewayPool* gateways)
    : plan_(plan),
      match_(match),
      gateways_(gateways),
      matrix_(plan.matrix),
      specs_{plan.seat(match, 0).agent, plan.seat(match, 1).agent},
      streams_{RandomStream(derive_seed(plan.master_seed, plan.session_id, match.match_id, "0")),
               RandomStream(derive_seed(plan.master_seed, plan.session_id, match.match_id, "1"))},
      continuation_(derive_seed(plan.master_seed, plan.session_id, match.match_id,
                                "continuation")) {
  auto& h = result_.header;
  h.session = plan.session_id;
  h.match = match.match_id;
  h.game = plan.game;
  h.treatment = match.rule.label();
  if (plan.game == Game::Pd) h.block = std::to_string(match.block + 1);
  for (int s = 0; s < 2; ++s) {
    const auto& p = plan.seat(match, s);
    const auto i = static_cast<std::size_t>(s);
    h.agents[i] = p.agent.name;
    h.roles[i] = p.role;
    h.subjects[i] = p.subject;
    auto k = p.agent.kind();
    if (k == AgentKind::Llm || k == AgentKind::Human) narrators_[i].emplace(plan, match, s);
    if (k == AgentKind::Llm) {
      if (!gateways_) throw ConfigError("LLM agent '" + p.agent.name + "' needs a gateway");
      gateways_->at(std::get<LlmParams>(p.agent.params).endpoint);
    }
  }
}

bool MatchEngine::is_human(int seat) const {
  return specs_.at(static_cast<std::size_t>(seat)).kind() == AgentKind::Human;
}

bool MatchEngine::pending(int seat) const {
  return started_ && !finished_ && !committed_.at(static_cast<std::size_t>(seat));
}

bool MatchEngine::ready() const { return started_ && committed_[0] && committed_[1]; }

void MatchEngine::open_seat(int seat) {
  auto i = static_cast<std::size_t>(seat);
  if (!narrators_[i]) return;
  transcripts_[i].add("system", narrators_[i]->system());
  auto intro = narrators_[i]->intro();
  if (!intro.empty()) transcripts_[i].add("user", intro);
}

void MatchEngine::start_round() {
  if (finished_) throw ProtocolError("match " + match_.match_id + " already finished");
  if (started_) throw ProtocolError("round " + std::to_string(round_) + " already started");
  if (round_ == 1) {
    open_seat(0);
    open_seat(1);
  }
  started_ = true;
  for (int s = 0; s < 2; ++s) {
    const auto i = static_cast<std::size_t>(s);
    const double draw = streams_[i].next();
    const auto& spec = specs_[i];
    if (spec.kind() == AgentKind::Human) {
      transcripts_[i].add("user", narrators_[i]->decision(round_, last_face_));
      continue;
    }
    if (spec.kind() == AgentKind::Llm) {
      auto& gateway = gateways_->at(std::get<LlmParams>(spec.params).endpoint);
      try {
        auto c = gateway.complete(transcripts_[i], narrators_[i]->decision(round_, last_face_),
                                  plan_.game, result_.header.roles[i],
                                  {plan_.session_id, match_.match_id, s});
        committed_[i] = c.action;
      } catch (const ProtocolViolation& e) {
        abort(Termination::ProtocolViolation, e.what());
        return;
      } catch (const GatewayError& e) {
        abort(Termination::GatewayFailure, e.what());
        return;
      }
      continue;
    }
    committed_[i] = policy_step(spec, states_[i], draw);
  }
}

void MatchEngine::commit(int seat, Action a) {
  const auto i = static_cast<std::size_t>(seat);
  if (seat < 0 || seat > 1) throw ProtocolError("no seat " + std::to_string(seat));
  if (finished_) throw ProtocolError("match " + match_.match_id + " already finished");
  if (!started_) throw ProtocolError("round " + std::to_string(round_) + " has not started");
  if (committed_[i]) {
    throw ProtocolError("seat " + std::to_string(seat) + " already chose in round " +
                        std::to_string(round_));
  }
  if (a.game() != plan_.game) throw ProtocolError("action from the wrong game");
  committed_[i] = a;
  if (narrators_[i] && specs_[i].kind() == AgentKind::Human) {
    transcripts_[i].add("assistant", "Choice: " + display_name(a, result_.header.roles[i]));
    transcripts_[i].parsed_choices.push_back(a);
  }
}

const RoundRecord& MatchEngine::resolve() {
  if (!ready()) throw ProtocolError("round " + std::to_string(round_) + " is not complete");
  RoundRecord r = make_round_record(matrix_, *committed_[0], *committed_[1]);
  r.session_id = plan_.session_id;
  r.match_id = match_.match_id;
  r.round_index = round_;
  r.game = plan_.game;
  r.treatment = match_.rule.label();
  r.agent_ids = {result_.header.agents[0], result_.header.agents[1]};
  r.roles = {result_.header.roles[0], result_.header.roles[1]};
  r.timestamp = utc_timestamp();
  bool ends = false;
  switch (match_.rule.mode) {
    case ContinuationRule::Mode::Dice: {
      auto d = sample_continuation(match_.rule, round_, continuation_.next());
      r.continues = d.continues;
      r.die_face = d.die_face;
      ends = !d.continues;
      break;
    }
    case ContinuationRule::Mode::Finite:
      r.continues = round_ < match_.rule.horizon;
      ends = !*r.continues;
      break;
    case ContinuationRule::Mode::Rounds:
      ends = round_ >= match_.rule.horizon;
      break;
  }
  states_[0].record(r.actions[0], r.actions[1], r.payoffs[0]);
  states_[1].record(r.actions[1], r.actions[0], r.payoffs[1]);
  totals_[0] += r.payoffs[0];
  totals_[1] += r.payoffs[1];
  last_face_ = r.die_face;
  result_.rounds.push_back(std::move(r));
  for (std::size_t i = 0; i < 2; ++i) {
    if (!narrators_[i]) continue;
    transcripts_[i].add("user", narrators_[i]->feedback(result_.rounds));
    if (ends) {
      auto closing = narrators_[i]->closing(result_.rounds, last_face_);
      if (!closing.empty()) transcripts_[i].add("user", closing);
    }
  }
  committed_ = {std::nullopt, std::nullopt};
  started_ = false;
  if (ends) {
    finish(match_.rule.mode == ContinuationRule::Mode::Dice ? Termination::DiceEnded
                                                            : Termination::HorizonReached,
           false, "");
  } else {
    ++round_;
  }
  return result_.rounds.back();
}

void MatchEngine::abort(Termination cause, const std::string& reason) {
  if (finished_) return;
  finish(cause, true, reason);
}

void MatchEngine::finish(Termination cause, bool aborted, const std::string& reason) {
  finished_ = true;
  started_ = false;
  result_.termination = cause;
  result_.footer.termination = std::string(to_string(cause));
  result_.footer.rounds = static_cast<int>(result_.rounds.size());
  result_.footer.totals = totals_;
  result_.footer.aborted = aborted;
  result_.footer.reason = reason;
  for (std::size_t i = 0; i < 2; ++i) {
    if (narrators_[i]) result_.transcripts[i] = transcripts_[i];
  }
}

const std::vector<ChatMessage>& MatchEngine::narrative(int seat) const {
  return transcripts_.at(static_cast<std::size_t>(seat)).messages;
}

MatchResult MatchEngine::result() const { return result_; }

MatchResult run_match(const SessionPlan& plan, const PlannedMatch& match, GatewayPool& gateways) {
  MatchEngine engine(plan, match, &gateways);
  if (engine.is_human(0) || engine.is_human(1)) {
    throw ConfigError("match " + match.match_id + " seats a human; use the session service");
  }
  while (!engine.finished()) {
    engine.start_round();
    if (engine.finished()) break;
    engine.resolve();
  }
  return engine.result();
}

std::vector<MatchResult> run_session(const SessionPlan& plan, GatewayPool& gateways,
                                     LogWriter* sink, const RunOptions& options) {
  validate_plan(plan);
  const std::size_t n = plan.matches.size();
  std::vector<std::optional<MatchResult>> slots(n);
  std::vector<std::exception_ptr> errors(n);
  std::mutex mu;
  std::condition_variable cv;
  std::atomic<std::size_t> next{0};

  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      std::optional<MatchResult> r;
      std::exception_ptr err;
      try {
        r = run_match(plan, plan.matches[i], gateways);
      } catch (...) {
        err = std::current_exception();
      }
      std::lock_guard lock(mu);
      slots[i] = std::move(r);
      errors[i] = err;
      cv.notify_all();
    }
  };

  const int jobs = std::max(1, std::min<int>(options.jobs, static_cast<int>(n)));
  std::vector<std::thread> threads;
  for (int j = 1; j < jobs; ++j) threads.emplace_back(worker);

  std::vector<MatchResult> results;
  std::exception_ptr failure;
  if (jobs == 1) worker();
  for (std::size_t i = 0; i < n && !failure; ++i) {
    std::unique_lock lock(mu);
    cv.wait(lock, [&] { return slots[i].has_value() || errors[i]; });
    if (errors[i]) {
      failure = errors[i];
      next = n;  // stop handing out work
      break;
    }
    MatchResult r = std::move(*slots[i]);
    lock.unlock();
    if (sink) {
      for (auto& e : r.envelopes()) sink->append(std::move(e));
    }
    if (options.on_match) options.on_match(r);
    results.push_back(std::move(r));
  }
  for (auto& t : threads) t.join();
  if (failure) std::rethrow_exception(failure);
  return results;
}

}  // namespace boundedplay

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

#include "boundedplay/session.hpp"

#include <httplib.h>

#include <algorithm>
#include <condition_variable>
#include <cstdio>
#include <set>
#include <thread>

#include "boundedplay/errors.hpp"
#include "boundedplay/format.hpp"

namespace boundedplay {

int SessionError::http_status() const {
  switch (kind_) {
    case Kind::BadRequest: return 400;
    case Kind::Unauthorized: return 401;
    case Kind::NotFound: return 404;
    case Kind::Conflict: return 409;
    case Kind::Gone: return 410;
    case Kind::Invalid: return 422;
  }
  return 500;
}

std::string_view to_string(LiveState s) {
  switch (s) {
    case LiveState::AwaitingChoices: return "awaiting_choices";
    case LiveState::RevealingFeedback: return "revealing_feedback";
    case LiveState::Finished: return "finished";
    case LiveState::Abandoned: return "abandoned";
  }
  return "?";
}

namespace {

using Kind = SessionError::Kind;

const std::set<std::string> kFragmentKeys{"session",    "game",       "agents",
                                          "rounds",     "repetitions", "treatments",
                                          "matches_per_block", "mode", "ordering",
                                          "seed",       "matrix"};

template <typename T>
T get_or(const Json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const Json::exception&) {
    throw ConfigError(std::string("fragment key '") + key + "' has the wrong type");
  }
}

std::vector<Action> all_actions(Game game) {
  std::vector<Action> out;
  for (int i = 0; i < action_count(game); ++i) out.push_back(Action::from_index(game, i));
  return out;
}

std::string action_list(Game game, Role role) {
  std::string out;
  for (auto a : all_actions(game)) {
    if (!out.empty()) out += ", ";
    out += display_name(a, role);
  }
  return out;
}

}  // namespace

SessionPlan plan_from_fragment(const Json& fragment, const std::set<std::string>& endpoints,
                               const std::string& default_session) {
  if (!fragment.is_object()) throw ConfigError("manifest fragment must be a JSON object");
  for (const auto& [key, value] : fragment.items()) {
    if (!kFragmentKeys.count(key)) throw ConfigError("unknown fragment key '" + key + "'");
  }
  if (!fragment.contains("game")) throw ConfigError("fragment needs \"game\"");
  const Game game = parse_game(get_or<std::string>(fragment, "game", ""));
  const auto names = get_or<std::vector<std::string>>(fragment, "agents", {});
  if (names.size() < 2) throw ConfigError("fragment needs at least two agents");
  std::vector<AgentSpec> agents;
  for (const auto& n : names) agents.push_back(resolve_agent(n, game, endpoints));
  const auto session = get_or<std::string>(fragment, "session", default_session);
  const auto seed = get_or<std::uint64_t>(fragment, "seed", 0);

  SessionPlan plan;
  if (game == Game::Rps) {
    plan = plan_bot_series(agents[0], {agents.begin() + 1, agents.end()},
                           get_or<int>(fragment, "repetitions", 1),
                           get_or<int>(fragment, "rounds", 50), session, seed);
    if (fragment.contains("matrix")) {
      auto name = get_or<std::string>(fragment, "matrix", "");
      auto m = bundled_matrix(name);
      if (!m) throw ConfigError("unknown matrix '" + name + "'");
      plan.matrix = *m;
    }
  } else if (fragment.contains("mode")) {
    plan = plan_pd_session(agents, parse_ordering(get_or<std::string>(fragment, "ordering", "normal")),
                           parse_pd_mode(get_or<std::string>(fragment, "mode", "")), session, seed);
  } else {
    if (agents.size() != 2) throw ConfigError("a PD pair fragment names exactly two agents");
    std::vector<ContinuationRule> rules;
    for (const auto& t : get_or<std::vector<std::string>>(fragment, "treatments", {"dice:0.75"})) {
      rules.push_back(ContinuationRule::parse(t));
    }
    plan = plan_pd_pair(agents[0], agents[1], rules, get_or<int>(fragment, "matches_per_block", 1),
                        session, seed);
  }
  validate_plan(plan);
  return plan;
}

struct Snapshot {
  std::map<std::string, Json> views;
  Json summary;
};

class LiveSession {
 public:
  LiveSession(SessionPlan p, GatewayPool* gateways, std::unique_ptr<LogWriter> writer,
              std::chrono::steady_clock::time_point now)
      : plan_(std::make_unique<SessionPlan>(std::move(p))),
        gateways_(gateways),
        writer_(std::move(writer)),
        engines_(plan_->matches.size()),
        done_(plan_->matches.size(), false),
        last_activity_(now) {
    for (std::size_t i = 0; i < plan_->participants.size(); ++i) {
      if (plan_->participants[i].agent.kind() == AgentKind::Human) {
        humans_[plan_->participants[i].subject] = static_cast<int>(i);
      }
    }
    if (humans_.empty()) {
      throw ConfigError("plan has no human slot; run automated plans with the CLI");
    }
    for (const auto& m : plan_->matches) {
      if (m.seats[0] == m.seats[1] && humans_.count(plan_->seat(m, 0).subject)) {
        throw ConfigError("a human slot cannot occupy both seats of match " + m.match_id);
      }
    }
    std::lock_guard lock(write_mu_);
    advance();
    publish();
  }

  const SessionPlan& plan() const { return *plan_; }
  const std::string& id() const { return plan_->session_id; }

  SubmitResult submit(const std::string& slot, const std::string& label,
                      std::optional<int> round, std::chrono::steady_clock::time_point now) {
    std::lock_guard lock(write_mu_);
    if (state_ == LiveState::Abandoned) throw SessionError(Kind::Gone, "session " + id() + " expired");
    if (state_ == LiveState::Finished) throw SessionError(Kind::Gone, "session " + id() + " is finished");
    const int p = participant(slot);
    const auto i = current_match(p);
    if (!engines_[i]) {
      throw SessionError(Kind::Conflict, "match " + plan_->matches[i].match_id +
                                             " waits for other matches to finish");
    }
    MatchEngine& e = *engines_[i];
    const int seat = seat_of(i, p);
    if (round && *round != e.round()) {
      throw SessionError(Kind::Conflict, "round " + std::to_string(*round) +
                                             " is not open; current round is " +
                                             std::to_string(e.round()));
    }
    if (!e.pending(seat)) {
      throw SessionError(Kind::Conflict, "slot " + slot + " already chose in round " +
                                             std::to_string(e.round()));
    }
    const Role role = plan_->participants[static_cast<std::size_t>(p)].role;
    auto action = parse_action(label, plan_->game, role);
    if (!action) {
      throw SessionError(Kind::Invalid, "'" + label + "' is not a valid action; expected " +
                                            action_list(plan_->game, role));
    }
    SubmitResult out{true, false, plan_->matches[i].match_id, e.round()};
    e.commit(seat, *action);
    out.round_complete = e.ready();
    last_activity_ = now;
    advance();
    publish();
    return out;
  }

  bool expire(std::chrono::steady_clock::time_point now, std::chrono::milliseconds timeout) {
    std::lock_guard lock(write_mu_);
    if (state_ != LiveState::AwaitingChoices || now - last_activity_ <= timeout) return false;
    const auto idle = std::chrono::duration_cast<std::chrono::seconds>(now - last_activity_);
    for (std::size_t i = 0; i < engines_.size(); ++i) {
      if (engines_[i] && !done_[i]) {
        engines_[i]->abort(Termination::HumanAbandoned,
                           "no human input for " + std::to_string(idle.count()) + " s");
        done_[i] = true;
      }
    }
    state_ = LiveState::Abandoned;
    flush(true);
    ++version_;
    publish();
    return true;
  }

  std::shared_ptr<const Snapshot> snapshot() const {
    std::lock_guard lock(snap_mu_);
    return snapshot_;
  }

  std::vector<Envelope> log() const {
    std::lock_guard lock(write_mu_);
    return log_;
  }

  Json instructions() const {
    Json out = Json::object();
    for (const auto& [slot, p] : humans_) {
      for (std::size_t i = 0; i < plan_->matches.size(); ++i) {
        const int seat = seat_of(i, p);
        if (seat < 0) continue;
        SeatNarrator n(*plan_, plan_->matches[i], seat);
        out[slot] = {{"system", n.system()}, {"intro", n.intro()}};
        break;
      }
    }
    return out;
  }

 private:
  int participant(const std::string& slot) const {
    auto it = humans_.find(slot);
    if (it != humans_.end()) return it->second;
    for (const auto& p : plan_->participants) {
      if (p.subject == slot) throw SessionError(Kind::BadRequest, "slot " + slot + " is not a human seat");
    }
    throw SessionError(Kind::NotFound, "no slot " + slot + " in session " + id());
  }

  int seat_of(std::size_t match, int p) const {
    const auto& seats = plan_->matches[match].seats;
    if (seats[0] == p) return 0;
    if (seats[1] == p) return 1;
    return -1;
  }

  // First unfinished match of participant p, else its last match.
  std::size_t current_match(int p) const {
    std::optional<std::size_t> last;
    for (std::size_t i = 0; i < plan_->matches.size(); ++i) {
      if (seat_of(i, p) < 0) continue;
      if (!done_[i]) return i;
      last = i;
    }
    if (!last) throw SessionError(Kind::NotFound, "slot has no matches");
    return *last;
  }

  bool blocked(std::size_t i) const {
    const auto& seats = plan_->matches[i].seats;
    for (std::size_t j = 0; j < i; ++j) {
      if (done_[j]) continue;
      const auto& other = plan_->matches[j].seats;
      for (int a : seats) {
        if (a == other[0] || a == other[1]) return true;
      }
    }
    return false;
  }

  // Runs automated work until every open match waits for a human.
  void advance() {
    bool progress = true;
    while (progress) {
      progress = false;
      for (std::size_t i = 0; i < engines_.size(); ++i) {
        if (done_[i]) continue;
        if (!engines_[i]) {
          if (blocked(i)) continue;
          engines_[i] = std::make_unique<MatchEngine>(*plan_, plan_->matches[i], gateways_);
        }
        MatchEngine& e = *engines_[i];
        if (e.finished()) {
          done_[i] = true;
        } else if (!e.in_round()) {
          e.start_round();
        } else if (e.ready()) {
          e.resolve();
        } else {
          continue;
        }
        progress = true;
      }
    }
    flush(false);
    ++version_;
    if (std::all_of(done_.begin(), done_.end(), [](bool d) { return d; })) {
      state_ = LiveState::Finished;
    }
  }

  // Logs finished matches in plan order; on abandonment unstarted matches
  // are skipped.
  void flush(bool skip_unstarted) {
    while (flushed_ < done_.size()) {
      if (!done_[flushed_]) {
        if (skip_unstarted && !engines_[flushed_]) {
          ++flushed_;
          continue;
        }
        break;
      }
      for (auto& env : engines_[flushed_]->result().envelopes()) append(std::move(env));
      ++flushed_;
    }
  }

  void append(Envelope e) {
    if (e.timestamp.empty()) e.timestamp = utc_timestamp();
    if (writer_) {
      e.seq = writer_->append(e).seq;
    } else {
      e.seq = ++seq_[e.match];
      validate_envelope(e);
    }
    log_.push_back(std::move(e));
  }

  Json view(const std::string& slot, int p) const {
    const auto i = current_match(p);
    const auto& pm = plan_->matches[i];
    const int seat = seat_of(i, p);
    const Role role = plan_->participants[static_cast<std::size_t>(p)].role;
    Json v;
    v["session"] = id();
    v["slot"] = slot;
    v["state"] = to_string(state_);
    v["version"] = version_;
    v["game"] = to_string(plan_->game);
    v["role"] = to_string(role);
    v["match"] = pm.match_id;
    v["treatment"] = pm.rule.label();
    int number = 0, count = 0;
    double session_points = 0;
    for (std::size_t j = 0; j < plan_->matches.size(); ++j) {
      const int s = seat_of(j, p);
      if (s < 0) continue;
      ++count;
      if (j <= i) ++number;
      if (engines_[j]) session_points += engines_[j]->total(s);
    }
    v["match_number"] = number;
    v["match_count"] = count;
    v["session_points"] = session_points;

    Json actions = Json::array(), messages = Json::array();
    Json own = Json::array(), opp = Json::array();
    auto put_lists = [&] {
      v["actions"] = actions;
      v["messages"] = messages;
      v["history"] = {{"own", own}, {"opponent", opp}};
    };
    if (!engines_[i]) {
      v["phase"] = state_ == LiveState::Abandoned ? "session_ended" : "waiting_for_match";
      v["round"] = 0;
      v["totals"] = {{"own", 0}, {"opponent", 0}};
      put_lists();
      return v;
    }
    const MatchEngine& e = *engines_[i];
    const Role opp_role = plan_->seat(pm, 1 - seat).role;
    for (const auto& m : e.narrative(seat)) messages.push_back({{"role", m.role}, {"text", m.text}});
    for (const auto& r : e.rounds()) {
      own.push_back(display_name(r.actions[static_cast<std::size_t>(seat)], role));
      opp.push_back(display_name(r.actions[static_cast<std::size_t>(1 - seat)], opp_role));
    }
    v["round"] = e.round();
    v["totals"] = {{"own", e.total(seat)}, {"opponent", e.total(1 - seat)}};
    SeatNarrator narrator(*plan_, pm, seat);
    if (!e.rounds().empty()) {
      v["feedback"] = narrator.feedback(e.rounds());
      const auto& last = e.rounds().back();
      if (last.continues) {
        v["continuation"] = {{"continues", *last.continues}, {"die_face", last.die_face}};
      }
    }
    const bool pending = e.is_human(seat) && e.pending(seat);
    if (pending) {
      for (auto a : all_actions(plan_->game)) actions.push_back(display_name(a, role));
    }
    if (e.finished()) {
      auto r = e.result();
      v["termination"] = r.footer.termination;
      if (!r.aborted()) v["closing"] = narrator.closing(e.rounds(), e.last_die_face());
      v["phase"] = state_ == LiveState::Finished || state_ == LiveState::Abandoned ||
                           number == count
                       ? "session_ended"
                       : "match_ended";
    } else {
      v["phase"] = pending ? "awaiting_choice" : "waiting_for_opponent";
    }
    put_lists();
    return v;
  }

  void publish() {
    auto snap = std::make_shared<Snapshot>();
    for (const auto& [slot, p] : humans_) snap->views[slot] = view(slot, p);
    std::size_t finished = 0;
    for (bool d : done_) finished += d;
    Json slots = Json::array();
    for (const auto& [slot, p] : humans_) slots.push_back(slot);
    snap->summary = {{"session", id()},
                     {"game", to_string(plan_->game)},
                     {"state", to_string(state_)},
                     {"slots", slots},
                     {"matches", plan_->matches.size()},
                     {"finished_matches", finished}};
    std::lock_guard lock(snap_mu_);
    snapshot_ = std::move(snap);
  }

  std::unique_ptr<SessionPlan> plan_;  // engines hold references into it
  GatewayPool* gateways_;
  std::unique_ptr<LogWriter> writer_;
  std::map<std::string, int> humans_;
  std::vector<std::unique_ptr<MatchEngine>> engines_;
  std::vector<bool> done_;
  std::size_t flushed_ = 0;
  std::vector<Envelope> log_;
  std::map<std::string, std::int64_t> seq_;
  LiveState state_ = LiveState::AwaitingChoices;
  std::int64_t version_ = 0;
  std::chrono::steady_clock::time_point last_activity_;
  mutable std::mutex write_mu_;
  mutable std::mutex snap_mu_;
  std::shared_ptr<const Snapshot> snapshot_;
};

SessionRegistry::SessionRegistry(GatewayPool* gateways, SessionOptions options)
    : gateways_(gateways), options_(std::move(options)) {}

SessionRegistry::~SessionRegistry() = default;

std::chrono::steady_clock::time_point SessionRegistry::now() const {
  return options_.clock ? options_.clock() : std::chrono::steady_clock::now();
}

Json SessionRegistry::create(const Json& fragment) {
  std::string fallback;
  {
    std::unique_lock lock(mu_);
    char buf[32];
    std::snprintf(buf, sizeof buf, "live-%04d", next_id_++);
    fallback = buf;
  }
  SessionPlan plan;
  try {
    plan = plan_from_fragment(fragment, gateways_ ? gateways_->names() : std::set<std::string>{},
                              fallback);
  } catch (const ConfigError& e) {
    throw SessionError(Kind::BadRequest, e.what());
  } catch (const DomainError& e) {
    throw SessionError(Kind::BadRequest, e.what());
  }
  return open(std::move(plan), fragment);
}

Json SessionRegistry::create(SessionPlan plan) { return open(std::move(plan), Json::object()); }

Json SessionRegistry::open(SessionPlan plan, const Json& config) {
  const std::string id = plan.session_id;
  if (id.empty() || id.find_first_of("/\\?#& ") != std::string::npos || id[0] == '.') {
    throw SessionError(Kind::BadRequest, "session id '" + id + "' is not URL and file safe");
  }
  {
    std::unique_lock lock(mu_);
    if (sessions_.count(id)) throw SessionError(Kind::Conflict, "session " + id + " exists");
    sessions_[id] = nullptr;  // reserved while the first rounds run
  }
  std::shared_ptr<LiveSession> s;
  try {
    for (const auto& p : plan.participants) {
      if (p.agent.kind() != AgentKind::Llm) continue;
      const auto& name = std::get<LlmParams>(p.agent.params).endpoint;
      if (!gateways_ || !gateways_->contains(name)) {
        throw ConfigError("no endpoint named '" + name + "'");
      }
    }
    std::unique_ptr<LogWriter> writer;
    if (!options_.log_dir.empty()) {
      std::filesystem::create_directories(options_.log_dir);
      RunManifest m;
      m.created_at = utc_timestamp();
      m.command = "serve";
      m.master_seed = plan.master_seed;
      m.config = config;
      m.plan = plan_to_json(plan);
      for (const auto& p : plan.participants) {
        if (p.agent.kind() != AgentKind::Llm) continue;
        const auto& e = gateways_->at(std::get<LlmParams>(p.agent.params).endpoint).endpoint();
        if (std::none_of(m.endpoints.begin(), m.endpoints.end(),
                         [&](const ModelEndpoint& x) { return x.name == e.name; })) {
          m.endpoints.push_back(e);
        }
      }
      write_manifest(m, options_.log_dir / (id + ".manifest.json"));
      writer = std::make_unique<LogWriter>(options_.log_dir / (id + ".jsonl"));
    }
    s = std::make_shared<LiveSession>(std::move(plan), gateways_, std::move(writer), now());
  } catch (const ConfigError& e) {
    std::unique_lock lock(mu_);
    sessions_.erase(id);
    throw SessionError(Kind::BadRequest, e.what());
  } catch (...) {
    std::unique_lock lock(mu_);
    sessions_.erase(id);
    throw;
  }
  {
    std::unique_lock lock(mu_);
    sessions_[id] = s;
  }
  auto snap = s->snapshot();
  return {{"session", id},
          {"game", to_string(s->plan().game)},
          {"slots", snap->summary["slots"]},
          {"matches", s->plan().matches.size()},
          {"instructions", s->instructions()}};
}

std::shared_ptr<LiveSession> SessionRegistry::find(const std::string& session) const {
  std::shared_lock lock(mu_);
  auto it = sessions_.find(session);
  if (it == sessions_.end() || !it->second) {
    throw SessionError(Kind::NotFound, "no session " + session);
  }
  return it->second;
}

SubmitResult SessionRegistry::submit(const std::string& session, const std::string& slot,
                                     const std::string& action, std::optional<int> round) {
  return find(session)->submit(slot, action, round, now());
}

Json SessionRegistry::state(const std::string& session, const std::string& slot) const {
  auto snap = find(session)->snapshot();
  auto it = snap->views.find(slot);
  if (it == snap->views.end()) {
    throw SessionError(Kind::NotFound, "no human slot " + slot + " in session " + session);
  }
  return it->second;
}

Json SessionRegistry::list() const {
  std::vector<std::shared_ptr<LiveSession>> all;
  {
    std::shared_lock lock(mu_);
    for (const auto& [id, s] : sessions_) {
      if (s) all.push_back(s);
    }
  }
  Json out = Json::array();
  for (const auto& s : all) out.push_back(s->snapshot()->summary);
  return {{"sessions", out}};
}

int SessionRegistry::expire_idle() {
  std::vector<std::shared_ptr<LiveSession>> all;
  {
    std::shared_lock lock(mu_);
    for (const auto& [id, s] : sessions_) {
      if (s) all.push_back(s);
    }
  }
  int n = 0;
  const auto t = now();
  for (const auto& s : all) n += s->expire(t, options_.idle_timeout);
  return n;
}

std::vector<Envelope> SessionRegistry::log(const std::string& session) const {
  return find(session)->log();
}

// ---------------------------------------------------------------------------

struct SessionServer::Impl {
  Impl(SessionRegistry& r, ServerOptions o) : registry(r), options(std::move(o)) {}

  void reap_loop() {
    std::unique_lock lock(mu);
    while (!stopping) {
      cv.wait_for(lock, options.reap_interval, [&] { return stopping; });
      if (stopping) break;
      lock.unlock();
      registry.expire_idle();
      lock.lock();
    }
  }

  void routes();
  int bind();

  SessionRegistry& registry;
  ServerOptions options;
  httplib::Server server;
  std::thread listener;
  std::thread reaper;
  std::mutex mu;
  std::condition_variable cv;
  bool stopping = false;
};

namespace {

void send_json(httplib::Response& res, int status, const Json& body) {
  res.status = status;
  res.set_content(body.dump() + "\n", "application/json");
}

template <typename F>
httplib::Server::Handler guarded(F f) {
  return [f](const httplib::Request& req, httplib::Response& res) {
    try {
      f(req, res);
    } catch (const SessionError& e) {
      send_json(res, e.http_status(), {{"error", e.what()}});
    } catch (const Json::exception& e) {
      send_json(res, 400, {{"error", std::string("bad JSON body: ") + e.what()}});
    } catch (const std::exception& e) {
      send_json(res, 500, {{"error", e.what()}});
    }
  };
}

}  // namespace

void SessionServer::Impl::routes() {
  server.set_pre_routing_handler([this](const httplib::Request& req, httplib::Response& res) {
    if (!options.token.empty() && req.get_header_value("X-Session-Token") != options.token) {
      send_json(res, 401, {{"error", "missing or wrong X-Session-Token"}});
      return httplib::Server::HandlerResponse::Handled;
    }
    return httplib::Server::HandlerResponse::Unhandled;
  });
  server.Post("/sessions", guarded([this](const httplib::Request& req, httplib::Response& res) {
    send_json(res, 201, registry.create(Json::parse(req.body)));
  }));
  server.Get("/sessions", guarded([this](const httplib::Request&, httplib::Response& res) {
    send_json(res, 200, registry.list());
  }));
  server.Get(R"(/sessions/([^/]+)/state)",
             guarded([this](const httplib::Request& req, httplib::Response& res) {
               if (!req.has_param("slot")) throw SessionError(Kind::BadRequest, "missing ?slot=");
               send_json(res, 200, registry.state(req.matches[1], req.get_param_value("slot")));
             }));
  server.Post(R"(/sessions/([^/]+)/choices)",
              guarded([this](const httplib::Request& req, httplib::Response& res) {
                auto body = Json::parse(req.body);
                if (!body.is_object() || !body.contains("slot") || !body.contains("action")) {
                  throw SessionError(Kind::BadRequest, "body needs \"slot\" and \"action\"");
                }
                std::optional<int> round;
                if (body.contains("round")) round = body.at("round").get<int>();
                auto r = registry.submit(req.matches[1], body.at("slot").get<std::string>(),
                                         body.at("action").get<std::string>(), round);
                send_json(res, 200, {{"accepted", r.accepted},
                                     {"round_complete", r.round_complete},
                                     {"match", r.match},
                                     {"round", r.round}});
              }));
}

int SessionServer::Impl::bind() {
  routes();
  int port = options.port;
  if (port == 0) {
    port = server.bind_to_any_port(options.host);
  } else if (!server.bind_to_port(options.host, port)) {
    port = -1;
  }
  if (port < 0) {
    throw std::runtime_error("cannot bind " + options.host + ":" + std::to_string(options.port));
  }
  reaper = std::thread([this] { reap_loop(); });
  return port;
}

SessionServer::SessionServer(SessionRegistry& registry, ServerOptions options)
    : impl_(std::make_unique<Impl>(registry, std::move(options))) {}

SessionServer::~SessionServer() { stop(); }

int SessionServer::start() {
  int port = impl_->bind();
  impl_->listener = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
  return port;
}

void SessionServer::run() {
  impl_->bind();
  impl_->server.listen_after_bind();
}

void SessionServer::stop() {
  impl_->server.stop();
  {
    std::lock_guard lock(impl_->mu);
    impl_->stopping = true;
  }
  impl_->cv.notify_all();
  if (impl_->listener.joinable()) impl_->listener.join();
  if (impl_->reaper.joinable()) impl_->reaper.join();
}

}  // namespace boundedplay
